"""Majorana machinery for the transverse-field Ising chain.

Jordan-Wigner convention, Majorana index ``2j`` for ``gamma_A,j`` and ``2j+1``
for ``gamma_B,j``::

    gamma_A,j = (prod_{k<j} X_k) Z_j
    gamma_B,j = (prod_{k<j} X_k) Y_j

so that ``X_j = i gamma_A,j gamma_B,j`` and
``Z_j Z_{j+1} = i gamma_B,j gamma_A,j+1``.  A quadratic operator is written as
``G = (i/4) sum_ab g_ab gamma_a gamma_b`` with ``g`` antisymmetric.  The
covariance of a state is ``Gamma_ab = i <gamma_a gamma_b>`` for ``a != b``.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm


def pfaffian(A: np.ndarray) -> complex:
    """Pfaffian of an antisymmetric matrix by pivoted Parlett-Reid elimination."""
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if n % 2:
        return 0.0 + 0j
    pf = 1.0 + 0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.abs(A[k + 1 :, k]).argmax())
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0.0:
            return 0.0 + 0j
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2 :] / A[k, k + 1]
            col = A[k + 2 :, k + 1].copy()
            A[k + 2 :, k + 2 :] += np.outer(tau, col) - np.outer(col, tau)
    return complex(pf)


def pauli_string_to_majoranas(ops: Mapping[int, str]) -> tuple[complex, list[int]]:
    """Rewrite a Pauli string as ``phase * gamma_{i_1} ... gamma_{i_k}`` (sorted, no repeats)."""
    factors: list[tuple[complex, list[int]]] = []
    for j in sorted(ops):
        p = ops[j].upper()
        if p == "I":
            continue
        if p == "X":
            factors.append((1j, [2 * j, 2 * j + 1]))
            continue
        string = []
        for k in range(j):
            string += [2 * k, 2 * k + 1]
        coef = 1j**j
        last = 2 * j if p == "Z" else 2 * j + 1
        factors.append((coef, string + [last]))
    phase = 1.0 + 0j
    seq: list[int] = []
    for c, idx in factors:
        phase *= c
        seq += idx
    # bubble sort with anticommutation signs, cancelling gamma^2 = 1
    out: list[int] = []
    for g in seq:
        out.append(g)
        pos = len(out) - 1
        while pos > 0 and out[pos - 1] > out[pos]:
            out[pos - 1], out[pos] = out[pos], out[pos - 1]
            phase = -phase
            pos -= 1
        if pos > 0 and out[pos - 1] == out[pos]:
            del out[pos - 1 : pos + 1]
    return phase, out


def majorana_expectation(Gamma: np.ndarray, idx: Sequence[int]) -> complex:
    """``<gamma_{i_1} ... gamma_{i_2k}>`` for distinct increasing indices (Wick)."""
    idx = list(idx)
    if not idx:
        return 1.0 + 0j
    if len(idx) % 2:
        return 0.0 + 0j
    sub = -1j * Gamma[np.ix_(idx, idx)]
    return pfaffian(sub)


def pauli_expectation(Gamma: np.ndarray, ops: Mapping[int, str]) -> complex:
    """Expectation of an open-chain Pauli string in a parity-even Gaussian state."""
    phase, idx = pauli_string_to_majoranas(ops)
    return phase * majorana_expectation(Gamma, idx)


def tfim_majorana_hamiltonian(L: int, J: float = 1.0, h: float = 1.0, parity: int = 1, periodic=True) -> np.ndarray:
    """Antisymmetric ``g`` of ``-J sum Z Z - h sum X`` restricted to a parity sector.

    ``parity=+1`` gives antiperiodic fermions (the sector of the ground state).
    """
    g = np.zeros((2 * L, 2 * L))

    def add(a, b, val):
        # -i * val * gamma_a gamma_b  ->  g_ab = -2 val
        g[a, b] += -2.0 * val
        g[b, a] += 2.0 * val

    for j in range(L):
        add(2 * j, 2 * j + 1, h)
    for j in range(L - 1):
        add(2 * j + 1, 2 * j + 2, J)
    if periodic and L > 1:
        # Z_{L-1} Z_0 = -i P gamma_B,L-1 gamma_A,0
        add(2 * L - 1, 0, -parity * J)
    return g


def x_field_generator(L: int, alpha: float | Sequence[float]) -> np.ndarray:
    """``g`` for ``sum_j (alpha_j / 2) X_j``."""
    a = np.broadcast_to(np.asarray(alpha, dtype=float), (L,))
    g = np.zeros((2 * L, 2 * L))
    for j in range(L):
        g[2 * j, 2 * j + 1] = a[j]
        g[2 * j + 1, 2 * j] = -a[j]
    return g


def ground_annihilators(g: np.ndarray) -> tuple[float, np.ndarray]:
    """Energy and annihilator coefficient columns of the Gaussian ground state of ``g``.

    Lowering operators ``b = sum_a w_a gamma_a`` satisfy ``[G, b] = -eps b``,
    that is ``(i g) w = -eps w``.
    """
    eps, vecs = np.linalg.eigh(1j * g)
    n = g.shape[0] // 2
    W = vecs[:, :n] / np.sqrt(2.0)
    energy = float(eps[:n].sum() / 2.0)
    return energy, W


def orthonormalize_annihilators(W: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(W)
    return q / np.sqrt(2.0)


def covariance_from_annihilators(W: np.ndarray) -> np.ndarray:
    W = orthonormalize_annihilators(W)
    C = 4.0 * W.conj() @ W.T
    Gamma = 1j * (C - np.eye(C.shape[0]))
    Gamma = 0.5 * (Gamma - Gamma.T)
    return Gamma.real if np.abs(Gamma.imag).max() < 1e-10 else Gamma


def deform_annihilators(W: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Annihilators of ``exp(G) |psi>`` given those of ``|psi>``."""
    return orthonormalize_annihilators(expm(1j * g) @ W)


def x_deformed_covariance(L: int, alpha: float, J: float = 1.0, h: float = 1.0) -> np.ndarray:
    """Covariance of ``exp((alpha/2) sum X) |ground state>`` on a periodic chain."""
    _, W = ground_annihilators(tfim_majorana_hamiltonian(L, J, h, parity=1))
    if alpha != 0.0:
        W = deform_annihilators(W, x_field_generator(L, alpha))
    return covariance_from_annihilators(W)


def covariance_parity(Gamma: np.ndarray) -> float:
    """Fermion parity ``<prod_j X_j>`` of a pure Gaussian state."""
    L = Gamma.shape[0] // 2
    return float(np.real((1j) ** L * pfaffian(-1j * Gamma)))


def gaussian_fidelity(G1: np.ndarray, G2: np.ndarray) -> float:
    """``|<psi_1|psi_2>|^2`` for pure Gaussian states of equal parity."""
    return float(np.sqrt(abs(np.linalg.det(0.5 * (G1 + G2)))))


def block_entropies(Gamma: np.ndarray, sites: Sequence[int], n: float = 1.0) -> float:
    """Renyi entropy of a set of sites from the covariance restricted to them."""
    idx = []
    for j in sites:
        idx += [2 * j, 2 * j + 1]
    return entropy_from_covariance(Gamma[np.ix_(idx, idx)], n)


def entropy_from_covariance(Gsub: np.ndarray, n: float = 1.0) -> float:
    nu = np.linalg.eigvalsh(1j * Gsub)
    nu = np.clip(np.abs(nu[nu.size // 2 :]), 0.0, 1.0)
    p = np.stack([(1 + nu) / 2, (1 - nu) / 2])
    eps = 1e-14
    if n == 1:
        lp = np.log(np.where(p > eps, p, 1.0))
        return float(-(p * lp).sum())
    if np.isinf(n):
        return float(-np.log(p.max(axis=0)).sum())
    return float(np.log((p**n).sum(axis=0)).sum() / (1 - n))
