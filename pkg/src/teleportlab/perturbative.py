"""Large-alpha expansion around Bob's product state.

Strange correlators ``q(J) = <a;n| O_J(n_perp) |psi_A> / <a;n|psi_A>`` and the
connected ``V_jk = q(j,k) - q(j) q(k)`` control Bob's state when
``t = tan u = exp(-alpha)`` is small.  Exactly,

    |psi_a> propto sum_J (i t)^{|J|} q(J) O_J(n_perp) |b;n>

so truncating at ``|J| <= 2`` is the expansion used below.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ising import apply_x_sum, zz_diagonal
from .protocol import OutcomeString, ProtocolSpec
from .state import (
    AxisLike,
    Statevector,
    StateError,
    as_axes,
    rotate_to_frame,
)


@dataclass
class StrangeCorrelators:
    """First- and second-order strange correlators for one outcome string."""

    q1: np.ndarray
    q2: np.ndarray
    V: np.ndarray
    outcome: OutcomeString
    axes: tuple
    frame_amplitudes: np.ndarray
    uncontrolled: bool

    @property
    def L(self) -> int:
        return self.q1.size

    @property
    def is_real(self) -> bool:
        return bool(np.abs(self.q1.imag).max(initial=0) < 1e-12 and np.abs(self.V.imag).max(initial=0) < 1e-12)

    def q(self, sites: Sequence[int]) -> complex:
        """Strange correlator for an arbitrary set of flipped sites."""
        base = self.outcome.mask
        mask = base
        for j in sites:
            mask ^= 1 << j
        return complex(self.frame_amplitudes[mask] / self.frame_amplitudes[base])


def _is_x_axis(axes) -> bool:
    return all(abs(abs(a.cartesian[0]) - 1.0) < 1e-12 for a in axes)


def strange_correlators(psi_A: Statevector, outcome, axis: AxisLike | Sequence[AxisLike]) -> StrangeCorrelators:
    """``q(j)``, ``q(j,k)`` and ``V_jk`` for ``psi_A`` measured along ``axis``.

    ``uncontrolled`` is set for the x basis, where ``V_jk ~ 1/|j-k|`` and the
    expansion has no small parameter at long distance.
    """
    L = psi_A.L
    outcome = OutcomeString(outcome)
    axes = tuple(as_axes(axis, L))
    amps = rotate_to_frame(psi_A.normalized(), list(axes)).amplitudes
    base = outcome.mask
    c0 = amps[base]
    if abs(c0) < 1e-300:
        raise StateError("reference overlap <a;n|psi_A> vanishes")
    q1 = np.array([amps[base ^ (1 << j)] / c0 for j in range(L)])
    q2 = np.zeros((L, L), dtype=complex)
    for j in range(L):
        for k in range(j + 1, L):
            q2[j, k] = q2[k, j] = amps[base ^ (1 << j) ^ (1 << k)] / c0
    V = q2 - np.outer(q1, q1)
    np.fill_diagonal(V, 0.0)
    return StrangeCorrelators(q1, q2, V, outcome, axes, amps, _is_x_axis(axes))


def _popcount(arr: np.ndarray) -> np.ndarray:
    out = np.zeros_like(arr)
    a = arr.copy()
    while np.any(a):
        out += a & 1
        a >>= 1
    return out


def large_alpha_state(
    psi_A: Statevector,
    outcome,
    axis: AxisLike | Sequence[AxisLike],
    u: float,
    order: int = 2,
    b=None,
    frame: str = "penultimate",
) -> Statevector:
    """Truncated expansion of Bob's state in powers of ``t = tan u``.

    ``frame="penultimate"`` builds ``sum_{|J|<=order} (i t)^{|J|} q(J) O_J(n_perp)|b;n>``;
    ``frame="teleported"`` builds ``sum_{|J|<=order} t^{|J|} q(J) O_J(n_perp)|a;n>``,
    the expansion of ``exp((alpha/2) sum a_j O_j(n)) |psi_A>``.
    """
    L = psi_A.L
    outcome = OutcomeString(outcome)
    sc = strange_correlators(psi_A, outcome, axis)
    t = np.tan(u)
    if frame == "penultimate":
        ref = OutcomeString.uniform(L) if b is None else OutcomeString(b)
        step = 1j * t
    elif frame == "teleported":
        ref = outcome
        step = t
    else:
        raise StateError(f"unknown frame {frame!r}")
    flips = np.arange(2**L)
    weight = _popcount(flips)
    keep = weight <= order
    coeff = np.zeros(2**L, dtype=complex)
    c0 = sc.frame_amplitudes[outcome.mask]
    coeff[ref.mask ^ flips[keep]] = step ** weight[keep] * sc.frame_amplitudes[outcome.mask ^ flips[keep]] / c0
    out = rotate_to_frame(Statevector(coeff, L), list(sc.axes), inverse=True)
    return out.normalized()


def renyi2_perturbative(sc: StrangeCorrelators, region: Sequence[int], u: float) -> float:
    """``S_2 = 2 t^4 sum_{j in R, k not in R} V_jk^2`` with ``t = tan u``.

    Valid for real strange correlators only; complex tables raise `StateError`.
    """
    if np.abs(sc.q1.imag).max(initial=0) > 1e-10 or np.abs(sc.V.imag).max(initial=0) > 1e-10:
        raise StateError("complex strange correlators: the Renyi-2 formula needs real q and V")
    region = list(region)
    rest = [k for k in range(sc.L) if k not in region]
    t = np.tan(u)
    V = sc.V[np.ix_(region, rest)]
    return float(2 * t**4 * np.real((V**2).sum()))


def f_kappa(ell: float, L: float, kappa: float) -> float:
    """Integral approximation of ``sum_{j in R, k not in R} |j - k|^{-2 kappa}`` (up to prefactor)."""
    if abs(kappa - 1.0) < 1e-12:
        return float(np.log(ell * (L - ell) / L))
    if abs(kappa - 0.5) < 1e-12:
        return float(L * np.log(L) - ell * np.log(ell) - (L - ell + 1) * np.log(L - ell + 1))
    p = 2 - 2 * kappa
    num = -1 + ell**p - L**p + (L - ell + 1) ** p
    return float(num / (2 * (1 - 2 * kappa) * (kappa - 1)))


def perturbative_correlators(sc: StrangeCorrelators, u: float) -> dict:
    """Leading-order connected correlators in the teleported (decoded) state.

    ``perp`` is ``<O_j(n_perp) O_k(n_perp)>_c = 2 t^2 V_jk``; ``perp_cross`` is
    ``<O_j(n x n_perp) O_k(n x n_perp)> = -2 t^2 V_jk``.  The factor 2 comes
    from the pair sum over ordered ``j != k`` in the exponentiated form.
    ``along_n`` is ``<O_j(n) O_k(n)>_c = 4 t^4 (|q(j,k)|^2 - |q(j) q(k)|^2)``,
    the covariance of the flip indicators; it is ``4 t^4 V_jk^2`` when ``q(j) = 0``.
    """
    t = np.tan(u)
    along = 4 * t**4 * (np.abs(sc.q2) ** 2 - np.abs(np.outer(sc.q1, sc.q1)) ** 2)
    np.fill_diagonal(along, 0.0)
    return {"perp": 2 * t**2 * sc.V, "perp_cross": -2 * t**2 * sc.V, "bare": t**2 * sc.V, "along_n": along}


# Parent Hamiltonians ---------------------------------------------------------


def _walsh_hadamard(vec: np.ndarray, L: int) -> np.ndarray:
    """Unnormalized transform ``f(s) = sum_J c_J prod_{j in J} s_j`` (bit ``j`` of ``s`` set means ``s_j = -1``)."""
    t = vec.reshape((2,) * L).astype(complex)
    for ax in range(L):
        a = np.take(t, 0, axis=ax)
        b = np.take(t, 1, axis=ax)
        t = np.stack([a + b, a - b], axis=ax)
    return t.reshape(-1)


@dataclass
class ParentData:
    """Operators defining Bob's penultimate state as ``G |b;n>`` with ``G`` diagonal in the ``n_perp`` frame."""

    L: int
    axes: tuple
    b: OutcomeString
    g_diag: np.ndarray
    t: float
    sc: StrangeCorrelators

    def state(self) -> Statevector:
        """``G |b;n>`` in the lab frame, normalized."""
        vec = np.zeros(2**self.L, dtype=complex)
        vec[self.b.mask] = 1.0
        return self.from_flip_frame(self.g_diag * self.to_flip_frame(vec)).normalized()

    def to_flip_frame(self, vec: np.ndarray) -> np.ndarray:
        # columns of the Walsh transform are the O(n_perp) eigenbasis in the rotated frame
        return _walsh_hadamard(vec, self.L) / 2 ** (self.L / 2)

    def from_flip_frame(self, vec: np.ndarray) -> Statevector:
        frame = _walsh_hadamard(vec, self.L) / 2 ** (self.L / 2)
        return rotate_to_frame(Statevector(frame, self.L), list(self.axes), inverse=True)


def parent_data(psi_A: Statevector, spec: ProtocolSpec, outcome, order: int | None = None) -> ParentData:
    """Conjugating operator for Bob's penultimate state.

    ``order=None`` uses every flip amplitude, so ``G |b;n>`` is the exact
    penultimate state.  ``order=2`` uses the second-order cumulant form
    ``G = exp(i t sum q_j O_j(n_perp) - (t^2/2) sum_{j!=k} V_jk O_j O_k)``.
    """
    if not spec.aligned:
        raise StateError("parent Hamiltonians are built for m = n_perp")
    L = spec.L
    outcome = OutcomeString(outcome)
    sc = strange_correlators(psi_A, outcome, list(spec.axes))
    t = np.tan(spec.u)
    s = 1 - 2 * ((np.arange(2**L)[:, None] >> np.arange(L)) & 1)
    if order is None:
        flips = np.arange(2**L)
        c = (1j * t) ** _popcount(flips) * sc.frame_amplitudes[outcome.mask ^ flips] / sc.frame_amplitudes[outcome.mask]
        g = _walsh_hadamard(c, L)
    elif order == 2:
        lin = (s * sc.q1).sum(axis=1)
        quad = np.einsum("aj,jk,ak->a", s, sc.V, s)
        g = np.exp(1j * t * lin - 0.5 * t**2 * quad)
    else:
        raise StateError("order must be None (exact) or 2")
    if np.abs(g).min() < 1e-12 * np.abs(g).max():
        raise StateError("conjugating operator is numerically singular")
    return ParentData(L, tuple(spec.axes), spec.b, g, float(t), sc)


def _site_projector_apply(vec_lab: Statevector, data: ParentData, j: int) -> Statevector:
    """``Gamma_j = (1 - b_j O_j(n)) / 2`` in the lab frame."""
    from .state import I2

    axis = data.axes[j]
    return vec_lab.apply_site(j, 0.5 * (I2 - data.b[j] * axis.pauli()))


def conjugated_projector_apply(vec: Statevector, data: ParentData, j: int, adjoint: bool = False) -> Statevector:
    """``Gamma_bar_j = G Gamma_j G^{-1}`` (or its adjoint) applied to ``vec``."""
    rot = rotate_to_frame(vec, list(data.axes))
    flip = data.to_flip_frame(rot.amplitudes)
    first = np.conj(data.g_diag) if adjoint else 1.0 / data.g_diag
    last = 1.0 / np.conj(data.g_diag) if adjoint else data.g_diag
    mid = data.from_flip_frame(first * flip)
    mid = _site_projector_apply(mid, data, j)
    back = data.to_flip_frame(rotate_to_frame(mid, list(data.axes)).amplitudes)
    return data.from_flip_frame(last * back)


def frustration_free_residuals(psi: Statevector, data: ParentData) -> np.ndarray:
    """``||Gamma_bar_j psi|| / ||psi||`` for every site."""
    nrm = psi.norm()
    return np.array([conjugated_projector_apply(psi, data, j).norm() / nrm for j in range(data.L)])


def _nonhermitian_apply(vec: Statevector, alpha: float, outcome: OutcomeString, axes) -> Statevector:
    from .protocol import deform

    signs = np.asarray(outcome)
    L = vec.L

    def conj_filter(amps, coef):
        out = deform(Statevector(amps, L), [(coef, signs, list(axes))], normalize=False)
        return out.amplitudes * np.exp(out.log_norm)

    w = conj_filter(vec.amplitudes * np.exp(vec.log_norm), -alpha)
    return Statevector(conj_filter(zz_diagonal(L) * w - apply_x_sum(w, L), alpha), L)


def parent_hamiltonian_apply(vec: Statevector, data: ParentData | None = None, variant: str = "exact", **kw) -> Statevector:
    """Apply one of the parent Hamiltonians to ``vec``.

    ``exact``
        ``sum_j Gamma_bar_j^dag Gamma_bar_j`` for the conjugating operator in ``data``.
    ``quadratic-approx``
        ``U' [-(1/2) sum b_j O_j(n)] U'^dag + t^2 sum_{j!=k} V_jk O_j(n_perp) O_k(n_perp)``
        with ``U' = exp(i t sum q_j O_j(n_perp))``.
    ``nonhermitian``
        ``exp(alpha M) H_c exp(-alpha M)`` with ``M = (1/2) sum a_j O_j(n)``;
        needs ``alpha``, ``outcome`` and ``axes`` keywords.
    """
    if variant == "nonhermitian":
        return _nonhermitian_apply(vec, kw["alpha"], OutcomeString(kw["outcome"]), as_axes(kw["axes"], vec.L))
    if data is None:
        raise StateError(f"variant {variant!r} needs parent data")
    L = data.L
    if variant == "exact":
        acc = np.zeros(2**L, dtype=complex)
        for j in range(L):
            g = conjugated_projector_apply(vec, data, j)
            acc += conjugated_projector_apply(g, data, j, adjoint=True).amplitudes
        return Statevector(acc, L)
    if variant == "quadratic-approx":
        t, sc = data.t, data.sc
        s = 1 - 2 * ((np.arange(2**L)[:, None] >> np.arange(L)) & 1)
        lin = (s * sc.q1).sum(axis=1)
        quad = np.einsum("aj,jk,ak->a", s, sc.V, s)
        rot = rotate_to_frame(vec, list(data.axes)).amplitudes
        flip = data.to_flip_frame(rot)
        # U'^dag, then the uniform field term, then U'
        mid = data.from_flip_frame(np.exp(-1j * t * np.conj(lin)) * flip)
        field = np.zeros(2**L, dtype=complex)
        for j in range(L):
            field += -0.5 * data.b[j] * mid.apply_site(j, data.axes[j].pauli()).amplitudes
        back = data.to_flip_frame(rotate_to_frame(Statevector(field, L), list(data.axes)).amplitudes)
        first = data.from_flip_frame(np.exp(1j * t * lin) * back).amplitudes
        second = data.from_flip_frame(t**2 * quad * flip).amplitudes
        return Statevector(first + second, L)
    raise StateError(f"unknown variant {variant!r}")


def parent_hamiltonian_closed_form_apply(vec: Statevector, data: ParentData) -> Statevector:
    """Explicit bracket form of the second-order parent Hamiltonian.

    ``(1/4) U' [sum_j exp(4 t^2 O_j B_j) - b_j {O_j(n), exp(2 t^2 O_j B_j)}] U'^dag + L/4``
    with ``O_j = O_j(n_perp)`` and ``B_j = sum_{k != j} V_jk O_k(n_perp)``.
    Equal to the ``exact`` variant when ``data`` was built with ``order=2``.
    """
    L, t, sc = data.L, data.t, data.sc
    s = 1 - 2 * ((np.arange(2**L)[:, None] >> np.arange(L)) & 1)
    lin = (s * sc.q1).sum(axis=1)
    rot = rotate_to_frame(vec, list(data.axes)).amplitudes
    flip = np.exp(-1j * t * np.conj(lin)) * data.to_flip_frame(rot)
    acc = np.zeros(2**L, dtype=complex)
    for j in range(L):
        OB = s[:, j] * (s @ sc.V[j])
        acc += 0.25 * np.exp(4 * t**2 * OB) * flip
        e2 = np.exp(2 * t**2 * OB)
        lab = data.from_flip_frame(e2 * flip)
        left = lab.apply_site(j, data.axes[j].pauli())
        left_flip = data.to_flip_frame(rotate_to_frame(left, list(data.axes)).amplitudes)
        right = data.from_flip_frame(flip).apply_site(j, data.axes[j].pauli())
        right_flip = data.to_flip_frame(rotate_to_frame(right, list(data.axes)).amplitudes)
        acc -= 0.25 * data.b[j] * (left_flip + e2 * right_flip)
    acc += 0.25 * L * flip
    out = data.from_flip_frame(np.exp(1j * t * lin) * acc)
    return out


def nonhermitian_local_hamiltonian(L: int, alpha: float):
    """Sparse ``-sum Z Z - sum (cosh(alpha) X + i sinh(alpha) Y)``, equal to ``e^{alpha M_Z} H_c e^{-alpha M_Z}``."""
    import scipy.sparse as sp

    from .state import PAULI_X, PAULI_Y

    H = sp.diags(zz_diagonal(L)).astype(complex)
    loc = np.cosh(alpha) * PAULI_X + 1j * np.sinh(alpha) * PAULI_Y
    for j in range(L):
        H = H - sp.kron(sp.kron(sp.identity(2 ** (L - 1 - j)), sp.csr_matrix(loc)), sp.identity(2**j))
    return H.tocsr()
