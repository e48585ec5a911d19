"""Outcome-averaged teleported density matrices and their negativity.

Averaging over Born-distributed outcomes turns the protocol into a product of
single-site channels acting on ``|psi_A><psi_A|``.  Each channel has Kraus
operators

    K_a = cos u |b><a| + i sin u O(m) |b><a| O(m),     a = +1, -1

(``|d>`` the ``O(n)`` eigenstate with value ``d``), optionally followed by
Bob's decoding unitary.  For the decoded ensemble with ``m = n_perp`` this
reduces to masking ``|psi_A><psi_A|`` in the ``n`` frame by
``[sin 2u]^{hamming(s, s')}``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from itertools import product as iproduct
from typing import Sequence

import numpy as np

from .fitting import fit_log_coefficient
from .protocol import (
    OutcomeString,
    ProtocolSpec,
    _unitary_factors,
    closed_form_penultimate,
    decode,
    outcome_probability,
)
from .state import (
    DENSE_MATRIX_MAX_SITES,
    DensityMatrix,
    StateError,
    Statevector,
    UnitVector3,
    check_memory,
    expectation_pauli_string,
    negativity,
    pauli_along,
    rotate_to_frame,
)

MODES = ("decoded", "undecoded")


@dataclass(frozen=True)
class MixedEnsembleSpec:
    """Protocol plus averaging mode: ``decoded`` gives ``rho^tele``, ``undecoded`` averages penultimate states."""

    protocol: ProtocolSpec
    mode: str = "decoded"

    def __post_init__(self):
        if self.mode not in MODES:
            raise StateError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.protocol.L > DENSE_MATRIX_MAX_SITES:
            raise StateError(f"dense assembly limited to L <= {DENSE_MATRIX_MAX_SITES}")
        if self.mode == "decoded" and not self.protocol.aligned:
            raise StateError("decoded ensemble requires m = n_perp")


def _eigvec(axis: UnitVector3, d: int) -> np.ndarray:
    return axis.frame()[:, 0 if d == 1 else 1]


def kraus_operators(spec: ProtocolSpec, site: int, decoded: bool) -> list[np.ndarray]:
    """The two Kraus operators of the site-``site`` channel, Alice's qubit to Bob's."""
    axis = spec.axes[site]
    Om = pauli_along(spec.entangling_vectors[site])
    u = spec.u
    bvec = _eigvec(axis, spec.b[site])
    ops = []
    for a in (1, -1):
        avec = _eigvec(axis, a)
        K = np.cos(u) * np.outer(bvec, avec.conj()) + 1j * np.sin(u) * Om @ np.outer(bvec, avec.conj()) @ Om
        if decoded:
            outcome = OutcomeString([a if j == site else 1 for j in range(spec.L)])
            K = _unitary_factors(spec, outcome)[site].conj().T @ K
        ops.append(K)
    return ops


def _apply_site_channel(rho: np.ndarray, L: int, site: int, kraus: Sequence[np.ndarray]) -> np.ndarray:
    lo, hi = 2**site, 2 ** (L - 1 - site)
    t = rho.reshape(hi, 2, lo, hi, 2, lo)
    out = np.zeros_like(t)
    for K in kraus:
        out += np.einsum("ab,ibjkcl,dc->iajkdl", K, t, K.conj(), optimize=True)
    return out.reshape(rho.shape)


def _closed_form_decoded(psi_A: Statevector, spec: ProtocolSpec) -> np.ndarray:
    L = spec.L
    amps = rotate_to_frame(psi_A.normalized(), list(spec.axes)).amplitudes
    idx = np.arange(2**L)
    ham = np.zeros((2**L, 2**L), dtype=np.int8)
    x = idx[:, None] ^ idx[None, :]
    for j in range(L):
        ham += ((x >> j) & 1).astype(np.int8)
    rho = np.outer(amps, amps.conj()) * np.sin(2 * spec.u) ** ham
    for j, axis in enumerate(spec.axes):
        rho = _apply_site_channel(rho, L, j, [axis.frame()])
    return rho


def assemble(
    psi_A: Statevector, ens: MixedEnsembleSpec, route: str = "auto", max_memory_gb: float | None = None
) -> DensityMatrix:
    """Outcome-averaged density matrix of Bob's register.

    ``route``:
      ``closed``  matrix-element formula (decoded, aligned only)
      ``channel`` site-by-site Kraus maps (both modes, any entangling axis)
      ``sum``     explicit sum of ``p_a |psi><psi|`` over all ``2^L`` outcomes
      ``auto``    ``closed`` when available, else ``channel``
    """
    spec = ens.protocol
    L = spec.L
    check_memory(4**L * 16 * 3, max_memory_gb, "mixed-state assembly")
    decoded = ens.mode == "decoded"
    if route == "auto":
        route = "closed" if decoded else "channel"
    if route == "closed":
        if not decoded:
            raise StateError("the closed-form route exists only for the decoded ensemble")
        mat = _closed_form_decoded(psi_A, spec)
    elif route == "channel":
        psi = psi_A.normalized().amplitudes
        mat = np.outer(psi, psi.conj())
        for j in range(L):
            mat = _apply_site_channel(mat, L, j, kraus_operators(spec, j, decoded))
    elif route == "sum":
        mat = np.zeros((2**L, 2**L), dtype=complex)
        for bits in iproduct((1, -1), repeat=L):
            a = OutcomeString(bits)
            p = outcome_probability(psi_A, spec, a)
            if p < 1e-300:
                continue
            _, pen, _ = closed_form_penultimate(psi_A, spec, a)
            v = decode(pen, spec, a).amplitudes if decoded else pen.amplitudes
            mat += p * np.outer(v, v.conj())
    else:
        raise StateError(f"unknown route {route!r}")
    mat = 0.5 * (mat + mat.conj().T)
    return DensityMatrix(mat / np.trace(mat).real, L)


def mixed_correlator(rho: DensityMatrix, sites: Sequence[int], axis: UnitVector3 | str, axis_class: str) -> float:
    """``<O_K(v)>`` with ``v`` one of ``n``, ``n_perp`` or ``n x n_perp`` for the measurement axis ``n``."""
    from .state import as_axis

    axis = as_axis(axis)
    if axis_class == "n":
        v = axis.cartesian
    elif axis_class == "n_perp":
        v = axis.perp
    elif axis_class == "n_cross":
        v = axis.perp_cross
    else:
        raise StateError(f"unknown axis class {axis_class!r}")
    val = expectation_pauli_string(rho, {int(j): tuple(v) for j in sites})
    return float(np.real(val))


def predicted_mixed_correlator(
    psi_A: Statevector, spec: ProtocolSpec, sites: Sequence[int], axis_class: str, mode: str
) -> float:
    """Correlator predicted from the pristine state: factors ``[sin 2u]^{|K|}``, ``[cos 2u]^{|K|} prod b`` or 0."""
    axis = spec.axes[0]
    rho = DensityMatrix.from_statevector(psi_A.normalized())
    k = len(sites)
    if mode == "decoded":
        base = mixed_correlator(rho, sites, axis, axis_class)
        return base if axis_class == "n" else np.sin(2 * spec.u) ** k * base
    if axis_class == "n":
        return float(np.cos(2 * spec.u) ** k * np.prod([spec.b[j] for j in sites]))
    if axis_class == "n_perp":
        return 0.0
    raise StateError("no closed prediction for n x n_perp strings of the undecoded ensemble")


@dataclass
class NegativityScan:
    axis: str
    alphas: np.ndarray
    Ls: np.ndarray
    E: np.ndarray
    fits: list

    def c_eff(self) -> np.ndarray:
        return np.array([2 * f.slope for f in self.fits])

    def rows(self):
        for i, a in enumerate(self.alphas):
            for j, L in enumerate(self.Ls):
                yield {"axis": self.axis, "L": int(L), "alpha": float(a), "E": float(self.E[i, j])}

    def summary(self) -> dict:
        return {
            "axis": self.axis,
            "L_window": [int(self.Ls.min()), int(self.Ls.max())],
            "fits": [
                {"alpha": float(a), "c_eff_E": 2 * f.slope, "c_eff_E_err": 2 * f.slope_err, **f.as_dict()}
                for a, f in zip(self.alphas, self.fits)
            ],
        }


def half_chain_negativity(psi_A: Statevector, spec: ProtocolSpec, max_memory_gb: float | None = None) -> float:
    """Half-chain log negativity of ``rho^tele``; the pure ``u = pi/4`` point uses the Renyi-1/2 entropy."""
    L = spec.L
    region = list(range(L // 2))
    if abs(spec.u - np.pi / 4) < 1e-14:
        from .state import renyi_entropy

        return renyi_entropy(psi_A.normalized(), region, 0.5)
    rho = assemble(psi_A, MixedEnsembleSpec(spec, "decoded"), max_memory_gb=max_memory_gb)
    return negativity(rho, region)


def negativity_scan(
    axis: str, Ls: Sequence[int], alphas: Sequence[float], states=None, max_memory_gb: float | None = None
) -> NegativityScan:
    """Half-chain negativity of ``rho^tele`` for Alice in the critical state, fitted to ``(c/2) ln L + const``."""
    from .ising import critical_ground_state

    Ls = np.asarray(Ls, dtype=int)
    alphas = np.asarray(alphas, dtype=float)
    E = np.zeros((alphas.size, Ls.size))
    for j, L in enumerate(Ls):
        psi = critical_ground_state(int(L)).state if states is None else states[int(L)]
        for i, a in enumerate(alphas):
            spec = ProtocolSpec(L=int(L), u=float(np.arctan(np.exp(-a))), n=axis)
            E[i, j] = half_chain_negativity(psi, spec, max_memory_gb)
    fits = [fit_log_coefficient(Ls, E[i]) for i in range(alphas.size)]
    return NegativityScan(axis, alphas, Ls, E, fits)


def write_negativity_outputs(scan: NegativityScan, csv_path, json_path=None, metadata: dict | None = None):
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        for k, v in (metadata or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.DictWriter(fh, fieldnames=["axis", "L", "alpha", "E"], lineterminator="\n")
        w.writeheader()
        for row in scan.rows():
            w.writerow({**row, "alpha": repr(row["alpha"]), "E": f"{row['E']:.17g}"})
    if json_path is not None:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(scan.summary(), fh, indent=2)
