"""Dense qubit-chain states, single-site Pauli algebra and entanglement measures.

Site ``j`` is bit ``j`` of the amplitude index (site 0 is the least significant
bit).  Bit value 0 is the ``+1`` eigenstate of the local quantization axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

EIG_CLIP = 1e-14
DENSE_MATRIX_MAX_SITES = 12
DEFAULT_MAX_MEMORY_GB = 4.0

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


class StateError(ValueError):
    """Raised for malformed states, axes or outcome strings."""


class MemoryLimitError(MemoryError):
    """Raised when a dense object would exceed the configured memory budget."""


def check_memory(nbytes: float, max_memory_gb: float | None = None, what: str = "array"):
    limit = DEFAULT_MAX_MEMORY_GB if max_memory_gb is None else max_memory_gb
    if nbytes > limit * 2**30:
        raise MemoryLimitError(
            f"{what} needs {nbytes / 2**30:.2f} GB which exceeds the {limit:.2f} GB budget"
        )


@dataclass(frozen=True)
class UnitVector3:
    """Unit vector on the Bloch sphere, stored by polar and azimuthal angle.

    The perpendicular vector used throughout is
    ``n_perp = (-cos(theta) cos(phi), -cos(theta) sin(phi), sin(theta))``,
    the unit vector obtained by increasing ``theta`` by ``pi/2``.
    """

    theta: float
    phi: float = 0.0

    @classmethod
    def from_cartesian(cls, v: Sequence[float]) -> "UnitVector3":
        v = np.asarray(v, dtype=float)
        if v.shape != (3,):
            raise StateError(f"expected a 3-vector, got shape {v.shape}")
        norm = np.linalg.norm(v)
        if not np.isfinite(norm) or abs(norm - 1.0) > 1e-9:
            raise StateError(f"axis must have unit norm, got |v| = {norm}")
        v = v / norm
        theta = float(np.arccos(np.clip(v[2], -1.0, 1.0)))
        phi = float(np.arctan2(v[1], v[0])) if np.hypot(v[0], v[1]) > 1e-15 else 0.0
        return cls(theta, phi)

    @classmethod
    def from_label(cls, label: str) -> "UnitVector3":
        table = {
            "z": (0.0, 0.0),
            "-z": (np.pi, 0.0),
            "x": (np.pi / 2, 0.0),
            "-x": (np.pi / 2, np.pi),
            "y": (np.pi / 2, np.pi / 2),
            "-y": (np.pi / 2, -np.pi / 2),
        }
        key = label.strip().lower()
        if key not in table:
            raise StateError(f"unknown axis label {label!r}")
        return cls(*table[key])

    @property
    def cartesian(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    @property
    def perp(self) -> np.ndarray:
        ct = np.cos(self.theta)
        return np.array([-ct * np.cos(self.phi), -ct * np.sin(self.phi), np.sin(self.theta)])

    @property
    def perp_cross(self) -> np.ndarray:
        """``n x n_perp``, the third leg of the right-handed local frame."""
        return np.cross(self.cartesian, self.perp)

    def pauli(self) -> np.ndarray:
        return pauli_along(self.cartesian)

    def frame(self) -> np.ndarray:
        """Unitary ``R`` with ``R Z R^dag = n.sigma`` and ``R X R^dag = n_perp.sigma``.

        Column 0 is the ``+1`` eigenvector of ``n.sigma`` with its first
        nonzero component real and positive; column 1 is ``n_perp.sigma``
        applied to column 0.
        """
        vals, vecs = np.linalg.eigh(self.pauli())
        up = vecs[:, np.argmax(vals)]
        k = int(np.argmax(np.abs(up) > 1e-12))
        up = up * np.exp(-1j * np.angle(up[k]))
        down = pauli_along(self.perp) @ up
        return np.column_stack([up, down])


AxisLike = Union[UnitVector3, str, Sequence[float]]


def as_axis(axis: AxisLike) -> UnitVector3:
    if isinstance(axis, UnitVector3):
        return axis
    if isinstance(axis, str):
        return UnitVector3.from_label(axis)
    return UnitVector3.from_cartesian(axis)


def as_axes(axis: AxisLike | Sequence[AxisLike], L: int) -> list[UnitVector3]:
    """Broadcast a single axis or validate a per-site list of axes."""
    if isinstance(axis, (UnitVector3, str)):
        return [as_axis(axis)] * L
    seq = list(axis)
    if len(seq) == 3 and all(np.isscalar(c) for c in seq):
        return [as_axis(seq)] * L
    if len(seq) != L:
        raise StateError(f"expected {L} axes, got {len(seq)}")
    return [as_axis(a) for a in seq]


def pauli_along(v: Sequence[float]) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[0] * PAULI_X + v[1] * PAULI_Y + v[2] * PAULI_Z


def check_outcomes(bits: Iterable[int], L: int | None = None) -> np.ndarray:
    arr = np.asarray(list(bits), dtype=int)
    if arr.ndim != 1 or not np.all(np.abs(arr) == 1):
        raise StateError("outcome strings must contain only +1 and -1")
    if L is not None and arr.size != L:
        raise StateError(f"outcome string has length {arr.size}, expected {L}")
    return arr


def _apply_site_matrix(amps: np.ndarray, L: int, site: int, mat: np.ndarray) -> np.ndarray:
    t = amps.reshape(2 ** (L - 1 - site), 2, 2**site)
    return np.einsum("ab,ibk->iak", mat, t, optimize=False).reshape(-1)


@dataclass
class Statevector:
    """Pure state of ``L`` qubits.

    The physical (possibly unnormalized) vector is ``exp(log_norm) * amplitudes``.
    Non-unitary maps keep ``amplitudes`` at unit norm and move the scale into
    ``log_norm`` so that strong imaginary-time deformations do not overflow.
    """

    amplitudes: np.ndarray
    L: int = field(default=-1)
    log_norm: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.L < 0:
            L = int(round(np.log2(amps.size)))
        else:
            L = self.L
        if amps.size != 2**L:
            raise StateError(f"amplitude vector of size {amps.size} is not 2**{L}")
        if not np.all(np.isfinite(amps)):
            raise StateError("amplitudes must be finite")
        self.amplitudes = amps
        self.L = L

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "Statevector":
        nrm = self.norm()
        if nrm == 0.0:
            raise StateError("cannot normalize the zero vector")
        return Statevector(self.amplitudes / nrm, self.L, self.log_norm + np.log(nrm))

    def copy(self) -> "Statevector":
        return Statevector(self.amplitudes.copy(), self.L, self.log_norm)

    def vdot(self, other: "Statevector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "Statevector") -> float:
        a, b = self.normalized(), other.normalized()
        return abs(a.vdot(b)) ** 2

    def apply_site(self, site: int, mat: np.ndarray) -> "Statevector":
        if not 0 <= site < self.L:
            raise StateError(f"site {site} outside chain of length {self.L}")
        return Statevector(_apply_site_matrix(self.amplitudes, self.L, site, mat), self.L, self.log_norm)

    def apply_product(self, mats: Sequence[np.ndarray | None]) -> "Statevector":
        amps = self.amplitudes
        for j, m in enumerate(mats):
            if m is not None:
                amps = _apply_site_matrix(amps, self.L, j, m)
        return Statevector(amps, self.L, self.log_norm)

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()


@dataclass
class DensityMatrix:
    """Dense density matrix of ``L`` qubits, same bit convention as `Statevector`."""

    matrix: np.ndarray
    L: int = -1

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StateError("density matrix must be square")
        L = int(round(np.log2(m.shape[0]))) if self.L < 0 else self.L
        if m.shape[0] != 2**L:
            raise StateError(f"matrix dimension {m.shape[0]} is not 2**{L}")
        self.matrix = m
        self.L = L

    @classmethod
    def from_statevector(cls, psi: Statevector, max_sites: int = DENSE_MATRIX_MAX_SITES):
        if psi.L > max_sites:
            raise MemoryLimitError(f"dense density matrix limited to L <= {max_sites}")
        a = psi.normalized().amplitudes
        return cls(np.outer(a, a.conj()), psi.L)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def partial_transpose(self, sites: Sequence[int]) -> np.ndarray:
        L = self.L
        t = self.matrix.reshape((2,) * (2 * L))
        perm = list(range(2 * L))
        for s in sites:
            ax = L - 1 - s
            perm[ax], perm[L + ax] = perm[L + ax], perm[ax]
        return t.transpose(perm).reshape(2**L, 2**L)


def product_state(bits: Sequence[int], axis: AxisLike | Sequence[AxisLike]) -> Statevector:
    """Product state ``|d_1, ..., d_L; n>`` with ``d_j = +-1`` along ``n``."""
    d = check_outcomes(bits)
    L = d.size
    axes = as_axes(axis, L)
    amps = np.ones(1, dtype=complex)
    for j in range(L):
        col = axes[j].frame()[:, 0 if d[j] == 1 else 1]
        amps = np.kron(col, amps)
    return Statevector(amps, L)


def rotate_to_frame(psi: Statevector, axis: AxisLike | Sequence[AxisLike], inverse=False) -> Statevector:
    """Express ``psi`` in the local frames ``R(n_j)``.

    ``inverse=False`` returns ``R^dag psi``: amplitude at bit pattern ``s`` is the
    overlap with the product state whose site ``j`` is ``+1`` (bit 0) or ``-1``
    (bit 1) along ``n_j``, with the ``-1`` state equal to
    ``O(n_perp) |+1; n>``.
    """
    axes = as_axes(axis, psi.L)
    mats = [a.frame() if inverse else a.frame().conj().T for a in axes]
    return psi.apply_product(mats)


def apply_axis_pauli(psi: Statevector, site: int, axis: AxisLike) -> Statevector:
    return psi.apply_site(site, as_axis(axis).pauli())


def _pair_pauli_product(amps, L, j, k, Oj, Ok):
    out = _apply_site_matrix(amps, L, j, Oj)
    return _apply_site_matrix(out, L, k, Ok)


def apply_entangler(
    psi: Statevector,
    pairs: Sequence[tuple[int, int]],
    axis: AxisLike | Sequence[AxisLike],
    u: float,
) -> Statevector:
    """Apply ``prod_(j,k) exp(i u O_j(m) O_k(m))`` over the given site pairs.

    ``axis`` may be one axis or one axis per pair.
    """
    if isinstance(axis, (UnitVector3, str)) or (
        len(axis) == 3 and all(np.isscalar(c) for c in axis)
    ):
        axes = [as_axis(axis)] * len(pairs)
    else:
        axes = [as_axis(a) for a in axis]
        if len(axes) != len(pairs):
            raise StateError("need one axis per pair")
    amps = psi.amplitudes
    c, s = np.cos(u), np.sin(u)
    for (j, k), m in zip(pairs, axes):
        if j == k or not (0 <= j < psi.L and 0 <= k < psi.L):
            raise StateError(f"invalid site pair {(j, k)}")
        Om = m.pauli()
        amps = c * amps + 1j * s * _pair_pauli_product(amps, psi.L, j, k, Om, Om)
    return Statevector(amps, psi.L, psi.log_norm)


def site_probability(psi: Statevector, site: int, axis: AxisLike, outcome: int) -> float:
    proj = 0.5 * (I2 + outcome * as_axis(axis).pauli())
    phi = psi.apply_site(site, proj)
    return phi.norm() ** 2 / psi.norm() ** 2


def measure_site(
    psi: Statevector,
    site: int,
    axis: AxisLike,
    rng: np.random.Generator | None = None,
    outcome: int | None = None,
) -> tuple[int, float, Statevector]:
    """Projective measurement of ``O_site(n)``.

    Returns ``(outcome, probability, post_state)`` with a normalized post state.
    ``outcome`` forces the branch; otherwise it is drawn from ``rng``.
    """
    n = as_axis(axis)
    nrm2 = psi.norm() ** 2
    branches = {}
    for d in (1, -1):
        proj = 0.5 * (I2 + d * n.pauli())
        phi = psi.apply_site(site, proj)
        branches[d] = (phi.norm() ** 2 / nrm2, phi)
    if outcome is None:
        if rng is None:
            raise StateError("either rng or outcome must be given")
        outcome = 1 if rng.random() < branches[1][0] else -1
    elif outcome not in (1, -1):
        raise StateError("outcome must be +1 or -1")
    p, phi = branches[outcome]
    if p <= 0.0:
        raise StateError(f"outcome {outcome} has zero probability at site {site}")
    return outcome, float(p), phi.normalized()


def _split_matrix(amps: np.ndarray, L: int, sites: Sequence[int]) -> np.ndarray:
    """Reshape amplitudes into ``(2**|A|, 2**(L-|A|))`` with ``sites[0]`` as LSB of the row."""
    sites = list(sites)
    if len(set(sites)) != len(sites) or any(not 0 <= s < L for s in sites):
        raise StateError(f"invalid region {sites}")
    rest = [s for s in range(L) if s not in sites]
    t = amps.reshape((2,) * L)
    # tensor axis L-1-s holds site s; most significant first in the row index
    row_axes = [L - 1 - s for s in reversed(sites)]
    col_axes = [L - 1 - s for s in reversed(rest)]
    return t.transpose(row_axes + col_axes).reshape(2 ** len(sites), -1)


def reduced_density_matrix(state: Statevector | DensityMatrix, sites: Sequence[int]) -> DensityMatrix:
    sites = list(sites)
    if isinstance(state, Statevector):
        m = _split_matrix(state.normalized().amplitudes, state.L, sites)
        return DensityMatrix(m @ m.conj().T, len(sites))
    L = state.L
    rest = [s for s in range(L) if s not in sites]
    t = state.matrix.reshape((2,) * (2 * L))
    keep = [L - 1 - s for s in reversed(sites)]
    tr = [L - 1 - s for s in reversed(rest)]
    t = t.transpose(keep + tr + [L + a for a in keep] + [L + a for a in tr])
    dk, dt = 2 ** len(sites), 2 ** len(rest)
    t = t.reshape(dk, dt, dk, dt)
    rho = np.einsum("ajbj->ab", t) / np.trace(state.matrix)
    return DensityMatrix(rho, len(sites))


def entropy_from_spectrum(p: np.ndarray, n: float = 1.0) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > EIG_CLIP]
    p = p / p.sum()
    if n == 1:
        return float(-(p * np.log(p)).sum())
    if np.isinf(n):
        return float(-np.log(p.max()))
    return float(np.log((p**n).sum()) / (1.0 - n))


def schmidt_spectrum(psi: Statevector, region: Sequence[int]) -> np.ndarray:
    m = _split_matrix(psi.normalized().amplitudes, psi.L, region)
    return np.linalg.svd(m, compute_uv=False) ** 2


def renyi_entropy(state: Statevector | DensityMatrix, region: Sequence[int], n: float = 1.0) -> float:
    """Renyi-``n`` entropy of ``region`` (``n=1`` gives von Neumann)."""
    if n < 0:
        raise StateError("Renyi index must be non-negative")
    if isinstance(state, Statevector):
        return entropy_from_spectrum(schmidt_spectrum(state, region), n)
    rho = reduced_density_matrix(state, region).matrix
    return entropy_from_spectrum(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)), n)


def negativity(rho: DensityMatrix, region: Sequence[int]) -> float:
    """Logarithmic negativity ``ln ||rho^{T_region}||_1``."""
    pt = rho.partial_transpose(region)
    pt = 0.5 * (pt + pt.conj().T)
    if np.abs(pt.imag).max() < 1e-14:
        pt = pt.real
    ev = np.linalg.eigvalsh(pt)
    return float(np.log(np.abs(ev).sum() / ev.sum()))


PauliSpec = Union[str, UnitVector3, Sequence[float]]


def _local_operator(op: PauliSpec) -> np.ndarray:
    if isinstance(op, str) and op.upper() in ("X", "Y", "Z", "I"):
        return {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z, "I": I2}[op.upper()]
    return as_axis(op).pauli()


def expectation_pauli_string(state: Statevector | DensityMatrix, ops: Mapping[int, PauliSpec]) -> complex:
    """``<prod_j O_j>`` for a mapping ``site -> Pauli label or axis``."""
    if isinstance(state, Statevector):
        psi = state.normalized()
        phi = psi.apply_product([_local_operator(ops[j]) if j in ops else None for j in range(psi.L)])
        return complex(np.vdot(psi.amplitudes, phi.amplitudes))
    m = state.matrix
    L = state.L
    for j, op in ops.items():
        t = m.reshape(2 ** (L - 1 - j), 2, 2**j, m.shape[1])
        m = np.einsum("ab,ibkc->iakc", _local_operator(op), t).reshape(m.shape)
    return complex(np.trace(m) / np.trace(state.matrix))
