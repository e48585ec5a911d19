"""Imperfect teleportation of a chain state from Alice to Bob.

Alice's qubit ``j`` is entangled with Bob's qubit ``j`` by
``exp(i u O^A_j(m) O^B_j(m))``; Bob starts in ``|b; n>`` and Alice measures
``O_j(n)`` on every site.  For ``m = n_perp`` Bob ends up with

    |psi_a> = U_{b<-a} exp(i pi/4 H_a) exp(-(alpha/2) H_a) |psi_A> / sqrt(N)

where ``H_a = -sum_j a_j O_j(n)``, ``U_{b<-a} = exp(i pi/4 sum_j (1 - a_j b_j) O_j(n_perp))``
and ``alpha = -ln tan u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .state import (
    DENSE_MATRIX_MAX_SITES,
    I2,
    MemoryLimitError,
    Statevector,
    StateError,
    UnitVector3,
    apply_entangler,
    as_axes,
    check_memory,
    check_outcomes,
    measure_site,
    pauli_along,
    product_state,
    rotate_to_frame,
)


class OutcomeString(tuple):
    """Immutable string of ``+1/-1`` values, serialized as ``"+-+..."``."""

    def __new__(cls, values: Iterable[int] | str):
        if isinstance(values, str):
            table = {"+": 1, "-": -1}
            try:
                values = [table[c] for c in values.strip()]
            except KeyError as exc:
                raise StateError(f"outcome strings use only '+' and '-', got {values!r}") from exc
        arr = check_outcomes(values)
        return super().__new__(cls, (int(v) for v in arr))

    def __str__(self) -> str:
        return "".join("+" if v == 1 else "-" for v in self)

    def to_array(self) -> np.ndarray:
        return np.array(self, dtype=int)

    @property
    def mask(self) -> int:
        """Integer whose bit ``j`` is set where the value is ``-1``."""
        return int(sum(1 << j for j, v in enumerate(self) if v == -1))

    @classmethod
    def uniform(cls, L: int, value: int = 1) -> "OutcomeString":
        return cls([value] * L)

    @classmethod
    def neel(cls, L: int, first: int = 1) -> "OutcomeString":
        return cls([first * (-1) ** j for j in range(L)])

    @classmethod
    def from_mask(cls, mask: int, L: int) -> "OutcomeString":
        return cls([-1 if (mask >> j) & 1 else 1 for j in range(L)])


@dataclass(frozen=True)
class ProtocolSpec:
    """Protocol parameters.

    Parameters
    ----------
    L : int
        Number of teleported qubits.
    u : float
        Entangling angle in ``[0, pi/2]``; ``alpha = -ln tan u`` is infinite at the ends.
    n : axis or sequence of axes
        Measurement axis, per site if a sequence is given.
    m : axis, sequence of axes or None
        Entangling axis; ``None`` means ``n_perp`` on every site.
    b : OutcomeString or None
        Bob's initial product state along ``n``; all ``+1`` by default.
    """

    L: int
    u: float
    n: object = "z"
    m: object = None
    b: OutcomeString | None = None
    _n_axes: tuple = field(init=False, repr=False, compare=False)
    _m_vecs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.L < 1:
            raise StateError("L must be positive")
        if not 0.0 <= self.u <= np.pi / 2:
            raise StateError(f"u must lie in [0, pi/2], got {self.u}")
        n_axes = tuple(as_axes(self.n, self.L))
        if self.m is None:
            m_vecs = tuple(a.perp for a in n_axes)
        else:
            m_vecs = tuple(a.cartesian for a in as_axes(self.m, self.L))
        b = OutcomeString.uniform(self.L) if self.b is None else OutcomeString(self.b)
        if len(b) != self.L:
            raise StateError("Bob's initial string has the wrong length")
        object.__setattr__(self, "_n_axes", n_axes)
        object.__setattr__(self, "_m_vecs", m_vecs)
        object.__setattr__(self, "b", b)

    @property
    def alpha(self) -> float:
        if self.u == 0.0:
            return float("inf")
        if self.u == np.pi / 2:
            return float("-inf")
        return float(-np.log(np.tan(self.u)))

    @property
    def axes(self) -> tuple:
        return self._n_axes

    @property
    def entangling_vectors(self) -> tuple:
        return self._m_vecs

    @property
    def aligned(self) -> bool:
        return all(np.allclose(mv, a.perp, atol=1e-14) for mv, a in zip(self._m_vecs, self._n_axes))

    def with_u(self, u: float) -> "ProtocolSpec":
        return ProtocolSpec(self.L, u, self.n, self.m, self.b)


def _as_outcome(outcome, L) -> OutcomeString:
    o = OutcomeString(outcome)
    if len(o) != L:
        raise StateError(f"outcome has length {len(o)}, expected {L}")
    return o


def _check_input(psi_A: Statevector, spec: ProtocolSpec):
    if psi_A.L != spec.L:
        raise StateError(f"input state has {psi_A.L} sites, protocol expects {spec.L}")


def entangled_workspace(psi_A: Statevector, spec: ProtocolSpec, max_memory_gb: float | None = None) -> Statevector:
    """Joint state ``U |psi_A> |b; n>`` with Alice on sites ``0..L-1`` and Bob on ``L..2L-1``."""
    _check_input(psi_A, spec)
    L = spec.L
    if L > DENSE_MATRIX_MAX_SITES:
        raise MemoryLimitError(f"brute-force workspace limited to L <= {DENSE_MATRIX_MAX_SITES}")
    check_memory(2 ** (2 * L) * 16 * 3, max_memory_gb, "teleportation workspace")
    bob = product_state(spec.b, list(spec.axes))
    joint = Statevector(np.kron(bob.amplitudes, psi_A.normalized().amplitudes), 2 * L)
    pairs = [(j, L + j) for j in range(L)]
    return apply_entangler(joint, pairs, [UnitVector3.from_cartesian(v) for v in spec.entangling_vectors], spec.u)


def _bob_from_joint(joint: Statevector, spec: ProtocolSpec, outcome: OutcomeString) -> np.ndarray:
    L = spec.L
    alice = product_state(outcome, list(spec.axes)).amplitudes
    M = joint.amplitudes.reshape(2**L, 2**L)
    return M @ alice.conj()


def run_bruteforce(psi_A: Statevector, spec: ProtocolSpec, outcome) -> tuple[float, Statevector]:
    """Literal circuit: entangle, project Alice onto ``|a; n>``, return ``(p_a, |psi_a>)``."""
    outcome = _as_outcome(outcome, spec.L)
    joint = entangled_workspace(psi_A, spec)
    bob = _bob_from_joint(joint, spec, outcome)
    p = float(np.vdot(bob, bob).real)
    if p <= 0.0:
        raise StateError(f"outcome {outcome} has zero probability")
    return p, Statevector(bob / np.sqrt(p), spec.L)


def _tilt_factor(mvec, axis: UnitVector3, d: int) -> np.ndarray:
    """``U(m x n_perp) P^d + (1 - P^d)`` with ``P^d = (1 - d O(n)) / 2``."""
    npp = axis.perp
    W = float(np.dot(mvec, npp)) * I2 + 1j * pauli_along(np.cross(mvec, npp))
    P = 0.5 * (I2 - d * axis.pauli())
    return W @ P + (I2 - P)


def _filter_factor(u: float, a: int, axis: UnitVector3):
    """``exp((alpha/2) a O(n))`` as ``(log scale, cos u P_a + sin u P_-a)``.

    The bounded matrix equals ``sqrt(sin u cos u) exp((alpha/2) a O(n))``, so
    the limits ``u = 0`` and ``u = pi/2`` stay finite.
    """
    c, s = np.cos(u), np.sin(u)
    mat = 0.5 * (c + s) * I2 + 0.5 * (c - s) * a * axis.pauli()
    return -0.5 * np.log(c * s), mat


def _unitary_factors(spec: ProtocolSpec, outcome: OutcomeString) -> list[np.ndarray]:
    """Per-site ``exp(i pi/4 (1 - a b) O(n_perp)) exp(-i pi/4 a O(n))``."""
    mats = []
    for j, axis in enumerate(spec.axes):
        a, b = outcome[j], spec.b[j]
        rot = np.cos(np.pi / 4) * I2 - 1j * a * np.sin(np.pi / 4) * axis.pauli()
        flip = pauli_along(axis.perp) * 1j if a != b else I2
        mats.append(flip @ rot)
    return mats


def closed_form_penultimate(psi_A: Statevector, spec: ProtocolSpec, outcome) -> tuple[float, Statevector, float]:
    """Bob's state from the operator-product form.

    Returns ``(N, |psi_a>, log_N)`` where ``N = [sin u cos u]^{-L} p_a``.  For a
    tilted entangling axis the product is sandwiched between the
    projector-weighted rotations ``U_b ... U_a^dag``.
    """
    _check_input(psi_A, spec)
    outcome = _as_outcome(outcome, spec.L)
    log_scale = 0.0
    amps = psi_A.normalized().amplitudes
    L = spec.L
    tilted = not spec.aligned
    mats = []
    units = _unitary_factors(spec, outcome)
    for j, axis in enumerate(spec.axes):
        ls, filt = _filter_factor(spec.u, outcome[j], axis)
        log_scale += ls
        mat = units[j] @ filt
        if tilted:
            mv = spec.entangling_vectors[j]
            mat = _tilt_factor(mv, axis, spec.b[j]) @ mat @ _tilt_factor(mv, axis, outcome[j]).conj().T
        mats.append(mat)
    phi = Statevector(amps, L).apply_product(mats)
    nrm = phi.norm()
    if nrm == 0.0:
        raise StateError(f"outcome {outcome} has zero probability")
    log_N = 2 * (log_scale + np.log(nrm))
    return float(np.exp(log_N)), Statevector(phi.amplitudes / nrm, L, float(np.log(nrm))), float(log_N)


def outcome_probability(psi_A: Statevector, spec: ProtocolSpec, outcome) -> float:
    """``p_a = [sin u cos u]^L N_a`` from the closed form."""
    _, state, _ = closed_form_penultimate(psi_A, spec, outcome)
    # the bounded factors already carry sqrt(sin u cos u) per site
    return float(np.exp(2 * state.log_norm))


def decode(psi_a: Statevector, spec: ProtocolSpec, outcome) -> Statevector:
    """Undo the outcome-dependent unitaries, leaving ``exp(-(alpha/2) H_a) |psi_A>`` normalized."""
    outcome = _as_outcome(outcome, spec.L)
    mats = [m.conj().T for m in _unitary_factors(spec, outcome)]
    return psi_a.apply_product(mats).normalized()


def _deform_vectors(L, terms) -> np.ndarray:
    vecs = np.zeros((L, 3))
    for term in terms:
        if len(term) == 2:
            coef, axis = term
            signs = np.ones(L)
        else:
            coef, signs, axis = term
            signs = np.broadcast_to(np.asarray(signs, dtype=float), (L,))
        axes = as_axes(axis, L)
        for j in range(L):
            vecs[j] += coef * signs[j] * axes[j].cartesian
    return vecs


def deform(psi: Statevector, terms, method: str = "product", normalize: bool = True) -> Statevector:
    """Apply ``exp((1/2) sum_t alpha_t sum_j d_tj O_j(n_tj))``.

    ``terms`` is a list of ``(alpha, axis)`` or ``(alpha, signs, axis)``;
    ``axis`` may be per site.  The generator is a sum of on-site terms so the
    default ``"product"`` method is exact; ``"krylov"`` builds the sparse
    generator and uses a matrix-exponential action for cross-checks.
    The returned ``log_norm`` accumulates the log of the norm growth.
    """
    L = psi.L
    vecs = _deform_vectors(L, terms)
    base = psi.normalized()
    if method == "krylov":
        gen = _sparse_onsite_generator(L, 0.5 * vecs)
        amps = expm_multiply(gen, base.amplitudes, traceA=0.0)
        out = Statevector(amps, L, base.log_norm)
        return out.normalized() if normalize else out
    if method != "product":
        raise StateError(f"unknown method {method!r}")
    mats = []
    log_scale = 0.0
    for v in vecs:
        r = np.linalg.norm(v)
        if r == 0.0:
            mats.append(None)
            continue
        e = np.exp(-r)
        mats.append(0.5 * (1 + e) * I2 + 0.5 * (1 - e) * pauli_along(v / r))
        log_scale += r / 2
    out = base.apply_product(mats)
    out = Statevector(out.amplitudes, L, base.log_norm + log_scale)
    return out.normalized() if normalize else out


def _sparse_onsite_generator(L: int, vecs: np.ndarray) -> sp.csr_matrix:
    dim = 2**L
    gen = sp.csr_matrix((dim, dim), dtype=complex)
    for j in range(L):
        op = pauli_along(vecs[j])
        gen = gen + sp.kron(sp.kron(sp.identity(2 ** (L - 1 - j)), sp.csr_matrix(op)), sp.identity(2**j))
    return gen.tocsr()


def teleported_state(psi_A: Statevector, spec: ProtocolSpec, outcome) -> Statevector:
    """``exp((alpha/2) sum_j a_j O_j(n)) |psi_A>`` normalized.

    Built from the bounded per-site factors ``cos u P_a + sin u P_-a`` so the
    ``u = 0`` and ``u = pi/2`` limits are finite.
    """
    _check_input(psi_A, spec)
    outcome = _as_outcome(outcome, spec.L)
    mats = [_filter_factor(spec.u, outcome[j], axis)[1] for j, axis in enumerate(spec.axes)]
    out = psi_A.normalized().apply_product(mats)
    if out.norm() == 0.0:
        raise StateError(f"outcome {outcome} has zero probability")
    return out.normalized()


def outcome_distribution(psi_A: Statevector, spec: ProtocolSpec) -> np.ndarray:
    """Born probabilities of all ``2^L`` outcomes, indexed by `OutcomeString.mask`.

    For ``m = n_perp`` each site acts as a classical channel on the
    ``n``-basis distribution of ``psi_A``: the reading agrees with the local
    value with probability ``cos^2 u``.
    """
    _check_input(psi_A, spec)
    L = spec.L
    if spec.aligned:
        q = np.abs(rotate_to_frame(psi_A.normalized(), list(spec.axes)).amplitudes) ** 2
        t = q.reshape((2,) * L)
        c2, s2 = np.cos(spec.u) ** 2, np.sin(spec.u) ** 2
        channel = np.array([[c2, s2], [s2, c2]])
        for j in range(L):
            ax = L - 1 - j
            t = np.moveaxis(np.tensordot(channel, t, axes=([1], [ax])), 0, ax)
        return t.reshape(-1)
    return np.array([outcome_probability(psi_A, spec, OutcomeString.from_mask(k, L)) for k in range(2**L)])


def sample_outcome_sequential(
    psi_A: Statevector, spec: ProtocolSpec, rng: np.random.Generator | None = None, forced=None
) -> tuple[OutcomeString, float, Statevector]:
    """Measure Alice's sites one at a time on the entangled workspace.

    Returns the outcome, its joint probability (product of conditional Born
    probabilities) and Bob's normalized state.  ``forced`` fixes the outcome.
    """
    L = spec.L
    forced = None if forced is None else _as_outcome(forced, L)
    joint = entangled_workspace(psi_A, spec)
    prob = 1.0
    result = []
    for j, axis in enumerate(spec.axes):
        d, p, joint = measure_site(joint, j, axis, rng=rng, outcome=None if forced is None else forced[j])
        prob *= p
        result.append(d)
    outcome = OutcomeString(result)
    bob = _bob_from_joint(joint, spec, outcome)
    return outcome, prob, Statevector(bob / np.linalg.norm(bob), L)


def sample_outcomes(psi_A: Statevector, spec: ProtocolSpec, rng: np.random.Generator, n_samples: int) -> np.ndarray:
    """Batch of sequentially sampled outcomes, shape ``(n_samples, L)`` with entries ``+-1``.

    Site ``j`` is drawn from its Born probability conditioned on sites ``< j``,
    using the marginals of Alice's register in the entangled workspace.
    """
    L = spec.L
    if L <= DENSE_MATRIX_MAX_SITES // 2 or not spec.aligned:
        joint = entangled_workspace(psi_A, spec)
        rot = joint.apply_product([a.frame().conj().T for a in spec.axes] + [None] * L)
        probs = (np.abs(rot.amplitudes.reshape(2**L, 2**L)) ** 2).sum(axis=0)
    else:
        probs = outcome_distribution(psi_A, spec)
    probs = probs / probs.sum()
    t = probs.reshape((2,) * L)
    prefix = np.zeros(n_samples, dtype=np.int64)
    bits = np.zeros((n_samples, L), dtype=int)
    prev = np.ones(1)
    for j in range(L):
        # marginal over sites 0..j, flattened with site 0 as least significant
        marg = t.sum(axis=tuple(range(0, L - 1 - j))).reshape(-1) if j < L - 1 else t.reshape(-1)
        p0 = marg[prefix] / np.where(prev[prefix] > 0, prev[prefix], 1.0)
        b = (rng.random(n_samples) >= p0).astype(np.int64)
        bits[:, j] = b
        prefix = prefix + (b << j)
        prev = marg
    return 1 - 2 * bits


def most_probable_outcome(psi_A: Statevector, spec: ProtocolSpec, exhaustive_max: int = 8, rtol: float = 1e-9) -> dict:
    """Maximizers of ``p_a``.

    Exhaustive (and exact, ties included) for ``L <= exhaustive_max``; beyond
    that a greedy single-flip ascent from uniform and Neel seeds, flagged as
    heuristic.
    """
    L = spec.L
    if L <= exhaustive_max:
        p = outcome_distribution(psi_A, spec)
        top = p.max()
        winners = [OutcomeString.from_mask(int(k), L) for k in np.flatnonzero(p >= top * (1 - rtol))]
        return {"outcomes": winners, "probability": float(top), "heuristic": False}
    seeds = [OutcomeString.uniform(L, 1), OutcomeString.uniform(L, -1), OutcomeString.neel(L, 1), OutcomeString.neel(L, -1)]
    best = {}
    for s in seeds:
        cur = np.array(s)
        pc = outcome_probability(psi_A, spec, cur)
        improved = True
        while improved:
            improved = False
            for j in range(L):
                trial = cur.copy()
                trial[j] *= -1
                pt = outcome_probability(psi_A, spec, trial)
                if pt > pc * (1 + rtol):
                    cur, pc, improved = trial, pt, True
        best[str(OutcomeString(cur))] = pc
    top = max(best.values())
    winners = [OutcomeString(k) for k, v in best.items() if v >= top * (1 - rtol)]
    return {"outcomes": winners, "probability": float(top), "heuristic": True}


def single_qubit_canonical(psi: Sequence[complex], u12: float, u2B: float, z1: int, z2: int) -> dict:
    """Three-qubit chain ``A1 - A2 - B`` with ``XX`` entanglers and ``Z`` readout.

    Returns Bob's normalized state, the outcome probability, the effective
    filter ``P = exp((1/2) z1 (alpha12 + z2 alpha2B) Z)`` and the residual
    unitary ``V`` such that Bob's state is proportional to ``V P |psi>``.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2,):
        raise StateError("expected a single-qubit state")
    def kraus():
        K = np.zeros((2, 2), dtype=complex)
        for col in range(2):
            e = np.zeros(2, dtype=complex)
            e[col] = 1.0
            up = np.array([1, 0], dtype=complex)
            st = Statevector(np.kron(up, np.kron(up, e)), 3)
            st = apply_entangler(st, [(1, 2)], "x", u2B)
            st = apply_entangler(st, [(0, 1)], "x", u12)
            t = st.amplitudes.reshape(2, 2, 2)  # (B, A2, A1)
            K[:, col] = t[:, (1 - z2) // 2, (1 - z1) // 2]
        return K

    K = kraus()
    a12, a2B = -np.log(np.tan(u12)), -np.log(np.tan(u2B))
    w = 0.5 * z1 * (a12 + z2 * a2B)
    P = np.diag([np.exp(w), np.exp(-w)]).astype(complex)
    V = K @ np.linalg.inv(P)
    V = V / np.sqrt(abs(np.linalg.det(V)))
    bob = K @ psi
    prob = float(np.vdot(bob, bob).real)
    return {"state": bob / np.sqrt(prob), "probability": prob, "P": P, "V": V, "kraus": K}
