"""Acceptance suite: one PASS/FAIL line per criterion, printed at the end of the run.

Run ``pytest tests/test_acceptance.py -v`` to see the report; each line
states the measured value and the tolerance it is compared to.
"""

import time
from itertools import combinations

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import random_state
from teleportlab.fitting import fit_power_law
from teleportlab.gaussian import correlation_matrix, entropies_from_correlation, marginal_correlators
from teleportlab.ising import critical_ground_state, pristine_correlators, tfim_sparse
from teleportlab.mixed import MixedEnsembleSpec, assemble, mixed_correlator, negativity_scan, predicted_mixed_correlator
from teleportlab.perturbative import (
    frustration_free_residuals,
    parent_data,
    parent_hamiltonian_apply,
    perturbative_correlators,
    renyi2_perturbative,
    strange_correlators,
)
from teleportlab.protocol import (
    OutcomeString,
    ProtocolSpec,
    closed_form_penultimate,
    decode,
    deform,
    outcome_probability,
    run_bruteforce,
    sample_outcome_sequential,
    teleported_state,
)
from teleportlab.scenarios import default_config, run_scenario
from teleportlab.state import Statevector, UnitVector3, expectation_pauli_string, renyi_entropy

REPORT = []


def record(criterion, ok, detail, status=None):
    line = f"{status or ('PASS' if ok else 'FAIL')} criterion {criterion}: {detail}"
    REPORT.append(line)
    print(line)
    return ok


def u_of(alpha):
    return float(np.arctan(np.exp(-alpha)))


def random_spec(rng, L, tilted):
    n = UnitVector3(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
    m = None
    if tilted:
        v = rng.normal(size=3)
        m = tuple(v / np.linalg.norm(v))
    b = OutcomeString(rng.choice([1, -1], L))
    return ProtocolSpec(L=L, u=float(rng.uniform(0.05, np.pi / 2 - 0.05)), n=n, m=m, b=b)


def connected_xx(st, j, k):
    e = lambda ops: expectation_pauli_string(st, ops).real
    return e({j: "x", k: "x"}) - e({j: "x"}) * e({k: "x"})


def test_1_closed_form_equivalence():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(20):
        L = int(rng.integers(1, 7))
        psi = random_state(rng, L)
        spec = random_spec(rng, L, tilted=i % 2 == 1)
        a = OutcomeString(rng.choice([1, -1], L))
        _, brute = run_bruteforce(psi, spec, a)
        _, closed, _ = closed_form_penultimate(psi, spec, a)
        worst = max(worst, abs(1 - abs(np.vdot(brute.amplitudes, closed.amplitudes))))
    dt = time.perf_counter() - t0
    ok = record(1, worst < 1e-10 and dt < 60, f"max |1 - |<brute|closed>|| = {worst:.2e} (tol 1e-10), runtime {dt:.1f} s (tol 60 s)")
    assert ok


def test_2_perfect_protocol_limit():
    L = 5
    rng = np.random.default_rng(102)
    psi = random_state(rng, L)
    spec = ProtocolSpec(L=L, u=np.pi / 4, n=UnitVector3(1.1, 0.4), b=OutcomeString("-++-+"))
    dp, df = 0.0, 0.0
    for mask in range(2**L):
        a = OutcomeString.from_mask(mask, L)
        p, pen = run_bruteforce(psi, spec, a)
        dp = max(dp, abs(p - 2.0**-L))
        df = max(df, abs(1 - abs(np.vdot(decode(pen, spec, a).amplitudes, psi.amplitudes))))
    ok = record(2, dp < 1e-14 and df < 1e-12, f"max |p - 2^-L| = {dp:.1e}, max decoded infidelity = {df:.1e} (exact up to rounding)")
    assert ok


def test_3_normalization_identity():
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(20):
        L = int(rng.integers(1, 6))
        psi = random_state(rng, L)
        spec = random_spec(rng, L, tilted=False)
        a = OutcomeString(rng.choice([1, -1], L))
        H = np.zeros((2**L, 2**L), dtype=complex)
        for j in range(L):
            H -= a[j] * np.kron(np.kron(np.eye(2 ** (L - 1 - j)), spec.axes[j].pauli()), np.eye(2**j))
        N_direct = np.vdot(psi.amplitudes, expm(-spec.alpha * H) @ psi.amplitudes).real
        p = outcome_probability(psi, spec, a)
        worst = max(worst, abs(p / (np.sin(spec.u) * np.cos(spec.u)) ** L - N_direct) / N_direct)
    ok = record(3, worst < 1e-10, f"max relative error of p / (sin u cos u)^L vs <psi|e^(-alpha H_a)|psi> = {worst:.2e} (tol 1e-10)")
    assert ok


def test_4_pristine_criticality():
    t0 = time.perf_counter()
    seps = np.arange(20, 101, 10)
    c = pristine_correlators(seps)
    parts, ok = [], True
    for key, expo in (("XX", 2.0), ("YY", 2.25), ("ZZ", 0.25)):
        got = -fit_power_law(seps, c[key]).slope
        ok &= abs(got / expo - 1) < 0.05
        parts.append(f"{key} {got:.4f} vs {expo}")
    dx = abs(c["X"] - 2 / np.pi)
    ok &= dx < 1e-3
    dt = time.perf_counter() - t0
    ok &= dt < 60
    ok = record(4, ok, f"exponents {', '.join(parts)} (tol 5%); |<X> - 2/pi| = {dx:.1e} (tol 1e-3); {dt:.1f} s")
    assert ok


def test_5_marginal_case():
    t0 = time.perf_counter()
    bundle = run_scenario(default_config("marginal-x"), write=False)
    dt = time.perf_counter() - t0
    ok = dt < 600
    parts = []
    for row in bundle.summary["alphas"]:
        ec = abs(row["c_eff_fit"] / row["c_eff_closed"] - 1)
        ez = abs(row["Delta_Z_fit"] / row["Delta_Z_pred"] - 1)
        ey = abs(row["Delta_Y_fit"] / row["Delta_Y_pred"] - 1)
        ea = abs(row["XX_amplitude_fit"] / row["XX_amplitude_pred"] - 1)
        ok &= ec < 0.02 and ez < 0.05 and ey < 0.05 and ea < 0.05
        parts.append(f"alpha={row['alpha']}: c_eff {row['c_eff_fit']:.4f}/{row['c_eff_closed']:.4f}, dZ {ez:.1%}, dY {ey:.1%}, XX amp {ea:.1%}")
    ok = record(5, ok, "; ".join(parts) + f" (tol 2% / 5% / 5% / 5%); {dt:.0f} s (tol 600 s)")
    assert ok


@pytest.mark.parametrize("alpha", [0.3, 0.8])
def test_6_cross_engine(alpha):
    L = 12
    psi = deform(critical_ground_state(L).state, [(alpha, "x")])
    seps = [1, 2, 3, 4, 5, 6]
    g = marginal_correlators(alpha, seps, L=L)
    worst = abs(g["X"] - expectation_pauli_string(psi, {0: "x"}).real)
    e1 = lambda ops: expectation_pauli_string(psi, ops).real
    for i, r in enumerate(seps):
        worst = max(worst, abs(g["XX"][i] - connected_xx(psi, 0, r)))
        for key, p in (("YY", "y"), ("ZZ", "z")):
            worst = max(worst, abs(g[key][i] - (e1({0: p, r: p}) - e1({0: p}) * e1({r: p}))))
    S_g = entropies_from_correlation(correlation_matrix(alpha, L=L), L // 2)
    dS = abs(S_g - renyi_entropy(psi, list(range(L // 2))))
    ok = record(6, worst < 1e-8 and dS < 1e-8, f"alpha={alpha}, L={L}: max correlator diff {worst:.1e}, half-chain entropy diff {dS:.1e} (tol 1e-8)")
    assert ok


def test_7_relevant_case():
    L = 12
    psi = critical_ground_state(L).state
    a = OutcomeString.uniform(L)
    sc = strange_correlators(psi, a, "z")
    u3 = u_of(3.0)
    _, pen3, _ = closed_form_penultimate(psi, ProtocolSpec(L=L, u=u3, n="z"), a)
    tele3 = teleported_state(psi, ProtocolSpec(L=L, u=u3, n="z"), a)
    pred = perturbative_correlators(sc, u3)
    seps = [2, 3, 4, 5]
    ratios = np.array([connected_xx(pen3, 0, r) / (u3**2 * sc.V[0, r].real) for r in seps])
    ok_a = bool(np.all(np.abs(ratios - 1) < 0.1))
    record("7a", ok_a, f"<XX>_c / (u^2 V) at alpha=3, r=2..5: {np.round(ratios, 3).tolist()} (tol 10% around 1)")
    full = np.array([connected_xx(tele3, 0, r) / pred["perp"][0, r].real for r in seps])
    record("7a", True, f"teleported <XX>_c / (2 tan^2 u V) at alpha=3, r=2..5: {np.round(full, 3).tolist()}", status="INFO")

    u4 = u_of(4.0)
    _, pen4, _ = closed_form_penultimate(psi, ProtocolSpec(L=L, u=u4, n="z"), a)
    errs = []
    S2 = {}
    for ell in range(1, L // 2 + 1):
        S2[ell] = renyi_entropy(pen4, list(range(ell)), 2)
        errs.append(abs(renyi2_perturbative(sc, range(ell), u4) / S2[ell] - 1))
    ok_b = max(errs) < 0.1
    record("7b", ok_b, f"S2 ED vs perturbative at alpha=4, ell=1..6: max rel err {max(errs):.2%} (tol 10%)")
    window = [S2[4], S2[5], S2[6]]
    var = (max(window) - min(window)) / max(window)
    ok_c = var < 0.05
    record("7c", ok_c, f"S2(ell) variation over ell in [4, 6] at L=12, alpha=4: {var:.2%} (tol 5%)")
    assert ok_a and ok_b and ok_c


def test_8_disguised_marginal():
    bundle = run_scenario(default_config("disguised-y"), write=False)
    p = bundle.summary["deviation_exponent"]
    ok = record(8, abs(p - 2) < 0.4, f"ZZ(r=6) deviation exponent at L=16 over alpha in [0.05, 0.4]: p = {p:.3f} (tol 2 +- 0.4)")
    assert ok


def test_9_full_counting_statistics():
    bundle = run_scenario(default_config("fcs"), write=False)
    s = bundle.summary
    pz, px = s["z_second_moment_exponent"], s["x_variance_exponent"]
    pref = np.array(s["s_prefactor"])
    shifts = {}
    for row in bundle.tables["x_peak_shift"].rows:
        shifts[(int(row[0]), float(row[1]))] = float(row[2])
    rel = [abs(shifts[(14, a)] / shifts[(18, a)] - 1) for a in (0.1, 0.2, 0.5)]
    ok = abs(pz / 1.75 - 1) < 0.1 and abs(px - 1) < 0.1 and np.all(np.abs(pref / 0.5 - 1) < 0.15) and max(rel) < 0.15
    ok = record(
        9,
        ok,
        f"z exponent {pz:.4f} vs 7/4, x exponent {px:.4f} vs 1 (tol 10%); s / L^(7/8) in [{pref.min():.4f}, {pref.max():.4f}] vs 1/2 (tol 15%); "
        f"x shift L=14 vs 18 max rel diff {max(rel):.2%} (tol 15%)",
    )
    assert ok


def test_10_typical_outcomes():
    bundle = run_scenario(default_config("typical", seed=2024), write=False)
    maxz = bundle.summary["max_abs_z"]
    L = 4
    psi = critical_ground_state(L).state
    spec = ProtocolSpec(L=L, u=u_of(0.5), n="x")
    worst = 0.0
    for mask in range(2**L):
        a = OutcomeString.from_mask(mask, L)
        _, p, _ = sample_outcome_sequential(psi, spec, forced=a)
        worst = max(worst, abs(p - outcome_probability(psi, spec, a)))
    ok = record(10, maxz < 4 and worst < 1e-10, f"L=6, 1e5 samples: max |z| = {maxz:.2f} (tol 4); L=4 sampler vs overlaps max diff {worst:.1e} (tol 1e-10)")
    assert ok


def test_11_mixed_state():
    L = 6
    psi = critical_ground_state(L).state
    rng = np.random.default_rng(111)
    worst = 0.0
    subsets = [list(c) for k in range(1, L + 1) for c in combinations(range(L), k)]
    for _ in range(3):
        spec = ProtocolSpec(L=L, u=float(rng.uniform(0.1, 1.4)), n=UnitVector3(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi)))
        for mode, classes in (("decoded", ("n", "n_perp", "n_cross")), ("undecoded", ("n", "n_perp"))):
            rho = assemble(psi, MixedEnsembleSpec(spec, mode))
            for cls in classes:
                for sites in subsets:
                    val = mixed_correlator(rho, sites, spec.axes[0], cls)
                    worst = max(worst, abs(val - predicted_mixed_correlator(psi, spec, sites, cls, mode)))
    Ls = [6, 8, 10, 12]
    alphas = [0.0, 0.5, 1.0, 1.5]
    states = {n: critical_ground_state(n).state for n in Ls}
    cx = negativity_scan("x", Ls, alphas, states=states).c_eff()
    cz = negativity_scan("z", Ls, alphas, states=states).c_eff()
    c0 = cx[0]
    mono = bool(np.all(np.diff(cx) <= 0))
    ok = worst < 1e-12 and 0.4 <= c0 <= 0.7 and cz[2] < 0.1 and mono
    ok = record(
        11,
        ok,
        f"identity residual {worst:.1e} (tol 1e-12); c_eff^E(alpha=0) = {c0:.4f} (in [0.4, 0.7]); z c_eff^E(1) = {cz[2]:.4f} (< 0.1); "
        f"x c_eff^E on {alphas} = {np.round(cx, 4).tolist()} (non-increasing)",
    )
    assert ok


def test_12_parent_hamiltonians():
    L = 8
    a = OutcomeString.uniform(L)
    dim = 2**L
    H = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[i] = 1
        H[:, i] = parent_hamiltonian_apply(Statevector(e, L), variant="nonhermitian", alpha=0.7, outcome=a, axes="z").amplitudes
    ev = np.linalg.eigvals(H)
    ref = np.linalg.eigvalsh(tfim_sparse(L).toarray())
    dspec = max(np.abs(np.sort(ev.real) - ref).max(), np.abs(ev.imag).max())
    psi = critical_ground_state(L).state
    res = 0.0
    for alpha in (3.0, 4.0):
        spec = ProtocolSpec(L=L, u=u_of(alpha), n="z")
        _, pen, _ = closed_form_penultimate(psi, spec, a)
        res = max(res, frustration_free_residuals(pen, parent_data(psi, spec, a)).max())
    ok = record(12, dspec < 1e-10 and res < 1e-6, f"sorted spectra H_alpha vs H_c diff {dspec:.1e} (tol 1e-10); frustration-free residual {res:.1e} (tol 1e-6)")
    assert ok


def test_13_cancellation_scan():
    bundle = run_scenario(default_config("cancellation-xy"), write=False)
    hits = []
    for r in bundle.summary["ridges"]:
        if r["alpha_y"] <= 0 or not r["interior"] or r["c_eff_left"] is None or r["c_eff_right"] is None:
            continue
        if abs(r["c_eff_ridge"] / 0.5 - 1) < 0.05 and r["c_eff_left"] < 0.45 and r["c_eff_right"] < 0.45:
            hits.append(r)
    detail = "; ".join(
        f"alpha_y={r['alpha_y']}: ridge alpha_x={r['alpha_x_ridge'] + 0.0:+.1f}, c={r['c_eff_ridge']:.4f}, neighbours {r['c_eff_left']:.3f}/{r['c_eff_right']:.3f}"
        for r in hits
    )
    ok = record(13, bool(hits), (detail or "no qualifying ridge") + " (tol |c - 0.5| < 5%, neighbours at +-0.3 below 0.45)")
    assert ok
