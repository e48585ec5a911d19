import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_state
from teleportlab.mixed import (
    MixedEnsembleSpec,
    assemble,
    half_chain_negativity,
    kraus_operators,
    mixed_correlator,
    negativity_scan,
    predicted_mixed_correlator,
    write_negativity_outputs,
)
from teleportlab.protocol import ProtocolSpec
from teleportlab.state import DensityMatrix, StateError, UnitVector3, negativity, product_state, rotate_to_frame


def spec_for(L, u, theta=0.9, phi=0.4, **kw):
    return ProtocolSpec(L=L, u=u, n=UnitVector3(theta, phi), **kw)


@given(st.floats(0.0, np.pi / 2), st.booleans(), st.floats(0, np.pi), st.floats(0, 2 * np.pi))
def test_kraus_operators_are_complete(u, decoded, theta, phi):
    spec = ProtocolSpec(L=2, u=u, n=UnitVector3(theta, phi))
    for j in range(2):
        ks = kraus_operators(spec, j, decoded)
        assert np.allclose(sum(K.conj().T @ K for K in ks), np.eye(2), atol=1e-12)


def test_assembly_routes_agree():
    L = 5
    psi = random_state(np.random.default_rng(0), L)
    spec = spec_for(L, 0.9)
    ens = MixedEnsembleSpec(spec, "decoded")
    mats = [assemble(psi, ens, route=r).matrix for r in ("closed", "channel", "sum")]
    assert np.abs(mats[0] - mats[1]).max() < 1e-12
    assert np.abs(mats[0] - mats[2]).max() < 1e-12
    und = MixedEnsembleSpec(spec, "undecoded")
    assert np.abs(assemble(psi, und, route="channel").matrix - assemble(psi, und, route="sum").matrix).max() < 1e-12


def test_outcome_sum_equals_closed_form_at_six_sites(ground):
    L = 6
    psi = ground(L)
    ens = MixedEnsembleSpec(ProtocolSpec(L=L, u=0.9, n="x"), "decoded")
    assert np.abs(assemble(psi, ens, route="sum").matrix - assemble(psi, ens, route="closed").matrix).max() < 1e-12


def test_undecoded_tilted_entangler_routes_agree():
    L = 4
    psi = random_state(np.random.default_rng(1), L)
    spec = ProtocolSpec(L=L, u=0.5, n="z", m=(0.2, 0.3, np.sqrt(1 - 0.13)))
    ens = MixedEnsembleSpec(spec, "undecoded")
    assert np.abs(assemble(psi, ens, route="channel").matrix - assemble(psi, ens, route="sum").matrix).max() < 1e-12


@given(st.integers(0, 2**32 - 1), st.floats(0.0, np.pi / 2), st.sampled_from(["decoded", "undecoded"]))
def test_assembled_state_is_a_density_matrix(seed, u, mode):
    L = 4
    rng = np.random.default_rng(seed)
    psi = random_state(rng, L)
    rho = assemble(psi, MixedEnsembleSpec(spec_for(L, u, rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi)), mode)).matrix
    assert np.allclose(rho, rho.conj().T)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_perfect_coupling_gives_pure_input(ground):
    L = 6
    psi = ground(L)
    rho = assemble(psi, MixedEnsembleSpec(ProtocolSpec(L=L, u=np.pi / 4, n="y"), "decoded")).matrix
    assert np.abs(rho - np.outer(psi.amplitudes, psi.amplitudes.conj())).max() < 1e-12


def test_zero_coupling_gives_dephased_input():
    L = 4
    psi = random_state(np.random.default_rng(2), L)
    spec = spec_for(L, 0.0)
    rho = assemble(psi, MixedEnsembleSpec(spec, "decoded")).matrix
    w = np.abs(rotate_to_frame(psi, list(spec.axes)).amplitudes) ** 2
    want = np.zeros_like(rho)
    for k in range(2**L):
        bits = [-1 if (k >> j) & 1 else 1 for j in range(L)]
        v = product_state(bits, list(spec.axes)).amplitudes
        want += w[k] * np.outer(v, v.conj())
    assert np.abs(rho - want).max() < 1e-12


def test_decoded_z_correlators(ground):
    L = 6
    psi = ground(L)
    pristine = DensityMatrix.from_statevector(psi)
    for u in (0.2, 0.6):
        spec = ProtocolSpec(L=L, u=u, n="z")
        rho = assemble(psi, MixedEnsembleSpec(spec, "decoded"))
        zz = mixed_correlator(rho, [0, 2], "z", "n")
        assert zz == pytest.approx(mixed_correlator(pristine, [0, 2], "z", "n"), abs=1e-12)
        xx = mixed_correlator(rho, [1, 4], "z", "n_perp")
        assert xx == pytest.approx(np.sin(2 * u) ** 2 * mixed_correlator(pristine, [1, 4], "z", "n_perp"), abs=1e-12)


def test_undecoded_perp_strings_vanish(ground):
    L = 6
    rho = assemble(ground(L), MixedEnsembleSpec(spec_for(L, 0.7), "undecoded"))
    spec = spec_for(L, 0.7)
    for sites in ([0], [1, 3], [0, 2, 5]):
        assert mixed_correlator(rho, sites, spec.axes[0], "n_perp") == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("mode, classes", [("decoded", ("n", "n_perp", "n_cross")), ("undecoded", ("n", "n_perp"))])
def test_correlator_predictions(ground, mode, classes):
    L = 5
    psi = ground(L)
    spec = spec_for(L, 0.55, b=None)
    rho = assemble(psi, MixedEnsembleSpec(spec, mode))
    for cls in classes:
        for sites in ([2], [0, 3], [1, 2, 4], [0, 1, 2, 3]):
            val = mixed_correlator(rho, sites, spec.axes[0], cls)
            assert val == pytest.approx(predicted_mixed_correlator(psi, spec, sites, cls, mode), abs=1e-12)


def test_negativity_shortcut_at_perfect_coupling(ground):
    L = 6
    psi = ground(L)
    spec = ProtocolSpec(L=L, u=np.pi / 4, n="x")
    rho = assemble(psi, MixedEnsembleSpec(spec, "decoded"))
    assert half_chain_negativity(psi, spec) == pytest.approx(negativity(rho, [0, 1, 2]), abs=1e-10)


def test_negativity_scan_small(ground, tmp_path):
    scan = negativity_scan("x", [4, 6, 8, 10], [0.0, 0.5, 1.0], states={L: ground(L) for L in (4, 6, 8, 10)})
    assert scan.E.shape == (3, 4)
    assert np.all(scan.E >= 0)
    assert np.all(np.diff(scan.E, axis=0) <= 1e-12)
    assert len(scan.c_eff()) == 3
    write_negativity_outputs(scan, tmp_path / "neg.csv", tmp_path / "neg.json", {"axis": "x"})
    lines = (tmp_path / "neg.csv").read_text().splitlines()
    assert lines[0] == "# axis: x" and lines[1] == "axis,L,alpha,E"
    assert len(lines) == 2 + 12
    summary = json.loads((tmp_path / "neg.json").read_text())
    assert summary["L_window"] == [4, 10]
    assert summary["fits"][0]["window"] == [4.0, 10.0]
    assert {"c_eff_E", "c_eff_E_err", "slope"} <= set(summary["fits"][0])


def test_invalid_ensembles():
    with pytest.raises(StateError):
        MixedEnsembleSpec(ProtocolSpec(L=13, u=0.3), "decoded")
    with pytest.raises(StateError):
        MixedEnsembleSpec(ProtocolSpec(L=3, u=0.3, n="z", m="y"), "decoded")
    with pytest.raises(StateError):
        MixedEnsembleSpec(ProtocolSpec(L=3, u=0.3), "averaged")
    psi = random_state(np.random.default_rng(3), 3)
    with pytest.raises(StateError):
        assemble(psi, MixedEnsembleSpec(ProtocolSpec(L=3, u=0.3), "undecoded"), route="closed")
