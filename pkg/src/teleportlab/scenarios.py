"""Named experiments, their configuration schema and structured outputs.

A config is an INI file with one ``[experiment]`` section::

    [experiment]
    scenario = fcs
    seed = 1234
    out = runs/fcs
    Ls = 10:18:2
    alphas = 0.1, 0.2, 0.5

Lists are comma separated; ``start:stop:step`` is an inclusive grid.
Every run writes one CSV per table, ``summary.json`` and ``manifest.json``.
"""

from __future__ import annotations

import configparser
import csv
import json
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy

from . import __version__

SCHEMA_VERSION = 1

_COMMON = {
    "scenario": (str, None, "scenario name"),
    "seed": (int, 0, "master seed (64-bit); grid points use spawned streams"),
    "out": (str, "teleportlab-out", "output directory"),
    "threads": (int, 1, "worker threads for independent grid points"),
    "max_memory_gb": (float, 4.0, "memory gate for dense arrays"),
}

SCENARIOS: dict[str, dict[str, tuple]] = {
    "relevant-z": {
        "L": (int, 12, "chain length"),
        "alphas": (list, [3.0, 4.0], "imperfection strengths"),
        "separations": (list, [2, 3, 4, 5], "separations for <X X>_c"),
    },
    "marginal-x": {
        "alphas": (list, [0.0, 0.25, 0.5, 1.0], "imperfection strengths"),
        "separations": (list, list(range(20, 101, 10)), "correlator separations (infinite chain)"),
        "ells": (list, list(range(50, 301, 10)), "interval lengths for entropy fits"),
        "nodes": (int, 4096, "Gauss-Legendre nodes per half of the Brillouin zone"),
    },
    "disguised-y": {
        "L": (int, 16, "chain length"),
        "alphas": (list, list(np.round(np.linspace(0.05, 0.4, 8), 6)), "imperfection strengths"),
        "separation": (int, 6, "separation of the Z Z correlator"),
    },
    "cancellation-xy": {
        "L": (int, 16, "chain length"),
        "alpha_x": (list, list(np.round(np.arange(-0.7, 0.51, 0.1), 6) + 0.0), "uniform X deformation grid"),
        "alpha_y": (list, [0.0, 0.2, 0.4, 0.6, 0.8], "staggered Y deformation grid"),
        "offset": (float, 0.3, "alpha_x distance defining off-ridge neighbours"),
    },
    "typical": {
        "L": (int, 6, "chain length"),
        "alpha": (float, 0.5, "imperfection strength"),
        "axis": (str, "x", "measurement axis"),
        "samples": (int, 100000, "number of Born-sampled outcomes"),
    },
    "mixed-state": {
        "Ls": (list, [6, 8, 10, 12], "chain lengths"),
        "alphas": (list, [0.0, 0.5, 1.0, 1.5], "imperfection strengths"),
        "axes": (list, ["x", "z"], "measurement axes"),
        "check_L": (int, 6, "chain length of the correlator-identity check"),
    },
    "fcs": {
        "Ls": (list, [10, 12, 14, 16, 18], "chain lengths"),
        "alphas": (list, [0.1, 0.2, 0.5], "reweighting strengths"),
    },
    "single-qubit": {
        "u_values": (list, [0.3, 0.5, 0.7, float(np.pi / 4)], "entangling angles for both gates"),
        "states": (int, 3, "random single-qubit inputs per grid point"),
    },
}


class ConfigError(ValueError):
    pass


def _parse_grid(text: str, kind=float) -> list:
    text = text.strip()
    if not text:
        return []
    if ":" in text and "," not in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ConfigError(f"grid step must be positive in {text!r}")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        vals = [start + i * step for i in range(n)]
        return [kind(round(v, 12)) for v in vals]
    out = []
    for item in text.split(","):
        item = item.strip()
        try:
            out.append(kind(item))
        except ValueError:
            out.append(item)
    return out


def _coerce(name: str, typ, raw: str, default):
    try:
        if typ is list:
            kind = type(default[0]) if default else float
            if kind is np.float64:
                kind = float
            return _parse_grid(raw, kind if kind in (int, float) else str)
        if typ is int:
            return int(raw, 0)
        return typ(raw)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"cannot parse {name} = {raw!r}") from exc


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int = 0
    out: str = "teleportlab-out"
    threads: int = 1
    max_memory_gb: float = 4.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {sorted(SCENARIOS)}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        schema = SCENARIOS[self.scenario]
        unknown = set(self.params) - set(schema)
        if unknown:
            raise ConfigError(f"unknown keys for {self.scenario}: {sorted(unknown)}")
        full = {k: (list(v[1]) if isinstance(v[1], list) else v[1]) for k, v in schema.items()}
        full.update(self.params)
        for k, v in full.items():
            if isinstance(v, list) and not v:
                raise ConfigError(f"grid {k!r} is empty")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        self.params = full

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "scenario" not in data or not data["scenario"]:
            raise ConfigError("config must name a scenario")
        scen = data.pop("scenario")
        common = {k: data.pop(k) for k in list(data) if k in _COMMON}
        return cls(scenario=scen, params=data, **common)

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        parser.optionxform = str
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
        if "experiment" not in parser:
            raise ConfigError("config needs an [experiment] section")
        raw = dict(parser["experiment"])
        raw.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})
        return cls.from_strings(raw)

    @classmethod
    def from_strings(cls, raw: dict) -> "ExperimentConfig":
        scen = raw.get("scenario")
        if scen not in SCENARIOS:
            raise ConfigError(f"unknown scenario {scen!r}; choose from {sorted(SCENARIOS)}")
        schema = {**_COMMON, **SCENARIOS[scen]}
        data = {}
        for k, v in raw.items():
            if k not in schema:
                raise ConfigError(f"unknown key {k!r} for scenario {scen}")
            typ, default, _ = schema[k]
            data[k] = v if k == "scenario" else _coerce(k, typ, v, default)
        return cls.from_mapping(data)

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": int(self.seed),
            "out": self.out,
            "threads": self.threads,
            "max_memory_gb": self.max_memory_gb,
            **{k: _jsonable(v) for k, v in self.params.items()},
        }


def print_schema() -> str:
    lines = ["[experiment]  common keys:"]
    for k, (typ, default, doc) in _COMMON.items():
        lines.append(f"  {k} ({typ.__name__}, default {default!r}): {doc}")
    for scen, keys in SCENARIOS.items():
        lines.append(f"scenario = {scen}")
        for k, (typ, default, doc) in keys.items():
            d = ", ".join(str(x) for x in default) if isinstance(default, list) else repr(default)
            lines.append(f"  {k} ({typ.__name__}, default {d}): {doc}")
    return "\n".join(lines)


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    return v


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row length does not match columns")
        self.rows.append(values)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def write_table(path, table: Table):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for k, v in table.metadata.items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_fmt(v) for v in row])


@dataclass
class ReportBundle:
    tables: dict
    summary: dict
    manifest: dict
    paths: dict = field(default_factory=dict)


def _pmap(fn: Callable, items: list, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _u_of(alpha: float) -> float:
    return float(np.arctan(np.exp(-alpha)))


# scenarios -------------------------------------------------------------------


def _relevant_z(cfg: ExperimentConfig, rngs) -> tuple[dict, dict]:
    from .fitting import fit_power_law
    from .ising import critical_ground_state
    from .perturbative import perturbative_correlators, renyi2_perturbative, strange_correlators
    from .protocol import OutcomeString, ProtocolSpec, closed_form_penultimate, teleported_state
    from .state import expectation_pauli_string, renyi_entropy

    L = int(cfg.params["L"])
    psi = critical_ground_state(L, max_memory_gb=cfg.max_memory_gb).state
    a = OutcomeString.uniform(L)
    sc = strange_correlators(psi, a, "z")
    corr = Table(["alpha", "separation", "XX_c_penultimate", "XX_c_teleported", "V", "pert_2u2V", "u2V"])
    ent = Table(["alpha", "ell", "S2_ed", "S2_pert"])
    vt = Table(["separation", "V"])
    for r in range(1, L // 2 + 1):
        vt.add(r, float(sc.V[0, r].real))

    def conn(st, j, k):
        e = lambda ops: expectation_pauli_string(st, ops).real
        return e({j: "x", k: "x"}) - e({j: "x"}) * e({k: "x"})

    summary = {"V_decay": None, "alphas": []}
    for alpha in cfg.params["alphas"]:
        u = _u_of(alpha)
        spec = ProtocolSpec(L=L, u=u, n="z")
        _, pen, _ = closed_form_penultimate(psi, spec, a)
        tele = teleported_state(psi, spec, a)
        pred = perturbative_correlators(sc, u)
        ratios = []
        for r in cfg.params["separations"]:
            r = int(r)
            xp, xt = conn(pen, 0, r), conn(tele, 0, r)
            corr.add(float(alpha), r, xp, xt, float(sc.V[0, r].real), float(pred["perp"][0, r].real), float(pred["bare"][0, r].real))
            ratios.append(xp / float(pred["bare"][0, r].real))
        s2 = []
        for ell in range(1, L // 2 + 1):
            val = renyi_entropy(pen, list(range(ell)), 2)
            s2.append(val)
            ent.add(float(alpha), ell, val, renyi2_perturbative(sc, range(ell), u))
        half = renyi_entropy(pen, list(range(L // 2)), 2)
        summary["alphas"].append(
            {
                "alpha": float(alpha),
                "XX_c_over_u2V": ratios,
                "S2_half_ed": half,
                "S2_half_pert": renyi2_perturbative(sc, range(L // 2), u),
                "S2_variation_ell_4_6": float((max(s2[3:6]) - min(s2[3:6])) / max(s2[3:6])) if L >= 12 else None,
            }
        )
    seps = np.arange(2, L // 2 + 1)
    fit = fit_power_law(chord_distance(seps, L), sc.V[0, seps].real)
    summary["V_decay"] = {"exponent": -fit.slope, "exponent_err": fit.slope_err, "window": [2, L // 2], "abscissa": "chord"}
    return {"correlators": corr, "renyi2": ent, "strange_V": vt}, summary


def _marginal_x(cfg: ExperimentConfig, rngs) -> tuple[dict, dict]:
    from .fitting import extrapolate_in_inverse, extrapolated_exponent, fit_log_coefficient
    from .gaussian import c_eff, entropy_curve, fisher_hartwig_exponents, marginal_correlators

    seps = [int(s) for s in cfg.params["separations"]]
    ells = [int(e) for e in cfg.params["ells"]]
    nodes = int(cfg.params["nodes"])

    def point(alpha):
        corr = marginal_correlators(alpha, seps, nodes=nodes)
        S = entropy_curve(alpha, ells, 1.0, nodes=nodes)
        return alpha, corr, S

    results = _pmap(point, [float(a) for a in cfg.params["alphas"]], cfg.threads)
    ct = Table(["alpha", "separation", "X", "XX_c", "YY", "ZZ"])
    et = Table(["alpha", "ell", "S1"])
    summary = {"window_separations": [min(seps), max(seps)], "window_ells": [min(ells), max(ells)], "alphas": []}
    for alpha, corr, S in results:
        for i, r in enumerate(seps):
            ct.add(alpha, r, corr["X"], corr["XX"][i], corr["YY"][i], corr["ZZ"][i])
        for ell, s in zip(ells, S):
            et.add(alpha, ell, float(s))
        fit = fit_log_coefficient(ells, S)
        fh = fisher_hartwig_exponents(alpha)
        r = np.asarray(seps, dtype=float)
        dz, dz_err = extrapolated_exponent(r, corr["ZZ"], return_error=True)
        dy, dy_err = extrapolated_exponent(r, corr["YY"], return_error=True)
        amp, amp_err = extrapolate_in_inverse(r, r**2 * np.abs(corr["XX"]), return_error=True)
        summary["alphas"].append(
            {
                "alpha": alpha,
                "c_eff_fit": 3 * fit.slope,
                "c_eff_fit_err": 3 * fit.slope_err,
                "c_eff_closed": c_eff(alpha, 1, "closed"),
                "Delta_Z_fit": -dz / 2,
                "Delta_Z_fit_err": dz_err / 2,
                "Delta_Z_pred": fh.delta_z,
                "Delta_Y_fit": -dy / 2,
                "Delta_Y_fit_err": dy_err / 2,
                "Delta_Y_pred": fh.delta_y,
                "XX_amplitude_fit": amp,
                "XX_amplitude_fit_err": amp_err,
                "XX_amplitude_pred": fh.xx_amplitude,
                "X": corr["X"],
            }
        )
    return {"correlators": ct, "entropy": et}, summary


def _disguised_y(cfg: ExperimentConfig, rngs) -> tuple[dict, dict]:
    from .fitting import fit_power_law
    from .ising import critical_ground_state
    from .protocol import OutcomeString, deform
    from .state import expectation_pauli_string

    L, sep = int(cfg.params["L"]), int(cfg.params["separation"])
    psi = critical_ground_state(L, max_memory_gb=cfg.max_memory_gb).state
    neel = np.array(OutcomeString.neel(L))
    z0 = expectation_pauli_string(psi, {0: "z", sep: "z"}).real

    def point(alpha):
        st = deform(psi, [(alpha, neel, "y")])
        return alpha, expectation_pauli_string(st, {0: "z", sep: "z"}).real

    t = Table(["alpha", "ZZ", "ZZ_pristine", "deviation"], metadata={"L": L, "separation": sep, "outcome": "neel"})
    res = _pmap(point, [float(a) for a in cfg.params["alphas"]], cfg.threads)
    for a, zz in res:
        t.add(a, zz, z0, zz - z0)
    al = np.array([r[0] for r in res])
    dev = np.array([r[1] - z0 for r in res])
    fit = fit_power_law(al, dev)
    summary = {"deviation_exponent": fit.slope, "deviation_exponent_err": fit.slope_err, "window": [float(al.min()), float(al.max())]}
    return {"zz_deviation": t}, summary


def chord_distance(r, L: int) -> np.ndarray:
    """``(L/pi) sin(pi r/L)``, the ring distance entering critical correlators."""
    return (L / np.pi) * np.sin(np.pi * np.asarray(r, dtype=float) / L)


def chord_c_eff(psi, L: int | None = None):
    """Central charge from ``S(l) = (c/3) ln[(L/pi) sin(pi l/L)] + const`` for ``l = 2..L/2``."""
    from .fitting import fit_log_coefficient
    from .state import renyi_entropy

    L = psi.L if L is None else L
    ells = np.arange(2, L // 2 + 1)
    S = [renyi_entropy(psi, list(range(int(l))), 1) for l in ells]
    fit = fit_log_coefficient(chord_distance(ells, L), S)
    return 3 * fit.slope, 3 * fit.slope_err


def cancellation_ridges(surface: dict, alpha_x: list, alpha_y: list, offset: float) -> list:
    """Per ``alpha_y``, the ``alpha_x`` maximizing ``c_eff`` and the values ``offset`` away on both sides."""
    ridges = []
    ax = np.asarray(alpha_x, dtype=float)
    for ay in alpha_y:
        row = np.array([surface[(float(x), float(ay))] for x in ax])
        i = int(np.argmax(row))
        left = ax[i] - offset
        right = ax[i] + offset
        li = int(np.argmin(np.abs(ax - left)))
        ri = int(np.argmin(np.abs(ax - right)))
        ridges.append(
            {
                "alpha_y": float(ay),
                "alpha_x_ridge": float(ax[i]),
                "c_eff_ridge": float(row[i]),
                "interior": bool(0 < i < ax.size - 1),
                "c_eff_left": float(row[li]) if abs(ax[li] - left) < 1e-9 else None,
                "c_eff_right": float(row[ri]) if abs(ax[ri] - right) < 1e-9 else None,
            }
        )
    return ridges


def _cancellation_xy(cfg: ExperimentConfig, rngs) -> tuple[dict, dict]:
    from .gaussian import c_eff
    from .ising import critical_ground_state
    from .protocol import deform

    L = int(cfg.params["L"])
    psi = critical_ground_state(L, max_memory_gb=cfg.max_memory_gb).state
    stag = np.array([(-1) ** j for j in range(L)])
    grid = [(float(x), float(y)) for y in cfg.params["alpha_y"] for x in cfg.params["alpha_x"]]

    def point(p):
        ax, ay = p
        st = deform(psi, [(ax, "x"), (ay, stag, "y")])
        return p, chord_c_eff(st)

    t = Table(["alpha_x", "alpha_y", "alpha_y_sq", "c_eff", "c_eff_err", "c_eff_gaussian"], metadata={"L": L, "fit": "chord, l = 2..L/2"})
    surface = {}
    for (ax, ay), (c, err) in _pmap(point, grid, cfg.threads):
        surface[(ax, ay)] = c
        gauss = c_eff(ax, 1, "closed") if ay == 0.0 else float("nan")
        t.add(ax, ay, ay**2, c, err, gauss)
    ridges = cancellation_ridges(surface, cfg.params["alpha_x"], cfg.params["alpha_y"], float(cfg.params["offset"]))
    # finite-size check against the exact infinite-chain value on the alpha_y = 0 row
    gauss_dev = [abs(surface[(float(x), 0.0)] - c_eff(float(x), 1, "closed")) for x in cfg.params["alpha_x"] if (float(x), 0.0) in surface]
    summary = {
        "L": L,
        "offset": float(cfg.params["offset"]),
        "ridges": ridges,
        "alpha_y0_max_dev_from_gaussian": float(max(gauss_dev)) if gauss_dev else None,
    }
    return {"c_eff_surface": t}, summary


def typical_statistics(psi, spec, samples: np.ndarray) -> dict:
    """Sample means and connected pair correlations of outcome bits with predictions and z-scores."""
    from .state import expectation_pauli_string

    L = spec.L
    axis = spec.axes[0]
    n = samples.shape[0]
    c2u = np.cos(2 * spec.u)
    one = np.array([expectation_pauli_string(psi, {j: axis}).real for j in range(L)])
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(n)
    singles = [
        {"site": j, "mean": float(mean[j]), "pred": float(c2u * one[j]), "se": float(se[j]), "z": float((mean[j] - c2u * one[j]) / se[j])}
        for j in range(L)
    ]
    pairs = []
    centered = samples - mean
    for j in range(L):
        for k in range(j + 1, L):
            prod = centered[:, j] * centered[:, k]
            val = prod.mean() * n / (n - 1)
            s = prod.std(ddof=1) / np.sqrt(n)
            two = expectation_pauli_string(psi, {j: axis, k: axis}).real
            pred = c2u**2 * (two - one[j] * one[k])
            pairs.append({"j": j, "k": k, "connected": float(val), "pred": float(pred), "se": float(s), "z": float((val - pred) / s)})
    return {"singles": singles, "pairs": pairs}


def _typical(cfg: ExperimentConfig, rngs) -> tuple[dict, dict]:
    from .ising import critical_ground_state
    from .protocol import ProtocolSpec, sample_outcomes

    L = int(cfg.params["L"])
    alpha = float(cfg.params["alpha"])
    psi = critical_ground_state(L).state
    spec = ProtocolSpec(L=L, u=_u_of(alpha), n=cfg.params["axis"])
    samples = sample_outcomes(psi, spec, rngs[0], int(cfg.params["samples"]))
    stats = typical_statistics(psi, spec, samples)
    t1 = Table(["site", "mean", "pred", "se", "z"], metadata={"L": L, "alpha": alpha, "axis": cfg.params["axis"]})
    for s in stats["singles"]:
        t1.add(*s.values())
    t2 = Table(["j", "k", "connected", "pred", "se", "z"], metadata={"L": L, "alpha": alpha, "axis": cfg.params["axis"]})
    for p in stats["pairs"]:
        t2.add(*p.values())
    zs = [abs(s["z"]) for s in stats["singles"]] + [abs(p["z"]) for p in stats["pairs"]]
    summary = {"samples": int(cfg.params["samples"]), "max_abs_z": float(max(zs)), "within_4_sigma": bool(max(zs) < 4)}
    return {"site_means": t1, "pair_connected": t2}, summary


def _mixed_state(cfg: ExperimentConfig, rngs) -> tuple[dict, dict]:
    from .ising import critical_ground_state
    from .mixed import MixedEnsembleSpec, assemble, mixed_correlator, negativity_scan, predicted_mixed_correlator
    from .protocol import ProtocolSpec
    from .state import UnitVector3

    Ls = [int(x) for x in cfg.params["Ls"]]
    alphas = [float(a) for a in cfg.params["alphas"]]
    neg = Table(["axis", "L", "alpha", "E"])
    states = {L: critical_ground_state(L).state for L in Ls}
    summary = {"negativity": []}
    for ax in cfg.params["axes"]:
        scan = negativity_scan(ax, Ls, alphas, states=states, max_memory_gb=cfg.max_memory_gb)
        for row in scan.rows():
            neg.add(row["axis"], row["L"], row["alpha"], row["E"])
        summary["negativity"].append(scan.summary())
    Lc = int(cfg.params["check_L"])
    psi = critical_ground_state(Lc).state
    rng = rngs[0]
    chk = Table(["u", "theta", "phi", "mode", "axis_class", "sites", "value", "pred", "residual"])
    worst = 0.0
    for _ in range(4):
        u = float(rng.uniform(0.05, np.pi / 2 - 0.05))
        theta, phi = float(rng.uniform(0, np.pi)), float(rng.uniform(0, 2 * np.pi))
        spec = ProtocolSpec(L=Lc, u=u, n=UnitVector3(theta, phi))
        for mode in ("decoded", "undecoded"):
            rho = assemble(psi, MixedEnsembleSpec(spec, mode))
            for cls in ("n", "n_perp", "n_cross") if mode == "decoded" else ("n", "n_perp"):
                for k in (1, 2, 3):
                    sites = sorted(rng.choice(Lc, size=k, replace=False).tolist())
                    val = mixed_correlator(rho, sites, spec.axes[0], cls)
                    pred = predicted_mixed_correlator(psi, spec, sites, cls, mode)
                    worst = max(worst, abs(val - pred))
                    chk.add(u, theta, phi, mode, cls, " ".join(map(str, sites)), val, pred, val - pred)
    summary["identity_max_residual"] = worst
    return {"negativity": neg, "correlator_identities": chk}, summary


def _fcs(cfg: ExperimentConfig, rngs) -> tuple[dict, dict]:
    from .fitting import fit_power_law
    from .ising import critical_ground_state, fcs_distribution, modified_fcs

    Ls = [int(x) for x in cfg.params["Ls"]]
    alphas = [float(a) for a in cfg.params["alphas"]]
    dist = Table(["axis", "L", "alpha", "m", "f", "P"])
    shifts = Table(["L", "alpha", "mean_f_shift"])
    vz, vx = [], []
    for L in Ls:
        psi = critical_ground_state(L, max_memory_gb=cfg.max_memory_gb).state
        for ax in ("z", "x"):
            base = fcs_distribution(psi, ax)
            for a in [0.0] + alphas:
                d = modified_fcs(base, a) if a else base
                for m, f, p in zip(d.m, d.f, d.P):
                    dist.add(ax, L, a, float(m), float(f), float(p))
            if ax == "z":
                vz.append(base.second_moment())
            else:
                vx.append(base.variance)
                for a in alphas:
                    shifts.add(L, a, (modified_fcs(base, a).mean - base.mean) / L)
    fz, fx = fit_power_law(Ls, vz), fit_power_law(Ls, vx)
    s = np.sqrt(vz)
    summary = {
        "window_L": [min(Ls), max(Ls)],
        "z_second_moment_exponent": fz.slope,
        "z_second_moment_exponent_err": fz.slope_err,
        "x_variance_exponent": fx.slope,
        "x_variance_exponent_err": fx.slope_err,
        "s_prefactor": [float(v) for v in s / np.asarray(Ls, dtype=float) ** (7 / 8)],
    }
    return {"fcs": dist, "x_peak_shift": shifts}, summary


def _single_qubit(cfg: ExperimentConfig, rngs) -> tuple[dict, dict]:
    from .protocol import single_qubit_canonical

    rng = rngs[0]
    t = Table(["u12", "u2B", "z1", "z2", "probability", "fidelity_VP", "V_unitarity_error"])
    worst = 0.0
    for u12 in cfg.params["u_values"]:
        for u2B in cfg.params["u_values"]:
            for _ in range(int(cfg.params["states"])):
                c = rng.normal(size=2) + 1j * rng.normal(size=2)
                c /= np.linalg.norm(c)
                for z1 in (1, -1):
                    for z2 in (1, -1):
                        res = single_qubit_canonical(c, float(u12), float(u2B), z1, z2)
                        target = res["V"] @ res["P"] @ c
                        fid = abs(np.vdot(target / np.linalg.norm(target), res["state"])) ** 2
                        V = res["V"]
                        uerr = float(np.abs(V.conj().T @ V - np.eye(2)).max())
                        worst = max(worst, abs(1 - fid), uerr)
                        t.add(float(u12), float(u2B), z1, z2, res["probability"], float(fid), uerr)
    return {"verification": t}, {"max_error": worst}


RUNNERS = {
    "relevant-z": _relevant_z,
    "marginal-x": _marginal_x,
    "disguised-y": _disguised_y,
    "cancellation-xy": _cancellation_xy,
    "typical": _typical,
    "mixed-state": _mixed_state,
    "fcs": _fcs,
    "single-qubit": _single_qubit,
}


def run_scenario(cfg: ExperimentConfig, write: bool = True) -> ReportBundle:
    """Run one scenario and (optionally) write its CSV tables, summary and manifest."""
    t0 = time.perf_counter()
    ss = np.random.SeedSequence(int(cfg.seed))
    rngs = [np.random.default_rng(s) for s in ss.spawn(4)]
    tables, summary = RUNNERS[cfg.scenario](cfg, rngs)
    elapsed = time.perf_counter() - t0
    for name, tab in tables.items():
        tab.metadata = {"scenario": cfg.scenario, "table": name, "schema_version": SCHEMA_VERSION, "seed": int(cfg.seed), **tab.metadata}
    summary = _jsonable({"scenario": cfg.scenario, **summary})
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "scenario": cfg.scenario,
        "seed": int(cfg.seed),
        "config": cfg.as_dict(),
        "versions": {
            "teleportlab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "tables": {name: list(tab.columns) for name, tab in tables.items()},
        "timing_seconds": elapsed,
    }
    bundle = ReportBundle(tables, summary, manifest)
    if write:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, tab in tables.items():
            p = out / f"{name}.csv"
            write_table(p, tab)
            bundle.paths[name] = str(p)
        for name, obj in (("summary", summary), ("manifest", manifest)):
            p = out / f"{name}.json"
            with open(p, "w", encoding="utf-8") as fh:
                json.dump(obj, fh, indent=2, sort_keys=True)
                fh.write("\n")
            bundle.paths[name] = str(p)
    return bundle


def default_config(scenario: str, **overrides: Any) -> ExperimentConfig:
    common = {k: overrides.pop(k) for k in list(overrides) if k in _COMMON}
    return ExperimentConfig(scenario=scenario, params=overrides, **common)
