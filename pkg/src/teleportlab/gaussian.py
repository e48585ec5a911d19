"""Free-fermion description of the x-deformed critical chain ``exp(alpha M_X) |psi_c>``.

``M_X = (1/2) sum_j X_j``.  The deformation is quadratic in Majoranas, so the
state stays Gaussian and is fixed by one mode pair ``(u_k, v_k)`` per
half-integer momentum ``k``.  Correlation matrices follow from the mode
symbol summed over momenta (finite ring) or integrated (infinite chain).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import spence

from .fermions import entropy_from_covariance, pauli_expectation


def quench_modes(L: int, alpha: float) -> dict:
    """Closed-form Bogoliubov amplitudes ``u_k, v_k`` for half-integer ``k`` in ``(0, L)``."""
    k = np.arange(L) + 0.5
    theta = 2 * np.pi * k / L
    u, v = _uv(theta, alpha)
    return {"k": k, "theta": theta, "u": u, "v": v}


def _uv(theta, alpha):
    # half-angle form of sin(theta) / (2 sqrt((1 - cos theta)(1 - s))), finite at theta = 0 and pi
    theta = np.asarray(theta, dtype=float)
    s = np.abs(np.sin(theta / 2))
    u = -np.exp(-alpha) * np.sqrt((1 - s) / 2)
    v = np.exp(alpha) * np.where(np.sin(theta) < 0, -1.0, 1.0) * np.sqrt((1 + s) / 2)
    return u, v


def mode_symbol(theta, alpha: float) -> np.ndarray:
    """Unit-modulus symbol ``(u^2 - v^2 - 2iuv) / (u^2 + v^2)``.

    In the Majorana convention of :mod:`teleportlab.fermions`,
    ``Gamma[A_j, B_l] = -int dtheta/2pi exp(i theta (l - j)) * symbol(theta)``.
    """
    u, v = _uv(theta, alpha)
    return (u**2 - v**2 - 2j * u * v) / (u**2 + v**2)


def lateral_limits(alpha: float) -> dict:
    """One-sided limits of the symbol at ``theta = 0`` as ``lambda I + tanh X +- sech Y`` data."""
    t, sech = np.tanh(2 * alpha), 1 / np.cosh(2 * alpha)
    return {"tanh": t, "sech": sech, "plus": mode_symbol(1e-9, alpha), "minus": mode_symbol(-1e-9, alpha)}


@lru_cache(maxsize=8)
def _brillouin_nodes(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on each side of ``theta = 0``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    th = np.concatenate([(x - 1) * np.pi / 2, (x + 1) * np.pi / 2])
    ww = np.concatenate([w, w]) * np.pi / 2
    th.setflags(write=False)
    ww.setflags(write=False)
    return th, ww


def _ab_correlation(r: np.ndarray, alpha: float, L: int | None, nodes: int) -> np.ndarray:
    """``G(r) = Gamma[A_j, B_{j+r}]`` for integer offsets ``r``."""
    r = np.asarray(r)
    if L is not None:
        th = 2 * np.pi * (np.arange(L) + 0.5) / L
        s = mode_symbol(th, alpha)
        vals = -(np.exp(1j * np.outer(r, th)) @ s) / L
    else:
        th, ww = _brillouin_nodes(nodes)
        s = mode_symbol(th, alpha)
        vals = -(np.exp(1j * np.outer(r, th)) @ (s * ww)) / (2 * np.pi)
    return vals.real


def correlation_matrix(
    alpha: float, n_sites: int | None = None, L: int | None = None, nodes: int = 4096
) -> np.ndarray:
    """Majorana covariance ``Gamma`` on ``n_sites`` consecutive sites.

    ``L=None`` is the infinite chain (Gauss-Legendre quadrature on each side of
    the jump at ``theta = 0``); an integer ``L`` sums the half-integer momenta
    of the periodic ring.
    """
    if n_sites is None:
        if L is None:
            raise ValueError("n_sites is required for the infinite chain")
        n_sites = L
    offsets = np.arange(-(n_sites - 1), n_sites)
    G = _ab_correlation(offsets, alpha, L, nodes)
    Gamma = np.zeros((2 * n_sites, 2 * n_sites))
    j, l = np.meshgrid(np.arange(n_sites), np.arange(n_sites), indexing="ij")
    block = G[l - j + n_sites - 1]
    Gamma[0::2, 1::2] = block
    Gamma[1::2, 0::2] = -block.T
    return Gamma


def entropies_from_correlation(Gamma: np.ndarray, ell: int, n: float | Iterable[float] = 1.0):
    """Renyi entropies of the first ``ell`` sites.

    ``Tr rho^n = prod_nu [((1+nu)/2)^n + ((1-nu)/2)^n]`` over the ``ell``
    positive eigenvalues ``nu`` of ``i Gamma_A``.
    """
    sub = Gamma[: 2 * ell, : 2 * ell]
    if np.isscalar(n):
        return entropy_from_covariance(sub, n)
    return {float(k): entropy_from_covariance(sub, k) for k in n}


def entropy_curve(alpha: float, ells: Sequence[int], n: float = 1.0, L: int | None = None, nodes: int = 4096):
    ells = np.asarray(ells, dtype=int)
    Gamma = correlation_matrix(alpha, int(ells.max()), L=L, nodes=nodes)
    return np.array([entropies_from_correlation(Gamma, int(l), n) for l in ells])


def _g_n(d, n):
    """Renyi kernel at ``lambda = 1 - d``, written in ``d`` to stay finite near ``lambda = 1``."""
    if n == 1:
        return 0.25 * np.log(d / (2 - d))
    return n**2 / (1 - n**2) * ((2 - d) ** (n - 1) - d ** (n - 1)) / (d**n + (2 - d) ** n)


def c_eff(alpha: float, n: float = 1.0, method: str = "integral") -> float:
    """Effective central charge of the Renyi-``n`` entanglement of the x-deformed state.

    ``method="integral"`` evaluates the Fisher-Hartwig integral (for ``n=1``
    the ``n -> 1`` limit of its kernel); ``method="closed"`` uses the
    dilogarithm form valid for ``n=1``.
    """
    if method == "closed":
        if n != 1:
            raise ValueError("the closed form exists only for n = 1")
        x = 1 / np.cosh(2 * alpha)
        if abs(1 - x) < 1e-15:
            return 0.5
        li = lambda z: spence(1 - z)
        val = (x + 1) * li(-x) + (1 - x) * li(x) + np.log(x) * ((1 - x) * np.log(1 - x) + (x + 1) * np.log(1 + x))
        return float(-3 / np.pi**2 * val)
    if method != "integral":
        raise ValueError(f"unknown method {method!r}")
    t = np.tanh(2 * abs(alpha))
    sech = 1 / np.cosh(2 * alpha)

    # lambda = 1 - (1 - t) x^2 absorbs the endpoint singularity at lambda = 1
    def integrand(x):
        d = (1 - t) * x * x
        if d <= 0.0:
            return 0.0
        lam = 1 - d
        root = np.sqrt(max(lam**2 - t**2, 0.0))
        return _g_n(d, n) * np.log(np.sqrt(d * (2 - d)) / (root + sech)) * 2 * (1 - t) * x

    val, _ = integrate.quad(integrand, 0.0, 1.0, limit=400, epsabs=1e-13, epsrel=1e-12)
    return float(12 / np.pi**2 * val)


@dataclass
class FisherHartwig:
    delta_z: float
    delta_y: float
    xx_amplitude: float


def fisher_hartwig_exponents(alpha: float) -> FisherHartwig:
    """Scaling dimensions of ``Z`` and ``Y`` and the ``<XX>_c`` amplitude at the marginal line."""
    a = np.arctan(np.exp(2 * alpha))
    return FisherHartwig(
        delta_z=float(2 * a**2 / np.pi**2),
        delta_y=float(2 * (a - np.pi) ** 2 / np.pi**2),
        xx_amplitude=float(1 / np.cosh(2 * alpha) ** 2 / np.pi**2),
    )


def marginal_correlators(
    alpha: float, separations: Sequence[int], L: int | None = None, nodes: int = 4096, origin: int = 0
) -> dict:
    """``<X>``, and connected ``XX``, ``YY``, ``ZZ`` correlators at the given separations.

    Strings are evaluated as Pfaffians of covariance sub-blocks, equivalent to
    the Toeplitz determinants of the symbol because ``AA`` and ``BB``
    contractions vanish.
    """
    seps = np.asarray(separations, dtype=int)
    if seps.size and seps.min() < 1:
        raise ValueError("separations must be positive")
    n_sites = origin + int(seps.max()) + 1
    if L is not None and n_sites > L:
        raise ValueError("separation exceeds the ring size")
    Gamma = correlation_matrix(alpha, n_sites, L=L, nodes=nodes)
    x0 = float(Gamma[2 * origin, 2 * origin + 1])
    out = {"separation": seps, "X": x0, "XX": [], "YY": [], "ZZ": []}
    for r in seps:
        j, k = origin, origin + int(r)
        xx = pauli_expectation(Gamma, {j: "X", k: "X"}).real
        out["XX"].append(xx - x0 * Gamma[2 * k, 2 * k + 1])
        out["YY"].append(pauli_expectation(Gamma, {j: "Y", k: "Y"}).real)
        out["ZZ"].append(pauli_expectation(Gamma, {j: "Z", k: "Z"}).real)
    for key in ("XX", "YY", "ZZ"):
        out[key] = np.array(out[key])
    return out
