"""Riemannian data of the Eguchi-Hanson metric.

Coordinates are ``(r, theta, phi, psi)`` with index order 0..3. The closed-form
tables are typed from the printed formulas; the ``*_from_metric`` functions are
independent oracles built from exact symbolic derivatives of the metric.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from .errors import DegenerateMetric, PoleSingularity
from .symbolic import A, COORDS, DELTA, PHI, PSI, R, THETA, compiled

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ManifoldParams:
    a: float = 1.0
    conifold: bool = False

    def __post_init__(self):
        if self.a < 0 or (self.a == 0 and not self.conifold):
            raise ValueError("instanton scale a must be positive (a = 0 needs conifold=True)")


@dataclass(frozen=True)
class Point:
    """A chart-tagged point; phi and psi are reduced mod 2 pi."""

    r: float
    theta: float
    phi: float = 0.0
    psi: float = 0.0
    chart: str = "N"

    def __post_init__(self):
        if self.chart not in ("N", "S"):
            raise ValueError(f"unknown chart {self.chart!r}")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")
        if self.chart == "N" and self.theta >= math.pi:
            raise PoleSingularity("chart N does not contain theta = pi")
        if self.chart == "S" and self.theta <= 0.0:
            raise PoleSingularity("chart S does not contain theta = 0")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)
        object.__setattr__(self, "psi", float(self.psi) % TWO_PI)

    @property
    def coords(self) -> np.ndarray:
        return np.array([self.r, self.theta, self.phi, self.psi])

    def in_chart(self, chart: str) -> "Point":
        return Point(self.r, self.theta, self.phi, self.psi, chart)


def as_coords(pt) -> np.ndarray:
    """Coordinates of a Point, or an unreduced coordinate 4-vector passed through."""
    if isinstance(pt, Point):
        return pt.coords
    x = np.asarray(pt, dtype=float)
    if x.shape != (4,):
        raise ValueError("expected a Point or a 4-vector (r, theta, phi, psi)")
    return x


@dataclass(frozen=True)
class SamplingBox:
    eps_r: float = 0.05
    eps_theta: float = 0.05
    r_max: float = 10.0

    def bounds(self, params: ManifoldParams):
        a = params.a if params.a > 0 else 1.0
        lo = params.a + self.eps_r * a
        return lo, self.r_max * a, self.eps_theta, math.pi - self.eps_theta


def sample_points(params: ManifoldParams, n: int, rng: np.random.Generator,
                  box: SamplingBox = SamplingBox(), chart: str = "N") -> list[Point]:
    """Uniform interior sample; r is drawn log-uniformly so the core region is exercised."""
    r_lo, r_hi, t_lo, t_hi = box.bounds(params)
    r = np.exp(rng.uniform(np.log(r_lo), np.log(r_hi), n))
    th = rng.uniform(t_lo, t_hi, n)
    ph = rng.uniform(0, TWO_PI, n)
    ps = rng.uniform(0, TWO_PI, n)
    return [Point(*v, chart=chart) for v in zip(r, th, ph, ps)]


# ---------------------------------------------------------------- metric

def metric_expr() -> sp.Matrix:
    """Symbolic metric matrix G in the coordinate basis."""
    c = sp.cos(THETA)
    rho = (R**4 - A**4 * c**2) / R**2
    return sp.Rational(1, 4) * sp.Matrix([
        [4 / DELTA, 0, 0, 0],
        [0, R**2, 0, 0],
        [0, 0, rho, R**2 * DELTA * c],
        [0, 0, R**2 * DELTA * c, R**2 * DELTA],
    ])


@dataclass(frozen=True)
class MetricTensor:
    g: np.ndarray
    delta: float
    delta_plus: float
    delta_prime: float
    rho: float
    rho_plus: float

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.g)


def _check_interior(params: ManifoldParams, x: np.ndarray):
    r = x[0]
    if r < params.a:
        raise DegenerateMetric(f"r = {r} lies inside the bolt r = a = {params.a}")
    if r == params.a:
        raise DegenerateMetric("Delta = 0 at r = a")


def auxiliary(params: ManifoldParams, r: float, theta: float):
    a4 = params.a**4
    q = a4 / r**4
    c2 = math.cos(theta) ** 2
    return dict(delta=1 - q, delta_plus=1 + q, delta_prime=4 * a4 / r**5,
                rho=(r**4 - a4 * c2) / r**2, rho_plus=(r**4 + a4 * c2) / r**2)


def metric(params: ManifoldParams, pt) -> MetricTensor:
    x = as_coords(pt)
    _check_interior(params, x)
    r, th = x[0], x[1]
    aux = auxiliary(params, r, th)
    d, c = aux["delta"], math.cos(th)
    g = 0.25 * np.array([
        [4 / d, 0, 0, 0],
        [0, r**2, 0, 0],
        [0, 0, aux["rho"], r**2 * d * c],
        [0, 0, r**2 * d * c, r**2 * d],
    ])
    return MetricTensor(g=g, **aux)


@lru_cache(maxsize=None)
def _metric_jets():
    G = metric_expr()
    dG = sp.Array([[[sp.diff(G[i, j], x) for j in range(4)] for i in range(4)] for x in COORDS])
    ddG = sp.Array([[[[sp.diff(G[i, j], x, y) for j in range(4)] for i in range(4)]
                     for y in COORDS] for x in COORDS])
    args = (R, THETA, A)
    return compiled(G, args), compiled(dG, args), compiled(ddG, args)


def metric_derivatives(params: ManifoldParams, pt):
    """Exact ``g``, ``dg[k, i, j] = d_k g_ij`` and ``ddg[k, l, i, j] = d_k d_l g_ij``."""
    x = as_coords(pt)
    _check_interior(params, x)
    g, dg, ddg = _metric_jets()
    args = (x[0], x[1], params.a)
    return (np.array(g(*args), dtype=float), np.array(dg(*args), dtype=float),
            np.array(ddg(*args), dtype=float))


def volume_density(params: ManifoldParams, pt) -> float:
    """sqrt(det G) = r^3 |sin theta| / 8, independent of a."""
    x = as_coords(pt)
    _check_interior(params, x)
    return x[0] ** 3 * abs(math.sin(x[1])) / 8.0


def killing_check(params: ManifoldParams, pt, direction: str) -> float:
    """Max-norm of the Lie derivative of g along a coordinate field.

    For a coordinate vector field the Lie derivative reduces to the partial
    derivative of the components. ``direction="r"`` is a negative control.
    """
    index = {"r": 0, "theta": 1, "phi": 2, "psi": 3}[direction]
    _, dg, _ = metric_derivatives(params, pt)
    return float(np.abs(dg[index]).max())


# ------------------------------------------------------------ Christoffels

@dataclass(frozen=True)
class ChristoffelTable:
    """``gamma[k, i, j]`` = Gamma^k_{ij}, zero-based indices."""

    gamma: np.ndarray

    def __getitem__(self, key):
        return self.gamma[key]

    def symbol(self, k: int, i: int, j: int) -> float:
        """One-based accessor matching the printed notation Gamma^k_{ij}."""
        return float(self.gamma[k - 1, i - 1, j - 1])


def _closed_entries(params: ManifoldParams, r: float, theta: float) -> dict:
    aux = auxiliary(params, r, theta)
    d, dp, dprime, rhop = aux["delta"], aux["delta_plus"], aux["delta_prime"], aux["rho_plus"]
    a4 = params.a**4
    s, c = np.float64(math.sin(theta)), np.float64(math.cos(theta))
    with np.errstate(divide="ignore", invalid="ignore"):
        cot, inv_s = c / s, np.float64(1.0) / s
    # entries carrying 1/sin(theta) are infinite on the polar axis
    return {
        # corrected: the printed -Delta'/Delta is off by a factor 2
        (1, 1, 1): -dprime / (2 * d),
        (1, 2, 2): -r * d / 4,
        (1, 3, 3): -d * rhop / (4 * r),
        (1, 3, 4): -r * dp * d * c / 4,
        (1, 4, 4): -r * dp * d / 4,
        (2, 1, 2): 1 / r,
        (2, 3, 3): -a4 * math.sin(2 * theta) / (2 * r**4),
        (2, 3, 4): d * s / 2,
        (3, 1, 3): 1 / r,
        (3, 2, 3): cot * dp / 2,
        (3, 2, 4): -d * inv_s / 2,
        (4, 1, 3): 2 * a4 * c / (r * (r**4 - a4)),
        (4, 1, 4): dp / (r * d),
        (4, 2, 3): -rhop * inv_s / (2 * r**2),
        (4, 2, 4): cot * d / 2,
    }


PRINTED_ERRATA = {
    "Gamma^1_11": {
        "printed": "-Delta'/Delta",
        "verified": "-Delta'/(2 Delta)",
    },
}


def christoffel_closed(params: ManifoldParams, pt) -> ChristoffelTable:
    """Closed-form table; lower indices symmetrized, all other symbols zero."""
    x = as_coords(pt)
    _check_interior(params, x)
    gam = np.zeros((4, 4, 4))
    for (k, i, j), v in _closed_entries(params, x[0], x[1]).items():
        gam[k - 1, i - 1, j - 1] = v
        gam[k - 1, j - 1, i - 1] = v
    return ChristoffelTable(gam)


def _christoffel(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    gi = np.linalg.inv(g)
    # lower[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    lower = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    return 0.5 * np.einsum("kl,lij->kij", gi, lower)


def christoffel_from_metric(params: ManifoldParams, pt) -> ChristoffelTable:
    """Levi-Civita symbols from exact metric derivatives."""
    g, dg, _ = metric_derivatives(params, pt)
    return ChristoffelTable(_christoffel(g, dg))


def christoffel_derivative(params: ManifoldParams, pt) -> np.ndarray:
    """``dgam[m, k, i, j]`` = d_m Gamma^k_{ij} from exact first and second metric derivatives."""
    g, dg, ddg = metric_derivatives(params, pt)
    gi = np.linalg.inv(g)
    dgi = -np.einsum("ka,mab,bl->mkl", gi, dg, gi)
    lower = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    dlower = (np.einsum("mijl->mlij", ddg) + np.einsum("mjil->mlij", ddg)
              - np.einsum("mlij->mlij", ddg))
    return 0.5 * (np.einsum("mkl,lij->mkij", dgi, lower) + np.einsum("kl,mlij->mkij", gi, dlower))


def riemann(params: ManifoldParams, pt) -> np.ndarray:
    """``R[p, s, m, n]`` = R^p_{smn} = d_m G^p_{ns} - d_n G^p_{ms} + G^p_{ml} G^l_{ns} - G^p_{nl} G^l_{ms}."""
    g, dg, _ = metric_derivatives(params, pt)
    gam = _christoffel(g, dg)
    dgam = christoffel_derivative(params, pt)
    term = np.einsum("mpns->psmn", dgam)
    quad = np.einsum("pml,lns->psmn", gam, gam)
    return term - np.einsum("psmn->psnm", term) + quad - np.einsum("psmn->psnm", quad)


def ricci(params: ManifoldParams, pt) -> np.ndarray:
    """R_{sn} = R^p_{spn}."""
    return np.einsum("pspn->sn", riemann(params, pt))


def scalar_curvature(params: ManifoldParams, pt) -> float:
    g, _, _ = metric_derivatives(params, pt)
    return float(np.einsum("ij,ij->", np.linalg.inv(g), ricci(params, pt)))


def metric_compatibility(params: ManifoldParams, pt, table: ChristoffelTable | None = None) -> float:
    """Max |nabla_k g_ij| assembled from a Christoffel table and exact dg."""
    g, dg, _ = metric_derivatives(params, pt)
    gam = (table or christoffel_closed(params, pt)).gamma
    nabla = dg - np.einsum("lki,lj->kij", gam, g) - np.einsum("lkj,il->kij", gam, g)
    return float(np.abs(nabla).max())


def det_metric(params: ManifoldParams, pt) -> float:
    return float(np.linalg.det(metric(params, pt).g))


__all__ = [
    "ManifoldParams", "Point", "SamplingBox", "MetricTensor", "ChristoffelTable",
    "PRINTED_ERRATA", "as_coords", "sample_points", "metric", "metric_expr",
    "metric_derivatives", "volume_density", "killing_check", "christoffel_closed",
    "christoffel_from_metric", "christoffel_derivative", "riemann", "ricci",
    "scalar_curvature", "metric_compatibility", "det_metric",
]
