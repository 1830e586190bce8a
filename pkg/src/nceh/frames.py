"""Stereographic charts, orthonormal coframes and the cotangent transition functions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from .errors import DegenerateMetric, PoleSingularity
from .geometry import ManifoldParams, Point, as_coords
from .symbolic import A, COORDS, DELTA, PHI, R, THETA, compiled


@dataclass(frozen=True)
class CoframeMatrix:
    """Rows are frame labels alpha, columns coordinate indices i: theta^alpha = H[alpha, i] dx^i."""

    H: np.ndarray
    Hinv: np.ndarray
    chart: str = "N"


@dataclass(frozen=True)
class TransitionSO4:
    F_SN: np.ndarray
    F_NS: np.ndarray


def stereo(pt: Point) -> complex:
    """z = cot(theta/2) e^{-i phi} on chart N, w = tan(theta/2) e^{i phi} on chart S."""
    half = pt.theta / 2
    if pt.chart == "N":
        if pt.theta == 0.0:
            raise PoleSingularity("z is infinite at the north pole theta = 0")
        return complex(math.cos(half) / math.sin(half) * np.exp(-1j * pt.phi))
    if pt.theta <= 0.0 or pt.theta >= math.pi:
        raise PoleSingularity("w is undefined at the poles")
    return complex(math.tan(half) * np.exp(1j * pt.phi))


# --------------------------------------------------------------- coframes

def coframe_printed_expr() -> sp.Matrix:
    """The chart-N coframe matrix as a symbolic expression."""
    s, c = sp.sin(THETA), sp.cos(THETA)
    sd = sp.sqrt(DELTA)
    return sp.Rational(1, 2) * sp.Matrix([
        [0, -R * sp.cos(PHI), -R * s * sp.sin(PHI), 0],
        [0, R * sp.sin(PHI), -R * s * sp.cos(PHI), 0],
        [0, 0, R * sd * c, R * sd],
        [2 / sd, 0, 0, 0],
    ])


@lru_cache(maxsize=None)
def coframe_construction_expr(chart: str) -> sp.Matrix:
    """Coframe from the stereographic complex frame (l, m) of the given chart.

    With zeta the stereographic coordinate,
    l = r dzeta / (sqrt2 (1 + |zeta|^2)),
    m = Delta^{-1/2} dr / sqrt2 + r Delta^{1/2} / (4 sqrt2) [(dzeta/zeta - c.c.)(1 - |zeta|^2)/(1 + |zeta|^2) + 2i dpsi],
    and theta^1 = sqrt2 Re l, theta^2 = sqrt2 Im l, theta^3 = sqrt2 Im m, theta^4 = sqrt2 Re m.
    """
    if chart == "N":
        mod = sp.cot(THETA / 2)
        zeta = mod * sp.exp(-sp.I * PHI)
    elif chart == "S":
        mod = sp.tan(THETA / 2)
        zeta = mod * sp.exp(sp.I * PHI)
    else:
        raise ValueError(chart)
    dzeta = [sp.diff(zeta, x) for x in COORDS]
    ratio = (1 - mod**2) / (1 + mod**2)
    sq2 = sp.sqrt(2)
    # a positive stand-in keeps re/im free of branch bookkeeping for Delta^{1/2}
    dpos = sp.Symbol("Delta", positive=True)
    l = [R * dz / (sq2 * (1 + mod**2)) for dz in dzeta]
    m = []
    for k, dz in enumerate(dzeta):
        q = sp.expand_complex(dz / zeta)
        bracket = (q - sp.conjugate(q)) * ratio + (2 * sp.I if k == 3 else 0)
        term = dpos ** sp.Rational(-1, 2) / sq2 if k == 0 else sp.Integer(0)
        m.append(term + R * sp.sqrt(dpos) / (4 * sq2) * bracket)

    def re(e):
        return sp.simplify(sp.re(sp.expand_complex(e)))

    def im(e):
        return sp.simplify(sp.im(sp.expand_complex(e)))

    rows = [[sq2 * re(e) for e in l], [sq2 * im(e) for e in l],
            [sq2 * im(e) for e in m], [sq2 * re(e) for e in m]]
    return sp.Matrix(rows).subs(dpos, DELTA)


def coframe_printed_inverse(params: ManifoldParams, pt) -> np.ndarray:
    x = as_coords(pt)
    r, th, ph = x[0], x[1], x[2]
    d = 1 - params.a**4 / r**4
    sd = math.sqrt(d)
    s, c = math.sin(th), math.cos(th)
    sp_, cp = math.sin(ph), math.cos(ph)
    return 2 * np.array([
        [0, 0, 0, sd / 2],
        [-cp / r, sp_ / r, 0, 0],
        [-sp_ / (r * s), -cp / (r * s), 0, 0],
        [c * sp_ / (r * s), c * cp / (r * s), 1 / (r * sd), 0],
    ])


def _check(params: ManifoldParams, x: np.ndarray):
    if x[0] <= params.a:
        raise DegenerateMetric("coframe is singular at Delta = 0")


def coframe(params: ManifoldParams, pt, chart: str | None = None) -> CoframeMatrix:
    """Orthonormal coframe; chart N uses the closed form, chart S the construction."""
    x = as_coords(pt)
    _check(params, x)
    chart = chart or (pt.chart if isinstance(pt, Point) else "N")
    if chart == "N":
        H = np.array(compiled(coframe_printed_expr(), (R, THETA, PHI, A))(x[0], x[1], x[2], params.a),
                     dtype=float)
        return CoframeMatrix(H, coframe_printed_inverse(params, x), "N")
    H = coframe_constructed(params, x, chart)
    return CoframeMatrix(H, np.linalg.inv(H), chart)


def coframe_constructed(params: ManifoldParams, pt, chart: str = "N") -> np.ndarray:
    x = as_coords(pt)
    _check(params, x)
    fn = compiled(coframe_construction_expr(chart), (R, THETA, PHI, A))
    return np.array(fn(x[0], x[1], x[2], params.a), dtype=float)


def cotangent_transition(pt) -> TransitionSO4:
    """F_SN: rotation by 2 phi + pi in the (theta^1, theta^2) plane, identity on the rest."""
    x = as_coords(pt)
    if isinstance(pt, Point) and pt.theta in (0.0, math.pi):
        raise PoleSingularity("transition functions live on the overlap 0 < theta < pi")
    if not 0.0 < x[1] < math.pi:
        raise PoleSingularity("transition functions live on the overlap 0 < theta < pi")
    c2, s2 = math.cos(2 * x[2]), math.sin(2 * x[2])
    F = np.eye(4)
    F[:2, :2] = [[-c2, s2], [-s2, -c2]]
    return TransitionSO4(F_SN=F, F_NS=F.T.copy())


def cotangent_transition_from_z(z: complex) -> np.ndarray:
    """The same matrix written through the stereographic coordinate z."""
    zb = z.conjugate()
    zz = (z * zb).real
    a = -(zb**2 + z**2) / (2 * zz)
    b = -1j * (zb**2 - z**2) / (2 * zz)
    F = np.eye(4)
    F[:2, :2] = np.real_if_close(np.array([[a, b], [-b, a]]))
    return F
