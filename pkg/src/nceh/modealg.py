"""Torus-equivariant functions: mode expansions, the deformed product, norms and local units.

A mode function is a finite sum  sum_k c_k g_k(r, theta) exp(i (m_k phi + n_k psi))
with (m_k, n_k) in (Z/2)^2. Terms are stored as ``{(mode, profile): coefficient}``
where the profile is a normalized sympy expression, so products and sums merge
exactly and cancellations are visible at coefficient level.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np
import sympy as sp

from . import profiles
from .errors import AliasError, NonIntegrable, QuadratureDivergence
from .geometry import ManifoldParams, SamplingBox, metric_expr
from .symbolic import A, PHI, PSI, R, THETA, compiled

Mode = tuple  # (Fraction, Fraction)
ZERO_MODE = (Fraction(0), Fraction(0))
TWO_PI = 2 * math.pi


def as_mode(m, n=None) -> Mode:
    if n is None:
        m, n = m
    return (Fraction(m).limit_denominator(2), Fraction(n).limit_denominator(2))


def mode_add(r: Mode, s: Mode) -> Mode:
    return (r[0] + s[0], r[1] + s[1])


def mode_neg(r: Mode) -> Mode:
    return (-r[0], -r[1])


def sigma(r, s, theta_def: float) -> complex:
    """sigma(r, s) = e(theta (r_4 s_3 - r_3 s_4)) with e(t) = exp(2 pi i t); modes are (s_3, s_4)."""
    if theta_def == 0:
        return 1 + 0j
    t = float(r[1] * s[0] - r[0] * s[1])
    return cmath.exp(2j * math.pi * theta_def * t)


@dataclass(frozen=True)
class DeformationParams:
    theta: float = 0.0

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[0.0, -self.theta], [self.theta, 0.0]])


class ModeFunction:
    """Finite mode expansion with exact merging of equal (mode, profile) terms."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}

    # ---- construction
    @classmethod
    def from_terms(cls, items: Iterable) -> "ModeFunction":
        """Items are (mode, profile expression, coefficient)."""
        acc: dict = {}
        for mode, expr, coeff in items:
            c0, p = profiles.normalize(sp.sympify(expr))
            key = (as_mode(mode), p)
            acc[key] = acc.get(key, 0) + complex(coeff) * c0
        return cls(acc)

    @classmethod
    def mode(cls, m, n, profile=1, coeff=1) -> "ModeFunction":
        return cls.from_terms([((m, n), profile, coeff)])

    @classmethod
    def constant(cls, c=1) -> "ModeFunction":
        return cls.mode(0, 0, 1, c)

    @classmethod
    def from_expr(cls, expr) -> "ModeFunction":
        """Expand a closed form in (r, theta, phi, psi, a) into modes.

        Trigonometric functions of phi and psi are rewritten as exponentials; every
        summand must be a profile times exp(i (m phi + n psi)).
        """
        expr = sp.sympify(expr)
        angular = lambda e: isinstance(e, (sp.sin, sp.cos, sp.tan)) and bool(e.free_symbols & {PHI, PSI})
        expr = sp.expand(expr.replace(angular, lambda e: e.rewrite(sp.exp)))
        items = []
        for term in sp.Add.make_args(expr):
            if term == 0:
                continue
            radial, ang = term.as_independent(PHI, PSI, as_Add=False)
            if ang == 1:
                items.append((ZERO_MODE, radial, 1))
                continue
            m = sp.simplify(sp.diff(ang, PHI) / (sp.I * ang))
            n = sp.simplify(sp.diff(ang, PSI) / (sp.I * ang))
            if m.free_symbols or n.free_symbols:
                raise ValueError(f"summand {term} is not a single torus mode")
            rest = sp.simplify(ang * sp.exp(-sp.I * (m * PHI + n * PSI)))
            if rest.free_symbols & {PHI, PSI}:
                raise ValueError(f"summand {term} is not a single torus mode")
            items.append(((Fraction(str(m)), Fraction(str(n))), radial * rest, 1))
        return cls.from_terms(items)

    # ---- inspection
    def by_mode(self) -> dict:
        out: dict = {}
        for (mode, p), c in self.terms.items():
            out.setdefault(mode, {})[p] = c
        return out

    @property
    def modes(self) -> list:
        return sorted({mode for mode, _ in self.terms})

    def part(self, mode) -> "ModeFunction":
        mode = as_mode(mode)
        return ModeFunction({k: v for k, v in self.terms.items() if k[0] == mode})

    @property
    def is_algebra_valued(self) -> bool:
        return all(m.denominator == 1 and n.denominator == 1 for (m, n), _ in self.terms)

    @property
    def is_cover_valued(self) -> bool:
        return not self.is_algebra_valued

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs_coeff() <= tol

    # ---- linear structure
    def __add__(self, other: "ModeFunction") -> "ModeFunction":
        acc = dict(self.terms)
        for k, v in other.terms.items():
            acc[k] = acc.get(k, 0) + v
        return ModeFunction(acc)

    def __neg__(self) -> "ModeFunction":
        return ModeFunction({k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "ModeFunction") -> "ModeFunction":
        return self + (-other)

    def scale(self, c: complex) -> "ModeFunction":
        return ModeFunction({k: c * v for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, ModeFunction):
            return star_product(self, other, 0.0)
        return self.scale(other)

    __rmul__ = scale

    def __repr__(self) -> str:
        body = " + ".join(f"({complex(c):.4g})*[{p}]*e({m},{n})" for ((m, n), p), c in self.terms.items())
        return f"ModeFunction({body or '0'})"

    # ---- calculus
    def diff(self, k: int) -> "ModeFunction":
        """Exact partial derivative in coordinate k of (r, theta, phi, psi)."""
        acc: dict = {}
        for (mode, p), c in self.terms.items():
            if k in (0, 1):
                c0, q = profiles.normalize(profiles.derivative(p, R if k == 0 else THETA))
                c = c * c0
            else:
                q, c = p, c * 1j * float(mode[k - 2])
            if c != 0:
                key = (mode, q)
                acc[key] = acc.get(key, 0) + c
        return ModeFunction(acc)

    def __call__(self, r, theta, phi, psi, a):
        """Vectorized evaluation; phi and psi are used unreduced (half modes live on the cover)."""
        r, theta, phi, psi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r, theta, phi, psi)))
        out = np.zeros(r.shape, dtype=complex)
        with np.errstate(all="ignore"):
            for (mode, p), c in self.terms.items():
                g = compiled(p)(r, theta, a)
                out = out + c * g * np.exp(1j * (float(mode[0]) * phi + float(mode[1]) * psi))
        return out

    def at(self, params: ManifoldParams, x) -> complex:
        x = np.asarray(x, dtype=float)
        return complex(self(x[0], x[1], x[2], x[3], params.a))

    # ---- serialization
    def to_json(self) -> list:
        rows = []
        for ((m, n), p), c in sorted(self.terms.items(), key=lambda kv: (kv[0][0], sp.srepr(kv[0][1]))):
            pid, pparams = profiles.to_id(p)
            rows.append({"m": float(m), "n": float(n), "coeff_re": complex(c).real,
                         "coeff_im": complex(c).imag, "profile_id": pid, "profile_params": pparams})
        return rows

    @classmethod
    def from_json(cls, rows: list) -> "ModeFunction":
        return cls.from_terms(((row["m"], row["n"]), profiles.from_id(row["profile_id"], row["profile_params"]),
                               complex(row["coeff_re"], row["coeff_im"])) for row in rows)


# ------------------------------------------------------------------ products

def star_product(f: ModeFunction, g: ModeFunction, theta_def: float) -> ModeFunction:
    """(f x g)_t = sum_{r + s = t} sigma(r, s) f_r g_s, profiles multiplied pointwise."""
    acc: dict = {}
    for (r, p), c in f.terms.items():
        for (s, q), d in g.terms.items():
            c0, pq = profiles.product(p, q)
            key = (mode_add(r, s), pq)
            acc[key] = acc.get(key, 0) + sigma(r, s, theta_def) * c * d * c0
    return ModeFunction(acc)


def involution(f: ModeFunction) -> ModeFunction:
    """(f*)_r = conj(f_{-r}); dictionary profiles are real-valued."""
    return ModeFunction({(mode_neg(mode), p): complex(c).conjugate() for (mode, p), c in f.terms.items()})


# --------------------------------------------------- oscillatory integral

_EPS_SCHEDULE = (0.04, 0.02, 0.01)


def _chirp_integral(c: complex, k: float, half_width: float, nodes: int) -> complex:
    """int_{-L}^{L} exp(-c x^2 + 2 pi i k x) dx with panels sized to the local frequency."""
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    edges = [-half_width]
    while edges[-1] < half_width:
        x = edges[-1]
        # local frequency |d/dx phase|/(2 pi) ~ |Im c| |x| / pi + |k|
        width = min(1.0, 8.0 / (abs(c.imag) * abs(x) / math.pi + abs(k) + 1.0))
        edges.append(min(half_width, x + width))
    e = np.array(edges)
    mid, half = (e[1:] + e[:-1]) / 2, (e[1:] - e[:-1]) / 2
    x = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return complex(np.sum(w * np.exp(-c * x**2 + 2j * math.pi * k * x)))


def _plane_integral(alpha: float, beta: float, eps: float, nodes: int) -> complex:
    """int int e(alpha u + beta v - u v) exp(-eps (u^2 + v^2)) du dv over the box |u|,|v| <= 6/sqrt(eps).

    Rotating by 45 degrees (x = (u + v)/sqrt2, y = (u - v)/sqrt2) separates it into two chirps.
    """
    L = 6.0 / math.sqrt(eps)
    k1, k2 = (alpha + beta) / math.sqrt(2), (alpha - beta) / math.sqrt(2)
    # the rotated square is contained in the disc of radius sqrt2 L; the Gaussian has died there
    return (_chirp_integral(eps + 1j * math.pi, k1, math.sqrt(2) * L, nodes)
            * _chirp_integral(eps - 1j * math.pi, k2, math.sqrt(2) * L, nodes))


def oscillatory_phase(r, s, theta_def: float, eps_schedule=_EPS_SCHEDULE, nodes: int = 64,
                      stability: float = 1e-2) -> complex:
    """Richardson-extrapolated quadrature of int int e(r.Ju) e(s.v) e(-u.v) du dv.

    With J u = (-theta u_2, theta u_1) this separates into planes with
    (alpha, beta) = (theta r_4, s_3) and (-theta r_3, s_4); the exact value is sigma(r, s).
    """
    r3, r4 = float(r[0]), float(r[1])
    s3, s4 = float(s[0]), float(s[1])
    vals = [_plane_integral(theta_def * r4, s3, e, nodes) * _plane_integral(-theta_def * r3, s4, e, nodes)
            for e in eps_schedule]
    eps = np.array(eps_schedule)
    # the damping enters as exp(-pi^2 k^2/(eps +- pi i)): log F_eps is analytic in eps with
    # radius ~ pi, so extrapolate the logarithm (phase unwrapped) rather than the value
    logs = np.log(np.array(vals))
    logs = logs.real + 1j * np.unwrap(logs.imag)
    full = complex(np.exp(np.polyval(np.polyfit(eps, logs, len(eps) - 1), 0.0)))
    pair = complex(np.exp(np.polyval(np.polyfit(eps[-2:], logs[-2:], 1), 0.0)))
    if not np.isfinite(full) or abs(full - pair) > stability:
        raise QuadratureDivergence(f"extrapolation unstable: {full} vs {pair}")
    return full


def oscillatory_product(f: ModeFunction, g: ModeFunction, theta_def: float,
                        eps_schedule=_EPS_SCHEDULE, nodes: int = 64) -> ModeFunction:
    """Regularized oscillatory-integral product; coefficients are quadrature approximations."""
    phases: dict = {}
    acc: dict = {}
    for (r, p), c in f.terms.items():
        for (s, q), d in g.terms.items():
            if (r, s) not in phases:
                phases[(r, s)] = oscillatory_phase(r, s, theta_def, eps_schedule, nodes)
            c0, pq = profiles.product(p, q)
            key = (mode_add(r, s), pq)
            acc[key] = acc.get(key, 0) + phases[(r, s)] * c * d * c0
    return ModeFunction(acc)


# ---------------------------------------------------- spectral decomposition

@dataclass(frozen=True)
class SampledModes:
    """Fourier coefficients per (r, theta) node: ``coeffs[(m, n)]`` has one entry per node."""

    nodes: np.ndarray
    coeffs: dict

    def reconstruct(self, phi, psi) -> np.ndarray:
        phi, psi = np.asarray(phi, dtype=float), np.asarray(psi, dtype=float)
        out = np.zeros((len(self.nodes),) + np.broadcast(phi, psi).shape, dtype=complex)
        for (m, n), c in self.coeffs.items():
            wave = np.exp(1j * (float(m) * phi + float(n) * psi))
            out = out + c.reshape((-1,) + (1,) * wave.ndim) * wave
        return out

    def at_node(self, k: int) -> ModeFunction:
        return ModeFunction.from_terms((mode, 1, c[k]) for mode, c in self.coeffs.items())


def torus_grid(size: int) -> np.ndarray:
    return TWO_PI * np.arange(size) / size


def spectral_decompose(samples: np.ndarray, cutoff: int, nodes=None, drop: float = 1e-13) -> SampledModes:
    """Discrete Fourier analysis of ``samples[node, j, k]`` = f(node, phi_j, psi_k) on the uniform grid."""
    samples = np.asarray(samples, dtype=complex)
    if samples.ndim == 2:
        samples = samples[None]
    _, M1, M2 = samples.shape
    if 2 * cutoff + 1 > min(M1, M2):
        raise AliasError(f"cutoff {cutoff} needs at least {2 * cutoff + 1} grid points per angle")
    fourier = np.fft.fft2(samples, axes=(1, 2)) / (M1 * M2)
    scale = max(float(np.abs(samples).max()), 1.0)
    coeffs = {}
    for m in range(-cutoff, cutoff + 1):
        for n in range(-cutoff, cutoff + 1):
            c = fourier[:, m % M1, n % M2]
            if np.abs(c).max() > drop * scale:
                coeffs[as_mode(m, n)] = c
    nodes = np.zeros((samples.shape[0], 2)) if nodes is None else np.asarray(nodes, dtype=float)
    return SampledModes(nodes, coeffs)


def sample_on_torus(f: ModeFunction, params: ManifoldParams, nodes, size) -> np.ndarray:
    """Values of ``f`` at each (r, theta) node on a uniform (phi, psi) grid; ``size`` is an int or a pair."""
    n_phi, n_psi = (size, size) if np.ndim(size) == 0 else size
    ph, ps = np.meshgrid(torus_grid(n_phi), torus_grid(n_psi), indexing="ij")
    return np.array([f(r, t, ph, ps, params.a) for r, t in np.asarray(nodes, dtype=float)])


# ------------------------------------------------------------------- norms

@lru_cache(maxsize=None)
def _geometry_exprs():
    G = metric_expr()
    Ginv = sp.simplify(G.inv())
    X = (R, THETA, PHI, PSI)
    gam = [[[sp.simplify(sum(Ginv[k, l] * (sp.diff(G[l, j], X[i]) + sp.diff(G[l, i], X[j])
                                           - sp.diff(G[i, j], X[l])) for l in range(4)) / 2)
             for j in range(4)] for i in range(4)] for k in range(4)]
    return Ginv, gam


def _array_eval(exprs, shape, r, theta, a) -> np.ndarray:
    """Entrywise vectorized evaluation of a nested list of sympy expressions."""
    out = np.zeros(shape + r.shape)
    with np.errstate(all="ignore"):
        for idx in np.ndindex(*shape):
            e = exprs
            for i in idx:
                e = e[i]
            if e != 0:
                out[idx] = compiled(e)(r, theta, a)
    return out


def _composite_gl(lo: float, hi: float, panels: int, order: int):
    xg, wg = np.polynomial.legendre.leggauss(order)
    e = np.linspace(lo, hi, panels + 1)
    mid, half = (e[1:] + e[:-1]) / 2, (e[1:] - e[:-1]) / 2
    return (mid[:, None] + half[:, None] * xg).ravel(), (half[:, None] * wg).ravel()


def sobolev_norm(params: ManifoldParams, f: ModeFunction, k: int, p: int = 2, r_max: float = 12.0,
                 panels: int = 24, order: int = 16, tail_tol: float = 1e-8) -> float:
    """sum_{m <= k} (int |nabla^m f|^2 dVol)^{1/2}, by Parseval over the torus modes.

    ``r_max`` is in units of a. Raises NonIntegrable when the radial integrand at
    ``r_max`` is not negligible against the total.
    """
    if p != 2:
        raise NotImplementedError("only p = 2 is supported")
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    if not f.is_algebra_valued:
        raise ValueError("Sobolev norms are defined for algebra-valued (integer mode) functions")
    if f.is_zero():
        return 0.0
    a = params.a
    rr, wr = _composite_gl(a, r_max * a, panels, order)
    tt, wt = _composite_gl(0.0, math.pi, 8, order)
    Rg, Tg = np.meshgrid(rr, tt, indexing="ij")
    W = np.outer(wr, wt) * Rg**3 * np.abs(np.sin(Tg)) / 8 * TWO_PI**2
    ginv_e, gam_e = _geometry_exprs()
    ginv = _array_eval(ginv_e.tolist(), (4, 4), Rg, Tg, a)
    gam = _array_eval(gam_e, (4, 4, 4), Rg, Tg, a) if k == 2 else None
    levels = np.zeros((3,) + Rg.shape)
    for mode, prof in f.by_mode().items():
        part = ModeFunction({(ZERO_MODE, q): c for q, c in prof.items()})
        ik = [0, 0, 1j * float(mode[0]), 1j * float(mode[1])]
        val = part(Rg, Tg, 0.0, 0.0, a)
        d = [part.diff(0), part.diff(1)]
        grad = np.array([d[0](Rg, Tg, 0, 0, a), d[1](Rg, Tg, 0, 0, a), ik[2] * val, ik[3] * val])
        levels[0] += np.abs(val) ** 2
        if k >= 1:
            levels[1] += np.real(np.einsum("ij...,i...,j...->...", ginv, grad, np.conj(grad)))
        if k == 2:
            dd = [[d[i].diff(j) if j < 2 else d[i] for j in range(4)] for i in range(2)]
            hess = np.zeros((4, 4) + Rg.shape, dtype=complex)
            for i in range(4):
                for j in range(4):
                    if i < 2 and j < 2:
                        hess[i, j] = dd[i][j](Rg, Tg, 0, 0, a)
                    elif i < 2:
                        hess[i, j] = ik[j] * grad[i]
                    elif j < 2:
                        hess[i, j] = ik[i] * grad[j]
                    else:
                        hess[i, j] = ik[i] * ik[j] * val
            cov = hess - np.einsum("kij...,k...->ij...", gam, grad)
            levels[2] += np.real(np.einsum("ik...,jl...,ij...,kl...->...", ginv, ginv, cov, np.conj(cov)))
    total = 0.0
    for m in range(k + 1):
        dens = np.where(np.isfinite(levels[m]), levels[m], 0.0) * W
        mass = float(dens.sum())
        radial = np.abs(levels[m][-1] * Rg[-1] ** 3).max() * r_max * a
        if mass > 0 and radial > tail_tol * max(mass, 1.0) and radial > tail_tol:
            raise NonIntegrable(f"|nabla^{m} f|^2 does not decay by r = {r_max} a")
        total += math.sqrt(max(mass, 0.0))
    return total


def multi_indices(order: int) -> list:
    """All coordinate multi-indices (as sorted tuples of axes) with length <= order."""
    out = [()]
    frontier = [()]
    for _ in range(order):
        frontier = [idx + (k,) for idx in frontier for k in range(4) if not idx or k >= idx[-1]]
        out += frontier
    return out


def seminorm_q(params: ManifoldParams, f: ModeFunction, m: int, grid: int = 9,
               box: SamplingBox = SamplingBox()) -> float:
    """q_m(f) = max_{|alpha| <= m} sup_x sum_chart h_chart(x) |d^alpha f(x)| over a box grid.

    h_N = cos^2(theta/2) and h_S = sin^2(theta/2); both charts share the angular coordinates.
    The theta grid includes both poles so that each partition function attains 1.
    """
    r_lo, r_hi, _, _ = box.bounds(params)
    r = np.geomspace(r_lo, r_hi, grid)
    th = np.linspace(0.0, math.pi, grid)
    ang = torus_grid(grid)
    Rg, Tg, Pg, Sg = np.meshgrid(r, th, ang, ang, indexing="ij")
    hN, hS = np.cos(Tg / 2) ** 2, np.sin(Tg / 2) ** 2
    best = 0.0
    for alpha in multi_indices(m):
        g = f
        for k in alpha:
            g = g.diff(k)
        v = np.abs(g(Rg, Tg, Pg, Sg, params.a))
        best = max(best, float(np.max(hN * v + hS * v)))
    return best


def local_unit(n) -> ModeFunction:
    """Torus-invariant profile equal to 1 on r <= n a and supported in r < (n + 1) a."""
    if n < 1:
        raise ValueError("local units are indexed by n >= 1")
    return ModeFunction.mode(0, 0, profiles.local_unit(n))
