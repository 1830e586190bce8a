"""Cosphere densities of the -4-homogeneous symbol of D^-4, the Wodzicki residue of M_f |D|^-4
and the trace-theorem consistency check against the Dixmier coefficient."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .errors import NonIntegrable, QuadratureDivergence
from .geometry import ManifoldParams, as_coords, metric, volume_density
from .modealg import ZERO_MODE, ModeFunction, _array_eval, _composite_gl, _geometry_exprs
from .symbolic import PHI, compiled

TWO_PI = 2 * math.pi
KAPPA = 4.0
SPINOR_RANK = 4
SPHERE_AREA = 2 * math.pi**2  # |S^3|
DIXMIER_COEFFICIENT = 2 / TWO_PI**2


def sphere_rule(order: int = 24):
    """Product rule on the unit 3-sphere in hyperspherical angles (chi, vartheta, varphi).

    Gauss-Legendre in cos(vartheta), Gauss-Legendre in chi with the sin^2 chi weight in the
    integrand, trapezoid in the periodic varphi. Returns (nodes (M, 4), weights (M,)).
    """
    if order < 24:
        raise ValueError("sphere quadrature order must be at least 24")
    xg, wg = np.polynomial.legendre.leggauss(order)
    chi, wchi = math.pi / 2 * (xg + 1), math.pi / 2 * wg
    ct, wct = xg, wg
    ph = TWO_PI * np.arange(2 * order) / (2 * order)
    wph = np.full(2 * order, TWO_PI / (2 * order))
    C, T, P = np.meshgrid(chi, ct, ph, indexing="ij")
    st = np.sqrt(1 - T**2)
    nodes = np.stack([np.cos(C), np.sin(C) * T, np.sin(C) * st * np.cos(P), np.sin(C) * st * np.sin(P)], -1)
    w = (wchi[:, None, None] * np.sin(C) ** 2 * wct[None, :, None] * wph[None, None, :])
    return nodes.reshape(-1, 4), w.ravel()


def _sphere_integral(ginv: np.ndarray, order: int) -> np.ndarray:
    """int_{S^3} tr[(g^{ij} xi_i xi_j)^-2 I_4] dS for a batch of inverse metrics (N, 4, 4)."""
    xi, w = sphere_rule(order)
    outer = (xi[:, :, None] * xi[:, None, :]).reshape(len(w), 16).T
    flat = ginv.reshape(len(ginv), 16)
    out = np.empty(len(ginv))
    chunk = max(1, 4_000_000 // len(w))
    for s in range(0, len(ginv), chunk):
        q = flat[s:s + chunk] @ outer
        out[s:s + chunk] = SPINOR_RANK * (1.0 / (q * q)) @ w
    return out


def _frame_transpose(params: ManifoldParams, R: np.ndarray, T: np.ndarray) -> np.ndarray:
    """H^T at phi = 0 for arrays of (r, theta); shape (N, 4, 4)."""
    from .frames import coframe_printed_expr

    H = coframe_printed_expr().subs(PHI, 0)
    out = np.zeros((R.size, 4, 4))
    for al in range(4):
        for i in range(4):
            if H[al, i] != 0:
                out[:, i, al] = compiled(H[al, i])(R.ravel(), T.ravel(), params.a)
    return out


def _density_batch(params: ManifoldParams, R: np.ndarray, T: np.ndarray, order: int, basis: str) -> np.ndarray:
    ginv = _array_eval(_geometry_exprs()[0].tolist(), (4, 4), R, T, params.a)
    ginv = np.moveaxis(ginv.reshape(4, 4, -1), -1, 0)
    if basis == "coordinate":
        return _sphere_integral(ginv, order)
    if basis != "frame":
        raise ValueError("basis must be 'coordinate' or 'frame'")
    # xi = H^T eta: the integrand is -4-homogeneous, so dS picks up |det H^T| only
    M = _frame_transpose(params, R, T)
    pulled = np.einsum("nia,nij,njb->nab", M, ginv, M)
    return np.abs(np.linalg.det(M)) * _sphere_integral(pulled, order)


def cosphere_density(params: ManifoldParams, pt, order: int = 24, rtol: float = 1e-9,
                     max_order: int = 96, basis: str = "frame") -> float:
    """int_{|xi|=1} tr[(g^{ij} xi_i xi_j)^-2 I_4] dS(xi); equals 8 pi^2 sqrt(det G).

    ``basis="coordinate"`` integrates over the unit sphere of the coordinate cobasis;
    ``basis="frame"`` over the unit sphere of the orthonormal coframe, which is the same
    number for a -4-homogeneous integrand but stays well conditioned near the poles.
    The order is raised in steps of 8 until two successive rules agree within ``rtol``.
    """
    x = as_coords(pt)
    metric(params, x)  # interior check
    R, T = np.array([x[0]]), np.array([x[1]])
    prev = _density_batch(params, R, T, order, basis)[0]
    while order + 8 <= max_order:
        order += 8
        cur = _density_batch(params, R, T, order, basis)[0]
        if abs(cur - prev) <= rtol * abs(cur):
            return float(cur)
        prev = cur
    raise QuadratureDivergence(f"cosphere quadrature not converged by order {max_order}")


def cosphere_density_closed(params: ManifoldParams, pt) -> float:
    return SPINOR_RANK * SPHERE_AREA * volume_density(params, pt)


def cosphere_density_mc(params: ManifoldParams, pt, n: int = 1_000_000, seed: int = 0):
    """Monte-Carlo estimate with uniform sphere samples; returns (estimate, standard error)."""
    rng = np.random.default_rng(seed)
    xi = rng.normal(size=(n, 4))
    xi /= np.linalg.norm(xi, axis=1)[:, None]
    ginv = metric(params, as_coords(pt)).inverse
    vals = SPINOR_RANK * SPHERE_AREA * np.einsum("mi,ij,mj->m", xi, ginv, xi) ** -2.0
    return float(vals.mean()), float(vals.std() / math.sqrt(n))


# ---------------------------------------------------------------- integrals

@dataclass(frozen=True)
class RadialGrid:
    """Composite Gauss-Legendre nodes on [a, r_max a] x [0, pi]; r_max in units of a."""

    r_max: float = 12.0
    panels: int = 48
    theta_panels: int = 8
    order: int = 16

    def nodes(self, a: float):
        rr, wr = _composite_gl(a, self.r_max * a, self.panels, self.order)
        tt, wt = _composite_gl(0.0, math.pi, self.theta_panels, self.order)
        R, T = np.meshgrid(rr, tt, indexing="ij")
        return R, T, np.outer(wr, wt)


def _invariant_part(f: ModeFunction) -> ModeFunction:
    return ModeFunction({k: v for k, v in f.terms.items() if k[0] == ZERO_MODE})


def _radial_values(f0: ModeFunction, R, T, a):
    with np.errstate(all="ignore"):
        v = np.asarray(f0(R, T, 0.0, 0.0, a), dtype=complex)
    return np.where(np.isfinite(v), v, 0.0)


def _tail_check(f0: ModeFunction, params: ManifoldParams, grid: RadialGrid, total: float, tol: float):
    a = params.a
    th = np.linspace(0.05, math.pi - 0.05, 9)
    for scale in (1.0, 2.0, 4.0):
        r = grid.r_max * a * scale
        tail = float(np.abs(_radial_values(f0, np.full_like(th, r), th, a)).max()) * r**4 / 8 * TWO_PI**2
        if tail > tol * max(abs(total), 1.0):
            raise NonIntegrable(f"f does not decay fast enough: r |f| dVol ~ {tail:.3g} at r = {r:g}")


def integral(params: ManifoldParams, f: ModeFunction, grid: RadialGrid = RadialGrid(),
             tail_tol: float = 1e-8) -> complex:
    """int f dVol = (2 pi)^2 int f_(0,0) sqrt(det G) dr dtheta; other modes average out."""
    f0 = _invariant_part(f)
    if f0.is_zero():
        return 0.0
    R, T, W = grid.nodes(params.a)
    total = complex(np.sum(_radial_values(f0, R, T, params.a) * R**3 * np.sin(T) / 8 * W) * TWO_PI**2)
    _tail_check(f0, params, grid, abs(total), tail_tol)
    return total.real if abs(total.imag) <= 1e-15 * max(abs(total), 1.0) else total


def integral_4d(params: ManifoldParams, f: ModeFunction, grid: RadialGrid = RadialGrid(),
                angular: int = 16) -> complex:
    """Direct tensor quadrature over all four coordinates (oracle for ``integral``)."""
    R, T, W = grid.nodes(params.a)
    ang = TWO_PI * np.arange(angular) / angular
    acc = 0.0
    for ph in ang:
        for ps in ang:
            with np.errstate(all="ignore"):
                v = np.asarray(f(R, T, ph, ps, params.a), dtype=complex)
            acc += np.sum(np.where(np.isfinite(v), v, 0.0) * R**3 * np.sin(T) / 8 * W)
    return complex(acc * (TWO_PI / angular) ** 2)


RESIDUE_GRID = RadialGrid(r_max=12.0, panels=24, theta_panels=4, order=8)


@lru_cache(maxsize=32)
def density_grid(params: ManifoldParams, grid: RadialGrid = RESIDUE_GRID, order: int = 24,
                 basis: str = "frame") -> np.ndarray:
    """Cosphere density at the (r, theta) nodes of the grid (phi, psi do not enter)."""
    R, T, _ = grid.nodes(params.a)
    out = _density_batch(params, R, T, order, basis)
    out.flags.writeable = False
    return out.reshape(R.shape)


def wodzicki_residue(params: ManifoldParams, f: ModeFunction, kappa: float = KAPPA,
                     grid: RadialGrid = RESIDUE_GRID, order: int = 24) -> float:
    """kappa int cosphere_density(x) f(x) d^4x (only the invariant part of f survives)."""
    f0 = _invariant_part(f)
    if f0.is_zero():
        return 0.0
    R, T, W = grid.nodes(params.a)
    dens = density_grid(params, grid, order)
    val = np.sum(_radial_values(f0, R, T, params.a) * dens * W) * TWO_PI**2
    return kappa * float(np.real(val))


def trace_theorem_consistency(params: ManifoldParams, f: ModeFunction, kappa: float = KAPPA,
                              grid: RadialGrid = RESIDUE_GRID):
    """(lhs, rhs, relerr) with lhs = Wres / (4 (2 pi)^4), rhs = 2 / (2 pi)^2 int f dVol."""
    lhs = wodzicki_residue(params, f, kappa, grid) / (4 * TWO_PI**4)
    rhs = DIXMIER_COEFFICIENT * float(np.real(integral(params, f, grid)))
    relerr = abs(lhs - rhs) / max(abs(rhs), 1e-300) if rhs != 0 else abs(lhs)
    return lhs, rhs, relerr


@dataclass(frozen=True)
class ResidueReport:
    """Raw and normalized numbers for one function; kappa is the disclosed calibration."""

    raw_density: float
    normalized_residue: float
    dixmier_value: float
    integral: float
    normalization: float
    ratio: float
    relerr: float

    def to_json(self) -> dict:
        return asdict(self)


def residue_report(params: ManifoldParams, f: ModeFunction, pt=None, kappa: float = KAPPA,
                   grid: RadialGrid = RESIDUE_GRID) -> ResidueReport:
    pt = pt if pt is not None else (2 * params.a, math.pi / 2, 0.0, 0.0)
    integ = float(np.real(integral(params, f, grid)))
    wres = wodzicki_residue(params, f, kappa, grid)
    lhs = wres / (4 * TWO_PI**4)
    rhs = DIXMIER_COEFFICIENT * integ
    return ResidueReport(
        raw_density=cosphere_density(params, pt),
        normalized_residue=wres,
        dixmier_value=lhs,
        integral=integ,
        normalization=kappa,
        ratio=wres / integ if integ else float("nan"),
        relerr=abs(lhs - rhs) / abs(rhs) if rhs else abs(lhs),
    )


def residue_corpus() -> list:
    """Five compactly supported invariant functions (radial bumps times theta profiles)."""
    from . import profiles

    specs = [((3, 1), "1"), ((4, 1.5), "1"), ((3, 1), "cos2"), ((2.5, 0.8), "sin"), ((5, 2), "1")]
    out = []
    for (c, w), kind in specs:
        b = profiles.bump(c, w)
        ang = {"1": 1, "sin": profiles.trig("sin"), "cos2": profiles.trig("cos") ** 2}[kind]
        out.append(ModeFunction.mode(0, 0, b * ang))
    return out
