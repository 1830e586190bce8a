"""The Dirac operator on analytic spinor fields, its commutators and principal symbols."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np
import sympy as sp

from . import profiles
from .errors import DegenerateMetric
from .frames import coframe_constructed
from .geometry import ManifoldParams, as_coords
from .modealg import ModeFunction
from .spinbundle import (CHARGE_MATRIX, CHI, GAMMA, gamma_coordinate, omega, omega_from_table,
                         spin_connection_from_frame)
from .symbolic import A, R, THETA


class SpinorField(Protocol):
    """A C^4-valued field on coordinates x = (r, theta, phi, psi), unreduced angles allowed."""

    def value(self, x: np.ndarray) -> np.ndarray: ...

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """``d[j]`` = d_j psi, shape (4 coordinates, 4 components)."""
        ...


@dataclass(frozen=True)
class FunctionField:
    """A field given by explicit value and jacobian callables."""

    value_fn: Callable
    jacobian_fn: Callable

    def value(self, x):
        return self.value_fn(np.asarray(x, dtype=float))

    def jacobian(self, x):
        return self.jacobian_fn(np.asarray(x, dtype=float))


class ModeSpinorField:
    """Four mode-function components with exact derivatives."""

    def __init__(self, components, a: float):
        if len(components) != 4:
            raise ValueError("a spinor field has four components")
        self.components = tuple(components)
        self.a = a
        self._d = [[c.diff(j) for j in range(4)] for c in self.components]
        self._dd = None

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([c(x[0], x[1], x[2], x[3], self.a) for c in self.components], dtype=complex)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([[self._d[k][j](x[0], x[1], x[2], x[3], self.a) for k in range(4)]
                         for j in range(4)], dtype=complex)

    def hessian(self, x):
        """``h[i, j]`` = d_i d_j psi, shape (4, 4, 4 components)."""
        if self._dd is None:
            self._dd = [[[d.diff(i) for d in row] for row in self._d] for i in range(4)]
        x = np.asarray(x, dtype=float)
        return np.array([[[self._dd[i][k][j](x[0], x[1], x[2], x[3], self.a) for k in range(4)]
                          for j in range(4)] for i in range(4)], dtype=complex)


def zero_field() -> FunctionField:
    return FunctionField(lambda x: np.zeros(4, complex), lambda x: np.zeros((4, 4), complex))


def matrix_field(M: np.ndarray, field: SpinorField) -> FunctionField:
    """Pointwise constant matrix applied to a field (e.g. chi psi)."""
    return FunctionField(lambda x: M @ field.value(x), lambda x: field.jacobian(x) @ M.T)


def charge_conjugated_field(field: SpinorField, C: np.ndarray = CHARGE_MATRIX) -> FunctionField:
    """(J psi)(x) = C conj(psi(x))."""
    return FunctionField(lambda x: C @ np.conj(field.value(x)), lambda x: np.conj(field.jacobian(x)) @ C.T)


def multiplied_field(params: ManifoldParams, f: ModeFunction, field: SpinorField) -> FunctionField:
    """(M_f psi)(x) = f(x) psi(x)."""
    df = [f.diff(j) for j in range(4)]

    def val(x):
        return f(x[0], x[1], x[2], x[3], params.a) * field.value(x)

    def jac(x):
        fx = f(x[0], x[1], x[2], x[3], params.a)
        g = np.array([d(x[0], x[1], x[2], x[3], params.a) for d in df])
        return g[:, None] * field.value(x)[None, :] + fx * field.jacobian(x)

    return FunctionField(val, jac)


# ------------------------------------------------------------------ operator

def _check(params: ManifoldParams, x: np.ndarray):
    if x[0] <= params.a:
        raise DegenerateMetric("the Dirac operator is singular at Delta = 0")


def apply_dirac(params: ManifoldParams, field: SpinorField, pt) -> np.ndarray:
    """D psi = -i (htilde^j_beta gamma^beta)(d_j psi - omega_j psi)."""
    x = as_coords(pt)
    _check(params, x)
    gj = gamma_coordinate(params, x)
    om = omega(params, x)
    v = field.value(x)
    d = field.jacobian(x)
    return -1j * sum(gj[j] @ (d[j] - om[j] @ v) for j in range(4))


def dirac_field(params: ManifoldParams, field: SpinorField) -> Callable:
    """x -> (D psi)(x) as a plain callable (no derivatives)."""
    return lambda x: apply_dirac(params, field, x)


def apply_dirac_fd(params: ManifoldParams, value_fn: Callable, pt, step: float = 1e-3) -> np.ndarray:
    """Independent oracle: Richardson-extrapolated central differences of the field values,
    the spin connection derived from the frame and Christoffels, and the inverse of the
    stereographically constructed coframe."""
    x = as_coords(pt)
    _check(params, x)
    Hinv = np.linalg.inv(coframe_constructed(params, x, "N"))
    gj = np.einsum("jb,bxy->jxy", Hinv, np.array(GAMMA))
    om = omega_from_table(spin_connection_from_frame(params, x).table)

    def central(j, h):
        e = np.zeros(4)
        e[j] = h
        return (value_fn(x + e) - value_fn(x - e)) / (2 * h)

    def deriv(j):
        d1, d2, d4 = central(j, step), central(j, step / 2), central(j, step / 4)
        r1, r2 = (4 * d2 - d1) / 3, (4 * d4 - d2) / 3
        return (16 * r2 - r1) / 15

    v = value_fn(x)
    return -1j * sum(gj[j] @ (deriv(j) - om[j] @ v) for j in range(4))


def chirality_residual(params: ManifoldParams, field: SpinorField, pt) -> float:
    """|(chi D + D chi) psi| at pt."""
    lhs = CHI @ apply_dirac(params, field, pt) + apply_dirac(params, matrix_field(CHI, field), pt)
    return float(np.abs(lhs).max())


def dirac_j_commutator(params: ManifoldParams, field: SpinorField, pt,
                       conjugation: Callable | None = None) -> float:
    """|(D J - J D) psi| at pt; ``conjugation`` overrides J (pointwise map on C^4) for controls."""
    if conjugation is None:
        Jfield = charge_conjugated_field(field)
        J = lambda s: CHARGE_MATRIX @ np.conj(s)
    else:
        J = conjugation
        # a pointwise antilinear map is real-linear: transport derivatives through it
        Jfield = FunctionField(lambda x: J(field.value(x)),
                               lambda x: np.array([J(row) for row in field.jacobian(x)]))
    diff = apply_dirac(params, Jfield, pt) - J(apply_dirac(params, field, pt))
    return float(np.linalg.norm(diff))


def clifford_action(params: ManifoldParams, pt, covector) -> np.ndarray:
    """c(xi) = gamma^j xi_j for a covector in the coordinate cobasis."""
    gj = gamma_coordinate(params, as_coords(pt))
    return np.einsum("j,jxy->xy", np.asarray(covector, dtype=complex), gj)


def differential(params: ManifoldParams, f: ModeFunction, pt) -> np.ndarray:
    x = as_coords(pt)
    return np.array([f.diff(j).at(params, x) for j in range(4)])


def multiplier_commutator(params: ManifoldParams, f: ModeFunction, field: SpinorField, pt) -> np.ndarray:
    """[D, M_f] psi at pt, computed as D(f psi) - f D psi."""
    x = as_coords(pt)
    return (apply_dirac(params, multiplied_field(params, f, field), x)
            - f.at(params, x) * apply_dirac(params, field, x))


def commutator_symbol(params: ManifoldParams, f: ModeFunction, pt) -> np.ndarray:
    """-i c(df): the matrix that [D, M_f] must equal."""
    return -1j * clifford_action(params, pt, differential(params, f, pt))


def symbol_d_squared(params: ManifoldParams, pt, xi) -> np.ndarray:
    """(gamma^j xi_j)^2; with these gammas it equals -g^{ij} xi_i xi_j I."""
    c = clifford_action(params, pt, xi)
    return c @ c


def symbol_L(params: ManifoldParams, f: ModeFunction, pt, xi, theta_def: float) -> np.ndarray:
    """Principal symbol of L_f = sum_r M_{f_r} V_r: sum_r f_r(x) S_r e(theta (r_4 xi_3 - r_3 xi_4)).

    S_r is the spin lift of the phi-translation by 2 pi theta r_4.
    """
    from .transport import spin_lift

    x = as_coords(pt)
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((4, 4), dtype=complex)
    for mode in f.modes:
        fr = f.part(mode).at(params, x)
        r3, r4 = float(mode[0]), float(mode[1])
        phase = np.exp(2j * math.pi * theta_def * (r4 * xi[2] - r3 * xi[3]))
        out += fr * phase * spin_lift(theta_def, mode)
    return out


# ------------------------------------------------------------- test corpus

def random_component(rng: np.random.Generator, terms: int = 2, bump: bool = False) -> ModeFunction:
    """sum of p(a/r) t(theta) e^{i(m phi + n psi)}, deg p <= 3, t in {1, sin, cos}, |m|, |n| <= 2."""
    items = []
    for _ in range(terms):
        coeffs = [round(float(c), 3) for c in rng.normal(size=4)]
        trig = profiles.trig(str(rng.choice(["1", "sin", "cos"])))
        m, n = (int(v) for v in rng.integers(-2, 3, 2))
        c = complex(round(float(rng.normal()), 3), round(float(rng.normal()), 3))
        items.append(((m, n), profiles.inverse_r_polynomial(coeffs) * trig, c))
    if bump:
        m, n = (int(v) for v in rng.integers(-2, 3, 2))
        items.append(((m, n), profiles.bump(3, 1), complex(round(float(rng.normal()), 3), 0)))
    return ModeFunction.from_terms(items)


def field_corpus(params: ManifoldParams, n: int = 10, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    return [ModeSpinorField([random_component(rng, bump=(k == 0)) for k in range(4)], params.a)
            for _ in range(n)]
