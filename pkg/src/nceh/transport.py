"""Parallel propagators along the Killing circles, holonomy, and the torus action V_r on spinors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import expm

from .dirac import SpinorField, apply_dirac
from .errors import DegenerateMetric, OdeStepFailure, PoleSingularity
from .geometry import ManifoldParams, as_coords
from .spinbundle import SPIN_WEIGHTS, omega

TWO_PI = 2 * math.pi
_DIRECTIONS = {"phi": 2, "psi": 3}


@dataclass(frozen=True)
class PropagatorMatrix:
    U: np.ndarray
    curve: str
    start: tuple
    dt: float
    steps: int = 0

    def unitarity_defect(self) -> float:
        return float(np.abs(self.U.conj().T @ self.U - np.eye(4)).max())


def _check(params: ManifoldParams, x: np.ndarray):
    if x[0] <= params.a:
        raise DegenerateMetric("transport is singular at Delta = 0")


def a_matrix(params: ManifoldParams, pt, direction: str) -> np.ndarray:
    """A(c(t)) for the phi- or psi-circle through pt: the connection matrix omega_3 or omega_4.

    omega_4 = (i/2) diag(-1, 1, -a^4/r^4, a^4/r^4); see ``a4_printed`` for the block-swapped print.
    """
    x = as_coords(pt)
    _check(params, x)
    return omega(params, x, _DIRECTIONS[direction])


def a4_printed(params: ManifoldParams, pt) -> np.ndarray:
    """The printed psi-matrix (i/2) diag(-a^4/r^4, a^4/r^4, -1, 1), kept for comparison."""
    x = as_coords(pt)
    q = params.a**4 / x[0] ** 4
    return 0.5j * np.diag([-q, q, -1.0, 1.0])


def transport_psi(params: ManifoldParams, pt, dt: float) -> PropagatorMatrix:
    """exp(dt A_4); A_4 is constant along the psi-circle."""
    x = as_coords(pt)
    U = expm(dt * a_matrix(params, x, "psi"))
    return PropagatorMatrix(U, "psi", tuple(x), dt)


def _rk4(params: ManifoldParams, x: np.ndarray, dt: float, n: int) -> np.ndarray:
    h = dt / n
    U = np.eye(4, dtype=complex)
    e = np.array([0.0, 0.0, 1.0, 0.0])
    A = lambda t: omega(params, x + t * e, 2)
    for k in range(n):
        t = k * h
        A0, Ah, A1 = A(t), A(t + h / 2), A(t + h)
        k1 = A0 @ U
        k2 = Ah @ (U + h / 2 * k1)
        k3 = Ah @ (U + h / 2 * k2)
        k4 = A1 @ (U + h * k3)
        U = U + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return U


def transport_phi(params: ManifoldParams, pt, dt: float, tol: float = 1e-8,
                  initial_step: float = TWO_PI / 256, max_halvings: int = 8) -> PropagatorMatrix:
    """Path-ordered solution of dU/dt = A(c_3(t)) U, U(0) = I, by RK4 with step halving.

    The step is halved until both the unitarity defect and the change against the
    half-step solution are within ``tol``.
    """
    x = as_coords(pt)
    _check(params, x)
    if not 0.0 < x[1] < math.pi:
        raise PoleSingularity("the phi-circle degenerates at the poles")
    if dt == 0:
        return PropagatorMatrix(np.eye(4, dtype=complex), "phi", tuple(x), 0.0)
    n = max(1, math.ceil(abs(dt) / initial_step))
    U = _rk4(params, x, dt, n)
    for _ in range(max_halvings):
        V = _rk4(params, x, dt, 2 * n)
        defect = float(np.abs(V.conj().T @ V - np.eye(4)).max())
        if np.abs(V - U).max() <= tol and defect <= tol:
            return PropagatorMatrix(V, "phi", tuple(x), dt, 2 * n)
        U, n = V, 2 * n
    raise OdeStepFailure(f"RK4 could not reach tol {tol} with {n} steps")


def transport_phi_closed(params: ManifoldParams, pt, dt: float) -> np.ndarray:
    """Closed form of the phi-propagator.

    omega_3 depends on phi only through conjugation by exp(phi X), X = diag(0, 0, i/2, -i/2),
    so U(t) = exp((phi0 + t) X) exp(t (omega_3|_{phi=0} - X)) exp(-phi0 X).
    """
    x = as_coords(pt)
    X = np.diag([0, 0, 0.5j, -0.5j])
    B = omega(params, np.array([x[0], x[1], 0.0, x[3]]), 2) - X
    return expm((x[2] + dt) * X) @ expm(dt * B) @ expm(-x[2] * X)


def holonomy(params: ManifoldParams, pt, direction: str, **kw) -> np.ndarray:
    """Propagator once around the closed Killing circle (period 2 pi)."""
    if direction == "psi":
        return transport_psi(params, pt, TWO_PI).U
    return transport_phi(params, pt, TWO_PI, **kw).U


def psi_holonomy_closed(params: ManifoldParams, r: float) -> np.ndarray:
    q = params.a**4 / r**4
    return np.diag([-1.0, -1.0, np.exp(-1j * math.pi * q), np.exp(1j * math.pi * q)])


# ----------------------------------------------------------------- torus action

def spin_lift(theta_def: float, r) -> np.ndarray:
    """Spin lift of the phi-translation by 2 pi theta r_4: diag(exp(i t q)) with spin weights q."""
    t = TWO_PI * theta_def * float(r[1])
    return np.diag(np.exp(1j * t * SPIN_WEIGHTS))


def shift_vector(theta_def: float, r) -> np.ndarray:
    """V_r pulls back from x + (0, 0, 2 pi theta r_4, -2 pi theta r_3)."""
    return np.array([0.0, 0.0, TWO_PI * theta_def * float(r[1]), -TWO_PI * theta_def * float(r[0])])


@dataclass
class VOperator:
    """(V_r psi)(x) = M(x) psi(x + w) with M the spin lift, a propagator product, or I."""

    params: ManifoldParams
    theta_def: float
    r: tuple
    lift: str = "isometry"
    _cache: dict = dc_field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.lift not in ("isometry", "parallel", "pullback"):
            raise ValueError(f"unknown lift {self.lift!r}")
        self.w = shift_vector(self.theta_def, self.r)

    def matrix(self, x: np.ndarray) -> np.ndarray:
        if self.lift == "isometry":
            return spin_lift(self.theta_def, self.r)
        if self.lift == "pullback":
            return np.eye(4, dtype=complex)
        key = tuple(np.round(x, 14))
        if key not in self._cache:
            # transport the fibre at y = x + w back to x: first along psi, then along phi
            y = x + self.w
            U4 = transport_psi(self.params, y, -self.w[3]).U
            U3 = transport_phi(self.params, y - np.array([0, 0, 0, self.w[3]]), -self.w[2]).U
            self._cache[key] = U3 @ U4
        return self._cache[key]

    def apply_values(self, value_fn, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.matrix(x) @ value_fn(x + self.w)

    def __call__(self, field: SpinorField) -> "ShiftedField":
        return ShiftedField(self, field)


@dataclass
class ShiftedField:
    op: VOperator
    field: SpinorField

    def value(self, x):
        return self.op.apply_values(self.field.value, x)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self.op.lift != "parallel":
            return self.field.jacobian(x + self.op.w) @ self.op.matrix(x).T
        # the propagator depends on x: Richardson central differences of the values
        out = np.zeros((4, 4), dtype=complex)
        for j in range(4):
            e = np.zeros(4)

            def cd(h):
                e[:] = 0
                e[j] = h
                return (self.value(x + e) - self.value(x - e)) / (2 * h)

            out[j] = (4 * cd(5e-4) - cd(1e-3)) / 3
        return out


def v_operator(params: ManifoldParams, theta_def: float, r, field: SpinorField,
               lift: str = "isometry") -> ShiftedField:
    return VOperator(params, theta_def, tuple(r), lift)(field)


def dirac_v_commutator(params: ManifoldParams, theta_def: float, r, field: SpinorField, pt,
                       lift: str = "isometry") -> float:
    """|(D V_r - V_r D) psi| at pt."""
    op = VOperator(params, theta_def, tuple(r), lift)
    x = as_coords(pt)
    lhs = apply_dirac(params, op(field), x)
    rhs = op.apply_values(lambda y: apply_dirac(params, field, y), x)
    return float(np.linalg.norm(lhs - rhs))
