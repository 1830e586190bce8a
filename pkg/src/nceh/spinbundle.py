"""Gamma matrices, chirality, charge conjugation, spin transitions and the spin connection."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from .errors import DegenerateMetric, PoleSingularity
from .frames import coframe, coframe_printed_expr
from .geometry import ManifoldParams, as_coords, christoffel_from_metric
from .symbolic import A, COORDS, PHI, R, THETA, compiled

_I = 1j
GAMMA = (
    np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], dtype=complex),
    np.array([[0, 0, -_I, 0], [0, 0, 0, -_I], [-_I, 0, 0, 0], [0, -_I, 0, 0]], dtype=complex),
    np.array([[0, 0, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]], dtype=complex),
    np.array([[0, 0, 0, -_I], [0, 0, _I, 0], [0, _I, 0, 0], [-_I, 0, 0, 0]], dtype=complex),
)
for _g in GAMMA:
    _g.setflags(write=False)

CHI = GAMMA[0] @ GAMMA[1] @ GAMMA[2] @ GAMMA[3]
CHI.setflags(write=False)

# antiunitary part of J: J s = C conj(s) with C = gamma^1 gamma^3
CHARGE_MATRIX = GAMMA[0] @ GAMMA[2]
CHARGE_MATRIX.setflags(write=False)

# the frame rotates rigidly with phi; its spin lift exp(-t/2 gamma^2 gamma^1)
# equals diag(exp(i t q)) with these spin weights q
SPIN_WEIGHTS = np.array([0.5, -0.5, -0.5, 0.5])


@dataclass(frozen=True)
class GammaSet:
    gammas: tuple
    chi: np.ndarray

    def anticommutator(self, a: int, b: int) -> np.ndarray:
        ga, gb = self.gammas[a], self.gammas[b]
        return ga @ gb + gb @ ga


def gamma_set() -> GammaSet:
    return GammaSet(GAMMA, CHI)


def clifford_residual() -> float:
    """max |{g^a, g^b} + 2 delta^{ab} I|."""
    eye = np.eye(4)
    return max(float(np.abs(GAMMA[a] @ GAMMA[b] + GAMMA[b] @ GAMMA[a] + 2 * (a == b) * eye).max())
               for a in range(4) for b in range(4))


# ------------------------------------------------------------- transitions

@dataclass(frozen=True)
class SpinTransition:
    P: np.ndarray
    Q: np.ndarray


def spin_transition(pt) -> SpinTransition:
    """P = diag(-i e^{i phi}, i e^{-i phi}, i e^{-i phi}, -i e^{i phi}) and Q = P^{-1}."""
    x = as_coords(pt)
    if not 0.0 < x[1] < math.pi:
        raise PoleSingularity("spin transitions live on the overlap 0 < theta < pi")
    return _spin_transition_phi(x[2])


def _spin_transition_phi(phi: float) -> SpinTransition:
    e = np.exp(1j * phi)
    P = np.diag([-1j * e, 1j / e, 1j / e, -1j * e])
    Q = np.diag(1.0 / np.diag(P))
    return SpinTransition(P, Q)


def spin_transition_from_z(z: complex) -> np.ndarray:
    """P through the stereographic coordinate: diag(-i zbar/|z|, i z/|z|, i z/|z|, -i zbar/|z|)."""
    u = z / abs(z)
    return np.diag([-1j * u.conjugate(), 1j * u, 1j * u, -1j * u.conjugate()])


def transition_conjugation_residual(phi: float) -> float:
    """max_a |P g^a P^{-1} - sum_b F_SN[b, a] g^b|: P lifts the cotangent transition."""
    from .frames import cotangent_transition
    P, Q = _spin_transition_phi(phi).P, _spin_transition_phi(phi).Q
    F = cotangent_transition(np.array([1.0, 1.0, phi, 0.0])).F_SN
    return max(float(np.abs(P @ GAMMA[a] @ Q - sum(F[b, a] * GAMMA[b] for b in range(4))).max())
               for a in range(4))


# -------------------------------------------------------- charge conjugation

def charge_conjugation(s: np.ndarray) -> np.ndarray:
    """J s = gamma^1 gamma^3 conj(s) = (-conj s2, conj s1, -conj s4, conj s3).

    Inside each chirality block this is (u, v) -> (-conj v, conj u); J^2 = -1,
    J chi = chi J and J commutes with the Dirac operator.
    """
    return CHARGE_MATRIX @ np.conj(np.asarray(s, dtype=complex))


def charge_conjugation_block_swap(s: np.ndarray) -> np.ndarray:
    """The reading that swaps the chi-eigenspaces: (s+, s-) -> (-conj s-, conj s+).

    Kept as a negative control; it anticommutes with chi.
    """
    s = np.asarray(s, dtype=complex)
    return np.concatenate([-np.conj(s[2:]), np.conj(s[:2])])


def plain_conjugation(s: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(s, dtype=complex))


# ----------------------------------------------------------- spin connection

@dataclass(frozen=True)
class SpinConnectionTable:
    """``table[i, alpha, beta]`` = tilde-Gamma^beta_{i alpha}, zero-based indices."""

    table: np.ndarray

    def coefficient(self, beta: int, i: int, alpha: int) -> float:
        """One-based accessor for tilde-Gamma^beta_{i alpha}."""
        return float(self.table[i - 1, alpha - 1, beta - 1])

    def antisymmetry_residual(self) -> float:
        return float(np.abs(self.table + np.transpose(self.table, (0, 2, 1))).max())


def _closed_spin_entries(params: ManifoldParams, r: float, theta: float, phi: float) -> dict:
    d = 1 - params.a**4 / r**4
    dp = 1 + params.a**4 / r**4
    sd = math.sqrt(d)
    s, c = math.sin(theta), math.cos(theta)
    sp_, cp = math.sin(phi), math.cos(phi)
    # keys (beta, i, alpha), one-based
    return {
        (1, 2, 3): 0.5 * sd * sp_,
        (1, 2, 4): -0.5 * sd * cp,
        # the frame-derived sign; the printed list has +1/2 Delta^{1/2} cos(phi)
        (3, 2, 2): -0.5 * sd * cp,
        (4, 2, 2): -0.5 * sd * sp_,
        (1, 3, 3): -0.5 * sd * s * cp,
        (1, 3, 4): -0.5 * sd * s * sp_,
        (1, 3, 2): -1 - 0.5 * dp * c,
        (3, 3, 2): -0.5 * sd * s * sp_,
        (4, 3, 2): 0.5 * sd * s * cp,
        (4, 3, 3): -0.5 * dp * c,
        (1, 4, 2): 0.5 * d,
        (4, 4, 3): -0.5 * dp,
    }


SPIN_CONNECTION_ERRATA = {
    "tildeGamma^3_22": {"printed": "+1/2 Delta^{1/2} cos(phi)", "verified": "-1/2 Delta^{1/2} cos(phi)"},
}


def spin_connection_closed(params: ManifoldParams, pt) -> SpinConnectionTable:
    x = as_coords(pt)
    if x[0] <= params.a:
        raise DegenerateMetric("spin connection is singular at Delta = 0")
    tab = np.zeros((4, 4, 4))
    for (b, i, a), v in _closed_spin_entries(params, x[0], x[1], x[2]).items():
        tab[i - 1, a - 1, b - 1] = v
        tab[i - 1, b - 1, a - 1] = -v
    return SpinConnectionTable(tab)


@lru_cache(maxsize=None)
def _coframe_derivative_fn():
    H = coframe_printed_expr()
    dH = sp.Array([[[sp.diff(H[b, j], x) for j in range(4)] for b in range(4)] for x in COORDS])
    return compiled(dH, (R, THETA, PHI, A))


def coframe_derivative(params: ManifoldParams, pt) -> np.ndarray:
    """``dH[i, beta, j]`` = d_i h^beta_j, exact."""
    x = as_coords(pt)
    return np.array(_coframe_derivative_fn()(x[0], x[1], x[2], params.a), dtype=float)


def spin_connection_from_frame(params: ManifoldParams, pt) -> SpinConnectionTable:
    """tilde-Gamma^beta_{i alpha} = htilde^j_alpha (h^beta_k Gamma^k_{ij} - d_i h^beta_j)."""
    x = as_coords(pt)
    cf = coframe(params, x, "N")
    gam = christoffel_from_metric(params, x).gamma
    dH = coframe_derivative(params, x)
    inner = np.einsum("bk,kij->ibj", cf.H, gam) - dH  # [i, beta, j]
    tab = np.einsum("ja,ibj->iab", cf.Hinv, inner)
    return SpinConnectionTable(tab)


def omega_from_table(table: np.ndarray) -> np.ndarray:
    """``om[i]`` = 1/4 tilde-Gamma^beta_{i alpha} gamma^alpha gamma^beta."""
    pairs = np.array([[GAMMA[a] @ GAMMA[b] for b in range(4)] for a in range(4)])
    return 0.25 * np.einsum("iab,abxy->ixy", table, pairs)


def omega(params: ManifoldParams, pt, i: int | None = None) -> np.ndarray:
    """Spin connection matrices omega_i (zero-based coordinate index), or all four."""
    om = omega_from_table(spin_connection_closed(params, pt).table)
    return om if i is None else om[i]


def gamma_coordinate(params: ManifoldParams, pt) -> np.ndarray:
    """``gj[j]`` = htilde^j_beta gamma^beta, the Clifford image of dx^j."""
    Hinv = coframe(params, pt, "N").Hinv
    return np.einsum("jb,bxy->jxy", Hinv, np.array(GAMMA))


def gamma_covariance_residual(params: ManifoldParams, pt, step: float = 1e-4) -> float:
    """max |d_i g^j + Gamma^j_{ik} g^k + [omega_i, g^j]|: coordinate gammas are parallel.

    d_i g^j is taken by a Richardson-extrapolated central difference.
    """
    x = as_coords(pt)
    gam = christoffel_from_metric(params, x).gamma
    om = omega(params, x)
    gj = gamma_coordinate(params, x)

    def dgamma(i):
        e = np.zeros(4)
        e[i] = 1.0

        def cd(h):
            return (gamma_coordinate(params, x + h * e) - gamma_coordinate(params, x - h * e)) / (2 * h)

        return (4 * cd(step / 2) - cd(step)) / 3

    worst = 0.0
    for i in range(4):
        dg = dgamma(i)
        for j in range(4):
            res = dg[j] + np.einsum("k,kxy->xy", gam[j, i], gj) + om[i] @ gj[j] - gj[j] @ om[i]
            worst = max(worst, float(np.abs(res).max()))
    return worst
