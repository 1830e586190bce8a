"""Patch functions, the 8x8 projection of the spinor bundle, and the section round trip.

Sections are given by their chart-N and chart-S components, related on the
overlap by psi_S = Q psi_N. The module map C^8 -> sections is
(t, t') -> (alpha t + beta P t') on chart N, with the weights fixed by the form of p.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import sympy as sp

from .errors import InconsistentSection
from .geometry import as_coords
from .modealg import ModeFunction, star_product
from .spinbundle import _spin_transition_phi
from .symbolic import THETA

FORMS = ("hermitian", "printed")


@dataclass(frozen=True)
class PatchFunctions:
    """h_N + h_S = 1, k_N + k_S = 1, k_mix = sqrt(k_N k_S) = sin(pi sin^2(theta/2))/2."""

    h_N: float
    h_S: float
    k_N: float
    k_S: float
    k_mix: float


def patch_functions(theta: float) -> PatchFunctions:
    half = theta / 2
    u = 0.5 * math.pi * math.sin(half) ** 2
    return PatchFunctions(math.cos(half) ** 2, math.sin(half) ** 2, math.cos(u) ** 2, math.sin(u) ** 2,
                          0.5 * math.sin(2 * u))


def _transition(x: np.ndarray):
    """(P, Q) on the overlap; None at the poles where every k-weighted block vanishes."""
    if 0.0 < x[1] < math.pi:
        t = _spin_transition_phi(x[2])
        return t.P, t.Q
    return None


def projection_matrix(pt, form: str = "hermitian") -> np.ndarray:
    """The 8x8 projection.

    ``printed``: [[k_N 1, k_N P], [k_S Q, k_S 1]], idempotent but self-adjoint only where k_N = k_S.
    ``hermitian``: [[k_N 1, s P], [s Q, k_S 1]] with s = sqrt(k_N k_S); idempotent, self-adjoint,
    same image. At the poles the off-diagonal blocks are zero.
    """
    x = as_coords(pt)
    pf = patch_functions(x[1])
    tq = _transition(x)
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    upper, lower = (pf.k_N, pf.k_S) if form == "printed" else (pf.k_mix, pf.k_mix)
    p = np.zeros((8, 8), dtype=complex)
    p[:4, :4] = pf.k_N * np.eye(4)
    p[4:, 4:] = pf.k_S * np.eye(4)
    if tq is not None:
        P, Q = tq
        if upper:
            p[:4, 4:] = upper * P
        if lower:
            p[4:, :4] = lower * Q
    return p


def _weights(pf: PatchFunctions, form: str):
    """(embedding weights, module-map weights) per chart."""
    if form == "printed":
        return (pf.k_N, pf.k_S), (1.0, 1.0)
    a, b = math.sqrt(pf.k_N), math.sqrt(pf.k_S)
    return (a, b), (a, b)


def embed_section(pt, psi_N: np.ndarray, psi_S: np.ndarray, form: str = "hermitian") -> np.ndarray:
    x = as_coords(pt)
    (eN, eS), _ = _weights(patch_functions(x[1]), form)
    return np.concatenate([eN * np.asarray(psi_N, complex), eS * np.asarray(psi_S, complex)])


def section_from_vector(pt, T: np.ndarray, form: str = "hermitian"):
    """Module map C^8 -> (psi_N, psi_S)."""
    x = as_coords(pt)
    pf = patch_functions(x[1])
    _, (mN, mS) = _weights(pf, form)
    t, tp = T[:4], T[4:]
    tq = _transition(x)
    if tq is None:
        # at a pole only one chart contributes
        return (mN * t, None) if x[1] == 0.0 else (None, mS * tp)
    P, Q = tq
    return mN * t + mS * (P @ tp), mS * tp + mN * (Q @ t)


def module_roundtrip(pt, psi_N: np.ndarray, psi_S: np.ndarray, form: str = "hermitian",
                     tol: float = 1e-10) -> float:
    """max deviation of (section -> C^8 p -> section) and of p T - T for the embedded T."""
    x = as_coords(pt)
    psi_N = np.asarray(psi_N, complex)
    psi_S = np.asarray(psi_S, complex)
    tq = _transition(x)
    if tq is not None and np.abs(psi_S - tq[1] @ psi_N).max() > tol * max(1.0, np.abs(psi_N).max()):
        raise InconsistentSection("chart components violate psi_S = Q psi_N on the overlap")
    T = embed_section(x, psi_N, psi_S, form)
    p = projection_matrix(x, form)
    res = float(np.abs(p @ T - T).max())
    back_N, back_S = section_from_vector(x, T, form)
    if back_N is not None:
        res = max(res, float(np.abs(back_N - psi_N).max()))
    if back_S is not None:
        res = max(res, float(np.abs(back_S - psi_S).max()))
    return res


# --------------------------------------------------------- deformed version

def projection_mode_matrix(form: str = "hermitian") -> list:
    """p as an 8x8 nested list of ModeFunctions (P, Q entries are single modes (+-1, 0))."""
    u = sp.pi / 2 * sp.sin(THETA / 2) ** 2
    kN, kS = sp.cos(u) ** 2, sp.sin(u) ** 2
    upper, lower = (kN, kS) if form == "printed" else (sp.sin(2 * u) / 2,) * 2
    pdiag = [(1, -1j), (-1, 1j), (-1, 1j), (1, -1j)]  # P_aa = c e^{i m phi}
    M = [[ModeFunction() for _ in range(8)] for _ in range(8)]
    for a, (m, c) in enumerate(pdiag):
        M[a][a] = ModeFunction.mode(0, 0, kN)
        M[a + 4][a + 4] = ModeFunction.mode(0, 0, kS)
        M[a][a + 4] = ModeFunction.mode(m, 0, upper, c)
        M[a + 4][a] = ModeFunction.mode(-m, 0, lower, 1 / c)
    return M


def mode_matrix_product(X: list, Y: list, theta_def: float) -> list:
    n = len(X)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = ModeFunction()
            for k in range(n):
                if X[i][k].terms and Y[k][j].terms:
                    acc = acc + star_product(X[i][k], Y[k][j], theta_def)
            row.append(acc)
        out.append(row)
    return out


def evaluate_mode_matrix(M: list, a: float, x) -> np.ndarray:
    x = as_coords(x)
    return np.array([[f(x[0], x[1], x[2], x[3], a) if f.terms else 0.0 for f in row] for row in M],
                    dtype=complex)
