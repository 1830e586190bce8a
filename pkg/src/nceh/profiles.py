"""Radial-polar profiles g(r, theta) used as the coefficients of mode functions.

A profile is a sympy expression in ``r``, ``theta`` and the instanton scale
``a``. Numeric prefactors are split off by :func:`normalize` so that equal
profiles compare equal as dictionary keys and coefficients can merge exactly.
The named constructors below are the serializable profile dictionary.
"""
from __future__ import annotations

from functools import lru_cache

import sympy as sp

from .symbolic import A, DELTA, R, THETA

_SYMBOLS = (R, THETA, A)
_LOCALS = {"r": R, "theta": THETA, "a": A}


@lru_cache(maxsize=65536)
def normalize(expr: sp.Expr) -> tuple[complex, sp.Expr]:
    """Split ``expr`` into (numeric coefficient, canonical profile)."""
    expr = sp.sympify(expr)
    if expr == 0:
        return 0j, sp.Integer(1)
    coeff, rest = expr.as_independent(*_SYMBOLS, as_Add=False)
    if isinstance(rest, sp.Add):
        content, rest = rest.as_content_primitive()
        coeff = coeff * content
        # fix the overall sign so that p and -p share a key
        if rest.could_extract_minus_sign():
            rest, coeff = -rest, -coeff
    return complex(coeff), rest


@lru_cache(maxsize=262144)
def product(p: sp.Expr, q: sp.Expr) -> tuple[complex, sp.Expr]:
    """Normalized product of two profiles."""
    if p == 1:
        return 1 + 0j, q
    if q == 1:
        return 1 + 0j, p
    return normalize(p * q)


@lru_cache(maxsize=65536)
def derivative(p: sp.Expr, var: sp.Symbol) -> sp.Expr:
    return sp.diff(p, var)


# ------------------------------------------------------------ dictionary

def one() -> sp.Expr:
    return sp.Integer(1)


def r_power(p: int) -> sp.Expr:
    return R**p


def inverse_r_polynomial(coeffs) -> sp.Expr:
    """sum_k c_k (a/r)^k."""
    return sum(sp.nsimplify(c) * (A / R) ** k for k, c in enumerate(coeffs))


def trig(kind: str) -> sp.Expr:
    return {"1": sp.Integer(1), "sin": sp.sin(THETA), "cos": sp.cos(THETA)}[kind]


def delta_power(q) -> sp.Expr:
    return DELTA ** sp.nsimplify(q)


def smooth_step(x: sp.Expr) -> sp.Expr:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    f0 = sp.exp(-1 / x)
    f1 = sp.exp(-1 / (1 - x))
    return sp.Piecewise((0, x <= 0), (f0 / (f0 + f1), x < 1), (1, True))


def bump(center: float, width: float) -> sp.Expr:
    """Smooth radial bump exp(1 - 1/(1 - s^2)), s = (r - center)/width, supported in |s| < 1.

    ``center`` and ``width`` are in units of a.
    """
    c, w = sp.nsimplify(center) * A, sp.nsimplify(width) * A
    s = (R - c) / w
    return sp.Piecewise((sp.exp(1 - 1 / (1 - s**2)), (R > c - w) & (R < c + w)), (0, True))


def local_unit(n) -> sp.Expr:
    """Equal to 1 for r <= n a, 0 for r >= (n + 1) a, smooth in between."""
    n = sp.nsimplify(n)
    return 1 - smooth_step((R - n * A) / A)


NAMED = {
    "one": lambda: one(),
    "r_power": lambda p: r_power(p),
    "inverse_r_polynomial": lambda coeffs: inverse_r_polynomial(coeffs),
    "trig": lambda kind: trig(kind),
    "delta_power": lambda q: delta_power(q),
    "bump": lambda center, width: bump(center, width),
    "local_unit": lambda n: local_unit(n),
}


def from_id(profile_id: str, params: dict | None = None) -> sp.Expr:
    params = params or {}
    if profile_id == "expr":
        return sp.sympify(params["expr"], locals=_LOCALS)
    if profile_id not in NAMED:
        raise KeyError(f"unknown profile id {profile_id!r}")
    return NAMED[profile_id](**params)


def to_id(p: sp.Expr) -> tuple[str, dict]:
    """Serialize a profile; products fall back to the generic expression form."""
    if p == 1:
        return "one", {}
    return "expr", {"expr": sp.srepr(p)}


def parse_srepr(text: str) -> sp.Expr:
    return sp.sympify(text, locals=_LOCALS)
