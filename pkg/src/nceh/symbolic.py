"""Shared sympy symbols and a cache of compiled (lambdified) expressions.

Every closed-form field in the package is a sympy expression in ``R``, ``THETA``
and the instanton scale ``A`` (plus ``PHI``/``PSI`` where needed). Exact partial
derivatives come from ``sympy.diff``; numerical evaluation goes through
``compiled`` which lambdifies once per (expression, argument list).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy as sp

R = sp.Symbol("r", positive=True)
THETA = sp.Symbol("theta", real=True)
PHI = sp.Symbol("phi", real=True)
PSI = sp.Symbol("psi", real=True)
A = sp.Symbol("a", nonnegative=True)

COORDS = (R, THETA, PHI, PSI)
PROFILE_ARGS = (R, THETA, A)

DELTA = 1 - A**4 / R**4
DELTA_PLUS = 1 + A**4 / R**4
RHO = (R**4 - A**4 * sp.cos(THETA) ** 2) / R**2
RHO_PLUS = (R**4 + A**4 * sp.cos(THETA) ** 2) / R**2


@lru_cache(maxsize=None)
def _compile(expr: sp.Expr, args: tuple):
    fn = sp.lambdify(args, expr, modules="numpy")
    if not expr.has(sp.Piecewise):
        return fn
    # select() evaluates every branch; inactive ones may divide by zero
    raw = fn

    def fn(*vals):
        with np.errstate(all="ignore"):
            out = raw(*(np.asarray(v, dtype=float) for v in vals))
        return out[()] if isinstance(out, np.ndarray) and out.ndim == 0 else out

    return fn


_FAST: dict = {}


def compiled(expr, args=PROFILE_ARGS):
    """Return a numpy function of ``args`` evaluating ``expr``.

    Constant expressions are broadcast to the shape of the first argument.
    """
    key = (expr, tuple(args))
    try:
        return _FAST[key]
    except (KeyError, TypeError):
        pass
    expr = sp.sympify(expr)
    fn = _compile(expr, tuple(args))
    if not expr.free_symbols & set(args):
        inner = fn

        def fn(*vals):
            out = inner(*vals)
            return np.broadcast_to(np.asarray(out), np.shape(vals[0])).copy() if np.ndim(vals[0]) else out

    try:
        _FAST[key] = fn
    except TypeError:
        pass
    return fn


@lru_cache(maxsize=None)
def derivative(expr: sp.Expr, *wrt: sp.Symbol) -> sp.Expr:
    """Cached ``sympy.diff``."""
    return sp.diff(expr, *wrt) if wrt else expr


def evaluate(expr, r, theta, a):
    """Evaluate a profile expression at numeric ``(r, theta, a)`` with warnings silenced.

    Piecewise bumps evaluate every branch under numpy; the unused branch may
    overflow harmlessly.
    """
    with np.errstate(all="ignore"):
        return compiled(expr)(r, theta, a)
