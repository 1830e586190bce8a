"""Hochschild chains with coefficients in A (x) A^op, the boundary b, the orientation cycles
c_0 and c, and their representation pi_D on spinors.

Every function appearing in a chain is a single term (mode, profile); a chain is
stored as ``{(left, right, legs): coefficient}`` so cancellations are exact.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np
import sympy as sp

from . import profiles
from .geometry import ManifoldParams, SamplingBox, sample_points
from .modealg import ModeFunction, ZERO_MODE, as_mode, mode_add, sigma
from .opalg import (OperatorExpr, SymbolicCoeff, chi_operator, compose, dirac_commutator, left_rep,
                    right_rep)
from .symbolic import A, DELTA, R, THETA, compiled

ONE = (ZERO_MODE, sp.Integer(1))


def term_product(s, t, theta_def: float):
    """Single-term product s x_theta t -> (scalar, term)."""
    c0, p = profiles.product(s[1], t[1])
    return sigma(s[0], t[0], theta_def) * c0, (mode_add(s[0], t[0]), p)


def terms_of(f: ModeFunction) -> list:
    return [((mode, p), c) for (mode, p), c in f.terms.items()]


# ----------------------------------------------------------------- bimodule

class Bimodule:
    """Finite sums of a (x) b^op over single terms: ``{(a, b): coefficient}``."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def pair(cls, a: ModeFunction, b: ModeFunction | None = None) -> "Bimodule":
        b = ModeFunction.constant(1) if b is None else b
        acc: dict = {}
        for s, c in terms_of(a):
            for t, d in terms_of(b):
                acc[(s, t)] = acc.get((s, t), 0) + c * d
        return cls(acc)

    def __add__(self, other: "Bimodule") -> "Bimodule":
        acc = dict(self.terms)
        for k, v in other.terms.items():
            acc[k] = acc.get(k, 0) + v
        return Bimodule(acc)

    def scale(self, c: complex) -> "Bimodule":
        return Bimodule({k: c * v for k, v in self.terms.items()})

    def mul(self, other: "Bimodule", theta_def: float) -> "Bimodule":
        """(a (x) b^op)(a' (x) b'^op) = (a x a') (x) (b' x b)^op."""
        acc: dict = {}
        for (a, b), c in self.terms.items():
            for (a2, b2), d in other.terms.items():
                ca, aa = term_product(a, a2, theta_def)
                cb, bb = term_product(b2, b, theta_def)
                key = (aa, bb)
                acc[key] = acc.get(key, 0) + c * d * ca * cb
        return Bimodule(acc)


def varkappa() -> Bimodule:
    """(u3^{1/2} (x) (u3^{1/2})^op + conj u3^{1/2} (x) (conj u3^{1/2})^op) / 2."""
    h, hb = ModeFunction.mode(0.5, 0), ModeFunction.mode(-0.5, 0)
    return (Bimodule.pair(h, h) + Bimodule.pair(hb, hb)).scale(0.5)


def varrho() -> Bimodule:
    """(u3^{1/2} (x) (u3^{1/2})^op - conj u3^{1/2} (x) (conj u3^{1/2})^op) / (2i)."""
    h, hb = ModeFunction.mode(0.5, 0), ModeFunction.mode(-0.5, 0)
    return (Bimodule.pair(h, h) + Bimodule.pair(hb, hb).scale(-1)).scale(1 / 2j)


# -------------------------------------------------------------------- chains

class HochschildChain:
    """``{(left, right, legs): coefficient}`` with single-term left, right and legs."""

    __slots__ = ("terms", "degree")

    def __init__(self, terms: dict | None = None, degree: int | None = None):
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}
        if degree is None:
            degree = len(next(iter(self.terms))[2]) if self.terms else 0
        self.degree = degree

    @classmethod
    def simple(cls, coefficient: Bimodule, legs) -> "HochschildChain":
        """Multilinear expansion of coefficient (x) leg_1 (x) ... (x) leg_n."""
        acc: dict = {}
        expanded = [terms_of(leg) for leg in legs]
        for (a, b), c in coefficient.terms.items():
            for combo in itertools.product(*expanded):
                key = (a, b, tuple(t for t, _ in combo))
                acc[key] = acc.get(key, 0) + c * math.prod(d for _, d in combo)
        return cls(acc, len(legs))

    def __add__(self, other: "HochschildChain") -> "HochschildChain":
        acc = dict(self.terms)
        for k, v in other.terms.items():
            acc[k] = acc.get(k, 0) + v
        return HochschildChain(acc, self.degree)

    def scale(self, c: complex) -> "HochschildChain":
        return HochschildChain({k: c * v for k, v in self.terms.items()}, self.degree)

    def max_abs(self) -> float:
        return max((abs(v) for v in self.terms.values()), default=0.0)

    def __len__(self) -> int:
        return len(self.terms)

    def to_json(self) -> list:
        def term(t):
            pid, pparams = profiles.to_id(t[1])
            return {"m": float(t[0][0]), "n": float(t[0][1]), "profile_id": pid, "profile_params": pparams}

        rows = []
        for (a, b, legs), c in sorted(self.terms.items(), key=lambda kv: sp.srepr(kv[0])):
            rows.append({"coeff_re": complex(c).real, "coeff_im": complex(c).imag, "left": term(a),
                         "right": term(b), "legs": [term(t) for t in legs]})
        return rows


def boundary(chain: HochschildChain, theta_def: float) -> HochschildChain:
    """b with the bimodule action a'(a (x) b^op)a'' = (a' x a x a'') (x) b^op."""
    n = chain.degree
    if n < 1:
        raise ValueError("boundary needs degree >= 1")
    acc: dict = {}

    def add(key, v):
        acc[key] = acc.get(key, 0) + v

    for (a, b, legs), c in chain.terms.items():
        s, t = term_product(a, legs[0], theta_def)
        add((t, b, legs[1:]), c * s)
        for j in range(1, n):
            s, t = term_product(legs[j - 1], legs[j], theta_def)
            add((a, b, legs[:j - 1] + (t,) + legs[j + 1:]), (-1) ** j * c * s)
        s, t = term_product(legs[-1], a, theta_def)
        add((t, b, legs[:-1]), (-1) ** n * c * s)
    return HochschildChain(acc, n - 1)


# --------------------------------------------------------------- the cycles

def coordinate_functions() -> list:
    """u_1 = r, u_2 = theta, u_3 = e^{i phi}, u_4 = e^{i psi}."""
    return [ModeFunction.mode(0, 0, R), ModeFunction.mode(0, 0, THETA),
            ModeFunction.mode(1, 0), ModeFunction.mode(0, 1)]


def _minus_i_over(k: int) -> ModeFunction:
    return ModeFunction.mode(-1, 0, 1, -1j) if k == 3 else ModeFunction.mode(0, -1, 1, -1j)


def commutative_k() -> dict:
    """k^alpha_i = (HV)^alpha_i as mode functions, keyed (alpha, i), one-based, nonzero only."""
    from .frames import coframe_printed_expr

    H = coframe_printed_expr()
    out = {}
    for alpha in range(1, 5):
        for i in range(1, 5):
            h = H[alpha - 1, i - 1]
            if h == 0:
                continue
            f = ModeFunction.from_expr(h)
            if i in (3, 4):
                f = f * _minus_i_over(i)
            out[(alpha, i)] = f
    return out


def deformed_k(theta_def: float) -> dict:
    """The bimodule coefficients K_i^alpha, keyed (alpha, i)."""
    half = sp.Rational(1, 2)
    pair = lambda expr: Bimodule.pair(ModeFunction.mode(0, 0, expr))
    m3, m4 = Bimodule.pair(_minus_i_over(3)), Bimodule.pair(_minus_i_over(4))
    s = sp.sin(THETA)
    mul = lambda *xs: _chain_mul(xs, theta_def)
    return {
        (4, 1): pair(DELTA ** (-half)),
        (1, 2): mul(pair(-R / 2), varkappa()),
        (2, 2): mul(pair(R / 2), varrho()),
        (1, 3): mul(pair(-R / 2 * s), varrho(), m3),
        (2, 3): mul(pair(-R / 2 * s), varkappa(), m3),
        (3, 3): mul(pair(R / 2 * DELTA ** half * sp.cos(THETA)), m3),
        (3, 4): mul(pair(R / 2 * DELTA ** half), m4),
    }


def _chain_mul(xs, theta_def):
    out = xs[0]
    for x in xs[1:]:
        out = out.mul(x, theta_def)
    return out


def _permutation_sign(p) -> int:
    sign, p = 1, list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def _orientation_chain(K: dict, theta_def: float, skip: set = frozenset()) -> HochschildChain:
    """(1/4!) sum_sigma sgn K^{s4}_{i_s4} K^{s3}_{i_s3} K^{s2}_{i_s2} K^{s1}_{i_s1} (x) u^{i_s1} ... u^{i_s4}."""
    u = coordinate_functions()
    index_sets = {alpha: [i for (b, i) in K if b == alpha] for alpha in range(1, 5)}
    acc = HochschildChain({}, 4)
    for perm in itertools.permutations(range(4)):
        if perm in skip:
            continue
        sgn = _permutation_sign(perm)
        order = [p + 1 for p in perm]  # sigma(1..4)
        for idx in itertools.product(*(index_sets[a] for a in range(1, 5))):
            i_of = dict(zip(range(1, 5), idx))
            coeff = _chain_mul([K[(order[k], i_of[order[k]])] for k in (3, 2, 1, 0)], theta_def)
            legs = [u[i_of[order[k]] - 1] for k in range(4)]
            acc = acc + HochschildChain.simple(coeff, legs).scale(sgn / 24)
    return acc


def cycle_c0(params: ManifoldParams | None = None, skip: set = frozenset()) -> HochschildChain:
    """The commutative orientation cycle with coefficients k (x) 1^op."""
    K = {key: Bimodule.pair(f) for key, f in commutative_k().items()}
    return _orientation_chain(K, 0.0, skip)


def cycle_c_theta(params: ManifoldParams | None, theta_def: float,
                  skip: set = frozenset()) -> HochschildChain:
    return _orientation_chain(deformed_k(theta_def), theta_def, skip)


def summand_count(chain_builder=commutative_k) -> int:
    K = chain_builder()
    counts = [sum(1 for (b, _) in K if b == alpha) for alpha in range(1, 5)]
    return 24 * math.prod(counts)


# ------------------------------------------------------------ zero testing

def _term_values(t, X: np.ndarray, a: float) -> np.ndarray:
    (m, n), p = t
    with np.errstate(all="ignore"):
        g = compiled(p)(X[:, 0], X[:, 1], a)
    return g * np.exp(1j * (float(m) * X[:, 2] + float(n) * X[:, 3]))


def chain_is_zero(chain: HochschildChain, n_samples: int = 200, rng_seed: int = 0,
                  params: ManifoldParams = ManifoldParams(1.0), tol: float = 1e-10):
    """Multilinear evaluation at independent random point tuples (x_0, y_0, x_1, ..., x_n).

    A nonzero element of the algebraic tensor product evaluates to a nonzero
    polynomial-exponential function of the tuple, so a vanishing result at random
    tuples is a zero certificate with probability one; the tolerance absorbs
    rounding. Returns (is_zero, max residual).
    """
    if not chain.terms:
        return True, 0.0
    rng = np.random.default_rng(rng_seed)
    n = chain.degree
    pts = [np.array([p.coords for p in sample_points(params, n_samples, rng, SamplingBox(r_max=4.0))])
           for _ in range(n + 2)]
    cache: dict = {}

    def vals(t, slot):
        key = (t, slot)
        if key not in cache:
            cache[key] = _term_values(t, pts[slot], params.a)
        return cache[key]

    total = np.zeros(n_samples, dtype=complex)
    for (a, b, legs), c in chain.terms.items():
        v = c * vals(a, 0) * vals(b, 1)
        for k, leg in enumerate(legs):
            v = v * vals(leg, k + 2)
        total += v
    res = float(np.abs(total).max())
    return res <= tol, res


# ------------------------------------------------------- representation pi_D

def represent_bimodule(x: Bimodule) -> OperatorExpr:
    """a (x) b^op -> L_a R_b (symbolic)."""
    out = OperatorExpr()
    for (a, b), c in x.terms.items():
        La = left_rep(ModeFunction({a: c}))
        Rb = right_rep(ModeFunction({b: 1}))
        out = out + compose(La, Rb, 0.0)
    return out


def represent_pi_D(chain: HochschildChain, params: ManifoldParams, theta_def: float,
                   points: np.ndarray | None = None) -> OperatorExpr:
    """pi_D(a (x) b^op (x) a_1 .. a_4) = L_a R_b [D, L_{a_1}] ... [D, L_{a_4}].

    With ``points`` the coefficients are evaluated there (fast, sampled backend);
    otherwise the result is symbolic.
    """
    if chain.degree != 4:
        raise ValueError("pi_D is defined on 4-chains")
    cache: dict = {}

    def prep(op: OperatorExpr) -> OperatorExpr:
        return op if points is None else op.sampled(params, points)

    def leg_op(t):
        if ("leg", t) not in cache:
            cache[("leg", t)] = prep(dirac_commutator(left_rep(ModeFunction({t: 1}))))
        return cache[("leg", t)]

    def coeff_op(a, b):
        if ("co", a, b) not in cache:
            La = left_rep(ModeFunction({a: 1}))
            Rb = right_rep(ModeFunction({b: 1}))
            cache[("co", a, b)] = prep(compose(La, Rb, theta_def))
        return cache[("co", a, b)]

    # group by legs so the product of the four commutators is formed once
    by_legs: dict = {}
    for (a, b, legs), c in chain.terms.items():
        by_legs.setdefault(legs, []).append((a, b, c))
    out = OperatorExpr()
    for legs, coeffs in by_legs.items():
        tail = leg_op(legs[0])
        for t in legs[1:]:
            tail = compose(tail, leg_op(t), theta_def)
        for a, b, c in coeffs:
            out = out + compose(coeff_op(a, b), tail, theta_def).scale(c)
    return out


def chi_residual(op: OperatorExpr, params: ManifoldParams, points: np.ndarray) -> float:
    """max over points of |pi - chi| per shift (the zero shift must be chi, the others zero)."""
    target = chi_operator().sampled(params, points).by_shift()
    got = op.sampled(params, points).by_shift()
    res = 0.0
    for r in set(got) | set(target):
        diff = got.get(r, 0) - target.get(r, 0)
        res = max(res, float(np.abs(diff).max()))
    return res
