"""Finite operator algebra of terms M_C V_r acting on spinors.

A term is a 4x4 coefficient matrix C of functions followed by the torus shift
V_r. Each coefficient is split by *effective mode*: entry (a, b) with torus mode
t carries effective mode t + (q_a - q_b, 0), where q are the spin weights of the
phi-lift. Then V_r M_C = sigma(r, e) M_C V_r for a coefficient of effective mode
e, and effective modes add under matrix products. Terms are keyed by
(shift, effective mode).

Two coefficient backends share the algebra: ``SymbolicCoeff`` (profile sums,
exact cancellation) and ``SampledCoeff`` (values at a fixed point set, fast).
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import numpy as np
import sympy as sp

from . import profiles
from .geometry import ManifoldParams
from .frames import coframe_printed_expr
from .modealg import ModeFunction, ZERO_MODE, as_mode, mode_add, mode_neg, sigma
from .spinbundle import CHI, GAMMA, SPIN_WEIGHTS
from .symbolic import PHI, PSI, R, THETA, compiled

_Q = [Fraction(1, 2), Fraction(-1, 2), Fraction(-1, 2), Fraction(1, 2)]
assert [float(q) for q in _Q] == list(SPIN_WEIGHTS)


def raw_mode(eff, a: int, b: int):
    """Torus mode of entry (a, b) inside a coefficient of effective mode ``eff``."""
    return (eff[0] - (_Q[a] - _Q[b]), eff[1])


# ------------------------------------------------------------------ backends

class SymbolicCoeff:
    """Sparse 4x4 matrix; entry (a, b) is a profile sum {profile: coefficient}."""

    __slots__ = ("entries",)

    def __init__(self, entries: dict):
        self.entries = {}
        for k, ps in entries.items():
            ps = {p: c for p, c in ps.items() if c != 0}
            if ps:
                self.entries[k] = ps

    @classmethod
    def scalar(cls, ps: dict) -> "SymbolicCoeff":
        return cls({(a, a): dict(ps) for a in range(4)})

    @classmethod
    def constant(cls, M: np.ndarray) -> "SymbolicCoeff":
        one = sp.Integer(1)
        return cls({(a, b): {one: complex(M[a, b])} for a in range(4) for b in range(4) if M[a, b] != 0})

    def __matmul__(self, other: "SymbolicCoeff") -> "SymbolicCoeff":
        acc: dict = {}
        for (a, b), ps in self.entries.items():
            for (b2, c), qs in other.entries.items():
                if b != b2:
                    continue
                tgt = acc.setdefault((a, c), {})
                for p, x in ps.items():
                    for q, y in qs.items():
                        c0, pq = profiles.product(p, q)
                        tgt[pq] = tgt.get(pq, 0) + x * y * c0
        return SymbolicCoeff(acc)

    def __add__(self, other: "SymbolicCoeff") -> "SymbolicCoeff":
        acc = {k: dict(v) for k, v in self.entries.items()}
        for k, qs in other.entries.items():
            tgt = acc.setdefault(k, {})
            for q, y in qs.items():
                tgt[q] = tgt.get(q, 0) + y
        return SymbolicCoeff(acc)

    def scale(self, c: complex) -> "SymbolicCoeff":
        return SymbolicCoeff({k: {p: c * x for p, x in ps.items()} for k, ps in self.entries.items()})

    def dagger(self) -> "SymbolicCoeff":
        """Conjugate transpose; profiles are real."""
        return SymbolicCoeff({(b, a): {p: complex(x).conjugate() for p, x in ps.items()}
                              for (a, b), ps in self.entries.items()})

    def max_abs(self) -> float:
        return max((abs(x) for ps in self.entries.values() for x in ps.values()), default=0.0)

    def scalar_part(self):
        """The profile sum h if this matrix is h I, else None."""
        d = self.entries.get((0, 0), {})
        if all(self.entries.get((a, a), {}) == d for a in range(4)) and len(self.entries) == (4 if d else 0):
            return d
        return None

    def evaluate(self, eff, params: ManifoldParams, x: np.ndarray) -> np.ndarray:
        M = np.zeros((4, 4), dtype=complex)
        with np.errstate(all="ignore"):
            for (a, b), ps in self.entries.items():
                t = raw_mode(eff, a, b)
                wave = np.exp(1j * (float(t[0]) * x[2] + float(t[1]) * x[3]))
                M[a, b] = sum(c * complex(compiled(p)(x[0], x[1], params.a)) for p, c in ps.items()) * wave
        return M

    def sample(self, eff, params: ManifoldParams, X: np.ndarray) -> "SampledCoeff":
        arr = np.zeros((len(X), 4, 4), dtype=complex)
        with np.errstate(all="ignore"):
            for (a, b), ps in self.entries.items():
                t = raw_mode(eff, a, b)
                wave = np.exp(1j * (float(t[0]) * X[:, 2] + float(t[1]) * X[:, 3]))
                vals = sum(c * compiled(p)(X[:, 0], X[:, 1], params.a) for p, c in ps.items())
                arr[:, a, b] = vals * wave
        return SampledCoeff(arr)

    def mode_matrix(self, eff) -> list:
        """4x4 nested list of ModeFunctions with their torus modes."""
        out = [[ModeFunction() for _ in range(4)] for _ in range(4)]
        for (a, b), ps in self.entries.items():
            t = raw_mode(eff, a, b)
            out[a][b] = ModeFunction({(t, p): c for p, c in ps.items()})
        return out


class SampledCoeff:
    """Coefficient values at a fixed set of N points, shape (N, 4, 4)."""

    __slots__ = ("arr",)

    def __init__(self, arr: np.ndarray):
        self.arr = arr

    def __matmul__(self, other: "SampledCoeff") -> "SampledCoeff":
        return SampledCoeff(self.arr @ other.arr)

    def __add__(self, other: "SampledCoeff") -> "SampledCoeff":
        return SampledCoeff(self.arr + other.arr)

    def scale(self, c: complex) -> "SampledCoeff":
        return SampledCoeff(c * self.arr)

    def dagger(self) -> "SampledCoeff":
        return SampledCoeff(np.conj(np.swapaxes(self.arr, 1, 2)))

    def max_abs(self) -> float:
        return float(np.abs(self.arr).max()) if self.arr.size else 0.0


# ------------------------------------------------------------ operator exprs

class OperatorExpr:
    """sum over keys (shift r, effective mode e) of M_{C_{r,e}} V_r."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = dict(terms or {})

    def __add__(self, other: "OperatorExpr") -> "OperatorExpr":
        acc = dict(self.terms)
        for k, c in other.terms.items():
            acc[k] = acc[k] + c if k in acc else c
        return OperatorExpr(acc)

    def scale(self, c: complex) -> "OperatorExpr":
        return OperatorExpr({k: v.scale(c) for k, v in self.terms.items()})

    def __neg__(self) -> "OperatorExpr":
        return self.scale(-1)

    def __sub__(self, other: "OperatorExpr") -> "OperatorExpr":
        return self + (-other)

    @property
    def shifts(self) -> list:
        return sorted({r for r, _ in self.terms})

    def max_abs(self) -> float:
        return max((c.max_abs() for c in self.terms.values()), default=0.0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs() <= tol

    def assert_integer_shifts(self) -> None:
        for r, _ in self.terms:
            if r[0].denominator != 1 or r[1].denominator != 1:
                raise ValueError(f"half-integer net shift {r}")

    def sampled(self, params: ManifoldParams, X: np.ndarray) -> "OperatorExpr":
        X = np.asarray(X, dtype=float)
        return OperatorExpr({k: c.sample(k[1], params, X) if isinstance(c, SymbolicCoeff) else c
                             for k, c in self.terms.items()})

    def by_shift(self) -> dict:
        """Sampled backend: total coefficient per shift, shape (N, 4, 4)."""
        out: dict = {}
        for (r, _), c in self.terms.items():
            out[r] = out[r] + c.arr if r in out else c.arr.copy()
        return out

    def to_json(self) -> list:
        rows = []
        for (r, e), c in sorted(self.terms.items()):
            if not isinstance(c, SymbolicCoeff):
                raise TypeError("only symbolic expressions serialize")
            entries = [{"row": a, "col": b, "function": mf.to_json()}
                       for a, row in enumerate(c.mode_matrix(e)) for b, mf in enumerate(row) if mf.terms]
            rows.append({"shift": [float(r[0]), float(r[1])],
                         "effective_mode": [float(e[0]), float(e[1])], "entries": entries})
        return rows


def compose(A: OperatorExpr, B: OperatorExpr, theta_def: float) -> OperatorExpr:
    """(M_C V_r)(M_C' V_s) = sigma(r, e') M_{C C'} V_{r+s}, e' the effective mode of C'."""
    acc: dict = {}
    for (r, e), C in A.terms.items():
        for (s, f), D in B.terms.items():
            prod = (C @ D).scale(sigma(r, f, theta_def))
            key = (mode_add(r, s), mode_add(e, f))
            acc[key] = acc[key] + prod if key in acc else prod
    return OperatorExpr(acc)


def compose_all(ops, theta_def: float) -> OperatorExpr:
    out = ops[0]
    for op in ops[1:]:
        out = compose(out, op, theta_def)
    return out


def commutator(A: OperatorExpr, B: OperatorExpr, theta_def: float) -> OperatorExpr:
    return compose(A, B, theta_def) - compose(B, A, theta_def)


def adjoint(A: OperatorExpr, theta_def: float) -> OperatorExpr:
    """(M_C V_r)* = V_{-r} M_{C^dagger} = sigma(r, e) M_{C^dagger} V_{-r}."""
    acc: dict = {}
    for (r, e), C in A.terms.items():
        key = (mode_neg(r), mode_neg(e))
        c = C.dagger().scale(sigma(mode_neg(r), mode_neg(e), theta_def))
        acc[key] = acc[key] + c if key in acc else c
    return OperatorExpr(acc)


def identity() -> OperatorExpr:
    return OperatorExpr({(ZERO_MODE, ZERO_MODE): SymbolicCoeff.constant(np.eye(4))})


def chi_operator() -> OperatorExpr:
    return OperatorExpr({(ZERO_MODE, ZERO_MODE): SymbolicCoeff.constant(CHI)})


def multiplier(f: ModeFunction) -> OperatorExpr:
    """Pure multiplication M_f (no shift)."""
    return OperatorExpr({(ZERO_MODE, mode): SymbolicCoeff.scalar(ps) for mode, ps in f.by_mode().items()})


def left_rep(f: ModeFunction, theta_def: float = 0.0) -> OperatorExpr:
    """L_f = sum_r M_{f_r} V_r; the theta dependence lives in V_r and in compose."""
    return OperatorExpr({(mode, mode): SymbolicCoeff.scalar(ps) for mode, ps in f.by_mode().items()})


def right_rep(h: ModeFunction, theta_def: float = 0.0) -> OperatorExpr:
    """R_h = sum_s M_{h_s} V_{-s}."""
    return OperatorExpr({(mode_neg(mode), mode): SymbolicCoeff.scalar(ps) for mode, ps in h.by_mode().items()})


# ---------------------------------------------------------- Dirac commutator

@lru_cache(maxsize=None)
def gamma_coefficients() -> tuple:
    """Gamma^j = htilde^j_beta gamma^beta as effective-mode-0 symbolic coefficients."""
    Hinv = sp.simplify(coframe_printed_expr().inv())
    out = []
    for j in range(4):
        entries = {}
        for a in range(4):
            for b in range(4):
                e = sum(Hinv[j, beta] * sp.nsimplify(complex(GAMMA[beta][a, b])) for beta in range(4))
                mf = ModeFunction.from_expr(sp.expand(e))
                if not mf.terms:
                    continue
                want = raw_mode(ZERO_MODE, a, b)
                if any(mode != want for mode, _ in mf.terms):
                    raise AssertionError(f"Gamma^{j} entry ({a},{b}) is not of effective mode 0")
                entries[(a, b)] = {p: c for (_, p), c in mf.terms.items()}
        out.append(SymbolicCoeff(entries))
    return tuple(out)


def _scalar_gradient(eff, ps: dict) -> list:
    """d_j of the scalar function with torus mode ``eff`` and profile sum ``ps``."""
    out = []
    for j in range(4):
        if j < 2:
            acc: dict = {}
            for p, c in ps.items():
                c0, q = profiles.normalize(profiles.derivative(p, R if j == 0 else THETA))
                if c0 != 0:
                    acc[q] = acc.get(q, 0) + c * c0
            out.append(acc)
        else:
            k = 1j * float(eff[j - 2])
            out.append({p: k * c for p, c in ps.items()} if k != 0 else {})
    return out


def dirac_commutator(A: OperatorExpr) -> OperatorExpr:
    """[D, M_h V_r] = (-i c(dh)) V_r for scalar coefficients h, using D V_r = V_r D."""
    gam = gamma_coefficients()
    acc: dict = {}
    for (r, e), C in A.terms.items():
        if not isinstance(C, SymbolicCoeff):
            raise TypeError("dirac_commutator needs symbolic coefficients")
        ps = C.scalar_part()
        if ps is None:
            raise ValueError("dirac_commutator is defined here for scalar coefficients only")
        total = None
        for j, dps in enumerate(_scalar_gradient(e, ps)):
            if not dps:
                continue
            term = (SymbolicCoeff.scalar(dps) @ gam[j]).scale(-1j)
            total = term if total is None else total + term
        if total is not None and total.entries:
            acc[(r, e)] = acc[(r, e)] + total if (r, e) in acc else total
    return OperatorExpr(acc)


# ------------------------------------------------------------- evaluation

def evaluate(A: OperatorExpr, field, pt, params: ManifoldParams, theta_def: float,
             lift: str = "isometry") -> np.ndarray:
    """Apply the expression to a spinor field at pt, term by term via the transport V_r."""
    from .geometry import as_coords
    from .transport import VOperator

    x = as_coords(pt)
    out = np.zeros(4, dtype=complex)
    ops: dict = {}
    for (r, e), C in A.terms.items():
        if r not in ops:
            ops[r] = VOperator(params, theta_def, r, lift).apply_values(field.value, x)
        out += C.evaluate(e, params, x) @ ops[r]
    return out
