"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""
import math
import subprocess
import sys
import time

import numpy as np
import pytest
import sympy as sp
from scipy.linalg import expm

from conftest import interior_points
from nceh import profiles
from nceh.dirac import (FunctionField, chirality_residual, commutator_symbol, dirac_j_commutator, field_corpus,
                        multiplier_commutator, random_component)
from nceh.frames import coframe, cotangent_transition
from nceh.geometry import ManifoldParams, christoffel_closed, christoffel_from_metric, metric, ricci
from nceh.hochschild import (boundary, chain_is_zero, chi_residual, cycle_c0, cycle_c_theta, represent_bimodule,
                             represent_pi_D, varkappa)
from nceh.modealg import ModeFunction, local_unit, oscillatory_phase, sigma, star_product
from nceh.opalg import commutator, compose, dirac_commutator, evaluate, left_rep, multiplier, right_rep
from nceh.projmod import module_roundtrip, projection_matrix
from nceh.residue import (RESIDUE_GRID, cosphere_density, cosphere_density_closed, integral, residue_corpus,
                          trace_theorem_consistency, wodzicki_residue)
from nceh.spinbundle import spin_connection_closed, spin_connection_from_frame, spin_transition
from nceh.symbolic import PHI
from nceh.transport import (VOperator, a4_printed, dirac_v_commutator, holonomy, transport_phi, transport_psi)

P = ManifoldParams(1.0)


@pytest.fixture
def report(capsys):
    def emit(n, title, results):
        """results: list of (label, value, limit); passes iff every value <= limit."""
        ok = all(v <= lim for _, v, lim in results)
        detail = "; ".join(f"{lab}={v:.2e}{'<=' if v <= lim else '>'}{lim:.0e}" for lab, v, lim in results)
        with capsys.disabled():
            print(f"\ncriterion {n:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
        assert ok, detail

    return emit


def test_criterion_01_christoffel(report):
    t0 = time.perf_counter()
    res = max(float(np.abs(christoffel_closed(P, x).gamma - christoffel_from_metric(P, x).gamma).max())
              for x in interior_points(P, 100, seed=101))
    report(1, "Christoffel symbols vs metric oracle", [("max|diff|", res, 1e-9),
                                                        ("seconds", time.perf_counter() - t0, 5.0)])


def test_criterion_02_ricci_flat(report):
    t0 = time.perf_counter()
    res = max(float(np.abs(ricci(ManifoldParams(a), x)).max())
              for a in (0.5, 1.0, 2.0) for x in interior_points(ManifoldParams(a), 50, seed=102))
    report(2, "Ricci-flatness", [("max|Ric|", res, 1e-6), ("seconds", time.perf_counter() - t0, 30.0)])


def test_criterion_03_frames(report):
    pts = interior_points(P, 100, seed=103)
    hth = max(float(np.abs(coframe(P, x).H.T @ coframe(P, x).H - metric(P, x).g).max()) for x in pts)
    fsn = max(float(np.abs(cotangent_transition(x).F_SN @ cotangent_transition(x).F_NS - np.eye(4)).max())
              for x in pts)
    pq = max(float(np.abs(spin_transition(x).P @ spin_transition(x).Q - np.eye(4)).max()) for x in pts)
    report(3, "frame/metric coherence", [("HtH-G", hth, 1e-10), ("F_SN F_NS-I", fsn, 1e-12), ("PQ-I", pq, 1e-12)])


def test_criterion_04_spin_connection(report):
    diff = anti = 0.0
    for x in interior_points(P, 100, seed=104):
        c, o = spin_connection_closed(P, x).table, spin_connection_from_frame(P, x).table
        diff = max(diff, float(np.abs(c - o).max()))
        anti = max(anti, float(np.abs(c + np.swapaxes(c, 1, 2)).max()))
    report(4, "spin connection list vs frame computation", [("max|diff|", diff, 1e-9), ("antisymmetry", anti, 1e-9)])


def test_criterion_05_dirac(report):
    corpus = field_corpus(P, n=10, seed=0)
    pts = interior_points(P, 3, seed=105)
    chi = max(chirality_residual(P, f, x) for f in corpus for x in pts)
    dj = max(dirac_j_commutator(P, f, x) for f in corpus for x in pts)
    rng = np.random.default_rng(5)
    mult = 0.0
    for f in [random_component(rng) for _ in range(4)]:
        for x in pts:
            lhs = multiplier_commutator(P, f, corpus[0], x)
            mult = max(mult, float(np.abs(lhs - commutator_symbol(P, f, x) @ corpus[0].value(x.coords)).max()))
    report(5, "Dirac identities", [("chi D + D chi", chi, 1e-8), ("[D,J]", dj, 1e-8), ("[D,M_f]+i c(df)", mult, 1e-8)])


def test_criterion_06_transport(report):
    fld = field_corpus(P, n=1, seed=6)[0]
    pts = interior_points(P, 10, seed=106)
    unit = max(max(transport_phi(P, x, 2 * math.pi).unitarity_defect(),
                   transport_psi(P, x, 2 * math.pi).unitarity_defect()) for x in pts)
    # closed form diag(e^{-i pi a^4/r^4}, e^{i pi a^4/r^4}, -1, -1); the lift used here carries
    # the a-dependent phases in the second chirality block, so compare eigenvalue multisets
    hol = 0.0
    for a in (0.5, 1.0, 2.0):
        pa = ManifoldParams(a)
        for r in (1.2 * a, 2 * a, 4 * a):
            x = (r, 1.0, 0.3, 0.2)
            q = a**4 / r**4
            closed = np.array([np.exp(-1j * math.pi * q), np.exp(1j * math.pi * q), -1, -1])
            got = np.diag(holonomy(pa, x, "psi"))
            printed = np.diag(transport_psi(pa, x, 2 * math.pi).U)
            hol = max(hol, float(np.abs(np.sort_complex(got) - np.sort_complex(closed)).max()),
                      float(np.abs(np.sort_complex(printed) - np.sort_complex(closed)).max()))
            hol = max(hol, float(np.abs(np.diag(expm(2 * math.pi * a4_printed(pa, x))) - closed).max()))
    theta = 0.3
    group = exch = 0.0
    for r, s in [((1, 0), (0, 1)), ((0.5, -1), (1, 0.5)), ((2, 1), (-1, 1))]:
        Vr, Vs = VOperator(P, theta, r), VOperator(P, theta, s)
        Vrs = VOperator(P, theta, (r[0] + s[0], r[1] + s[1]))
        h = ModeFunction.mode(s[0], s[1], 1)
        for x in pts[:3]:
            X = x.coords
            group = max(group, float(np.abs(Vr.apply_values(lambda y: Vs.apply_values(fld.value, y), X)
                                            - Vrs.apply_values(fld.value, X)).max()))
            lhs = Vr.apply_values(lambda y: h(*y, 1.0) * fld.value(y), X)
            rhs = sigma(r, s, theta) * h(*X, 1.0) * Vr.apply_values(fld.value, X)
            exch = max(exch, float(np.abs(lhs - rhs).max()))
    dv = max(dirac_v_commutator(P, theta, r, fld, x) for r in ((1, 0), (0, 1), (0.5, -0.5)) for x in pts[:3])
    report(6, "transport", [("unitarity", unit, 1e-8), ("psi holonomy", hol, 1e-10), ("V group law", group, 1e-7),
                            ("V M = sigma M V", exch, 1e-7), ("[D,V]", dv, 1e-6)])


def test_criterion_07_deformed_algebra(report):
    rng = np.random.default_rng(7)
    theta = 0.3
    assoc = 0.0
    for _ in range(10):
        f, g, h = (random_component(rng) for _ in range(3))
        d = star_product(star_product(f, g, theta), h, theta) - star_product(f, star_product(g, h, theta), theta)
        assoc = max(assoc, d.max_abs_coeff())
    osc = 0.0
    for _ in range(8):
        r, s = tuple(int(v) for v in rng.integers(-3, 4, 2)), tuple(int(v) for v in rng.integers(-3, 4, 2))
        osc = max(osc, abs(oscillatory_phase(r, s, theta) - sigma(r, s, theta)))
    sym = max(abs(sigma(r, s, theta) - sigma((-s[0], -s[1]), r, theta))
              for r in [(i, j) for i in range(-3, 4) for j in range(-3, 4)] for s in [(1, 2), (-3, 1), (0.5, -1.5)])
    e = local_unit(3)
    X = np.array([x.coords for x in interior_points(P, 200, seed=107)]).T
    unit = 0.0
    for m in [(1, -1), (0, 2), (-2, 1)]:
        f = ModeFunction.mode(m[0], m[1], profiles.bump(2, 0.5))
        ref = f(*X, 1.0)
        unit = max(unit, float(np.abs(star_product(e, f, theta)(*X, 1.0) - ref).max()),
                   float(np.abs(star_product(f, e, theta)(*X, 1.0) - ref).max()))
    report(7, "deformed algebra", [("associativity", assoc, 1e-12), ("oscillatory", osc, 1e-3),
                                   ("sigma symmetry", sym, 0.0), ("local unit", unit, 0.0)])


def test_criterion_08_representation(report):
    rng = np.random.default_rng(8)
    theta = 0.3
    fld = field_corpus(P, n=1, seed=8)[0]
    X0 = np.array([2.2, 1.1, 0.5, 0.4])
    coeff = spin = 0.0
    for _ in range(3):
        f, g = random_component(rng), random_component(rng)
        L, R = left_rep(f), right_rep(g)
        coeff = max(coeff, (left_rep(star_product(f, g, theta)) - compose(L, left_rep(g), theta)).max_abs(),
                    commutator(L, R, theta).max_abs(), commutator(dirac_commutator(L), R, theta).max_abs())

        def applied(op, field):
            return FunctionField(lambda y: evaluate(op, field, y, P, theta), None)

        hom = evaluate(compose(L, left_rep(g), theta), fld, X0, P, theta) - evaluate(
            left_rep(star_product(f, g, theta)), fld, X0, P, theta)
        lr = evaluate(L, applied(R, fld), X0, P, theta) - evaluate(R, applied(L, fld), X0, P, theta)
        DL = dirac_commutator(L)
        first = evaluate(DL, applied(R, fld), X0, P, theta) - evaluate(R, applied(DL, fld), X0, P, theta)
        spin = max(spin, *(float(np.abs(v).max()) for v in (hom, lr, first)))
    report(8, "representation, reality, first order", [("coefficients", coeff, 1e-12), ("spinors", spin, 1e-7)])


def test_criterion_09_projective_module(report):
    rng = np.random.default_rng(9)
    proj = rt = 0.0
    for x in interior_points(P, 100, seed=109):
        p = projection_matrix(x)
        proj = max(proj, float(np.abs(p @ p - p).max()), float(np.abs(p - p.conj().T).max()), abs(np.trace(p) - 4))
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        rt = max(rt, module_roundtrip(x, psi, spin_transition(x).Q @ psi))
    report(9, "projective module", [("p^2=p, p=p*, tr p=4", proj, 1e-12), ("round trip", rt, 1e-10)])


def test_criterion_10_orientation(report):
    t0 = time.perf_counter()
    X = np.array([x.coords for x in interior_points(P, 50, seed=110)])
    results = [("b(c0)", chain_is_zero(boundary(cycle_c0(), 0.0), 200)[1], 1e-10),
               ("pi(c0)-chi", chi_residual(represent_pi_D(cycle_c0(), P, 0.0, X), P, X), 1e-8)]
    for theta in (0.0, 0.3):
        c = cycle_c_theta(P, theta)
        results.append((f"b(c) th={theta}", chain_is_zero(boundary(c, theta), 200)[1], 1e-10))
        results.append((f"pi(c)-chi th={theta}", chi_residual(represent_pi_D(c, P, theta, X), P, X), 1e-8))
    kappa = (represent_bimodule(varkappa()) - multiplier(ModeFunction.from_expr(sp.cos(PHI)))).max_abs()
    results += [("pi(kappa)-M_cos", kappa, 0.0), ("seconds", time.perf_counter() - t0, 120.0)]
    report(10, "orientation cycle", results)


def test_criterion_11_residue(report):
    dens = max(abs(cosphere_density(P, x) / cosphere_density_closed(P, x) - 1)
               for x in interior_points(P, 10, seed=111))
    ratios = [wodzicki_residue(ManifoldParams(a), f) / integral(ManifoldParams(a), f, RESIDUE_GRID)
              for a in (0.5, 1.0, 2.0) for f in residue_corpus()]
    spread = max(ratios) / min(ratios) - 1
    target = abs(np.mean(ratios) / (8 * (2 * math.pi) ** 2) - 1)
    trace = max(trace_theorem_consistency(P, f)[2] for f in residue_corpus())
    report(11, "residue and trace theorem (kappa = 4)", [("density/closed-1", dens, 1e-6), ("ratio spread", spread, 1e-6),
                                                         ("ratio/8(2pi)^2-1", target, 1e-6), ("trace relerr", trace, 1e-5)])


def test_criterion_12_determinism(report, tmp_path):
    outs = [tmp_path / f"run{k}.json" for k in range(2)]
    procs = [subprocess.Popen([sys.executable, "-m", "nceh.cli", "verify", "--seed", "42", "--out", str(o)],
                              stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL) for o in outs]
    codes = [p.wait() for p in procs]
    a, b = (o.read_bytes() for o in outs)
    report(12, "determinism of verify reports", [("byte diff", float(a != b), 0.0),
                                                 ("missing report", float(not a or codes[0] not in (0, 1)), 0.0)])
