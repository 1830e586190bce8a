import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from nceh import profiles
from nceh.dirac import random_component
from nceh.errors import AliasError
from nceh.geometry import ManifoldParams
from nceh.modealg import (DeformationParams, ModeFunction, involution, local_unit, oscillatory_phase,
                          oscillatory_product, sample_on_torus, seminorm_q, sigma, sobolev_norm,
                          spectral_decompose, star_product)
from nceh.symbolic import PHI, PSI

lattice = st.tuples(st.integers(-4, 4), st.integers(-4, 4))
half_lattice = st.tuples(st.integers(-8, 8), st.integers(-8, 8)).map(lambda t: (Fraction(t[0], 2), Fraction(t[1], 2)))
seeds = st.integers(0, 10_000)


def close(f, g, tol=1e-12):
    return (f - g).max_abs_coeff() <= tol


def test_mode_function_basics():
    f = ModeFunction.mode(1, 0) + ModeFunction.mode(1, 0)
    assert f.terms == {((1, 0), sp.Integer(1)): 2}
    assert ModeFunction.mode(Fraction(1, 2), 0).is_cover_valued
    assert f.is_algebra_valued
    assert (f - f).is_zero()
    g = ModeFunction.from_expr(sp.cos(PHI) * sp.sin(PSI))
    assert len(g.modes) == 4


def test_json_roundtrip():
    f = random_component(np.random.default_rng(1), bump=True)
    g = ModeFunction.from_json(f.to_json())
    assert close(f, g)


def test_deformation_matrix():
    assert np.array_equal(DeformationParams(0.3).matrix, [[0, -0.3], [0.3, 0]])


def test_spectral_examples(params):
    nodes = np.array([[2.0, 1.0], [3.0, 0.5]])
    cos = ModeFunction.from_expr(sp.cos(PHI))
    sm = spectral_decompose(sample_on_torus(cos, params, nodes, 8), 3, nodes)
    assert set(sm.coeffs) == {(Fraction(1), Fraction(0)), (Fraction(-1), Fraction(0))}
    for c in sm.coeffs.values():
        assert np.allclose(c, 0.5, atol=1e-15)
    h = ModeFunction.mode(0, 0, profiles.trig("sin"))
    assert list(spectral_decompose(sample_on_torus(h, params, nodes, 8), 3).coeffs) == [(0, 0)]
    with pytest.raises(AliasError):
        spectral_decompose(np.zeros((8, 8)), 4)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_spectral_roundtrip(seed):
    params = ManifoldParams(1.0)
    f = random_component(np.random.default_rng(seed), terms=3)
    nodes = np.array([[1.5, 0.7], [4.0, 2.0]])
    sm = spectral_decompose(sample_on_torus(f, params, nodes, 8), 3, nodes)
    phi, psi = np.meshgrid(np.linspace(0, 6, 5), np.linspace(0, 6, 5))
    for k, (r, t) in enumerate(nodes):
        assert np.abs(sm.reconstruct(phi, psi)[k] - f(r, t, phi, psi, 1.0)).max() <= 1e-12


def test_sigma_example():
    assert sigma((1, 0), (0, 1), 0.25) == pytest.approx(-1j)
    assert sigma((1, 0), (0, 1), 0.0) == 1


@given(r=half_lattice, s=half_lattice, theta=st.floats(-2, 2))
def test_sigma_symmetry(r, s, theta):
    assert abs(sigma(r, s, theta) - sigma((-s[0], -s[1]), r, theta)) <= 1e-12
    assert abs(sigma(r, s, theta) * sigma(s, r, theta) - 1) <= 1e-12 or r[1] * s[0] != r[0] * s[1]


def test_star_product_single_modes():
    f, g = ModeFunction.mode(1, 0), ModeFunction.mode(0, 1)
    assert close(star_product(f, g, 0.25), ModeFunction.mode(1, 1, 1, -1j))
    assert close(star_product(g, f, 0.25), ModeFunction.mode(1, 1, 1, 1j))


@settings(max_examples=25, deadline=None)
@given(seed=seeds, theta=st.floats(-1, 1))
def test_star_product_algebra(seed, theta):
    rng = np.random.default_rng(seed)
    f, g, h = (random_component(rng) for _ in range(3))
    assert close(star_product(star_product(f, g, theta), h, theta), star_product(f, star_product(g, h, theta), theta))
    assert close(star_product(f, g + h, theta), star_product(f, g, theta) + star_product(f, h, theta))
    assert close(star_product(f, g, 0.0), f * g)
    assert close(involution(star_product(f, g, theta)), star_product(involution(g), involution(f), theta))


def test_involution_examples():
    assert close(involution(ModeFunction.mode(1, 0)), ModeFunction.mode(-1, 0))
    h = ModeFunction.mode(0, 0, profiles.trig("cos"), 2.5)
    assert close(involution(h), h)


@pytest.mark.parametrize("r,s", [((1, 0), (0, 1)), ((2, -1), (1, 3)), ((-3, 2), (2, 2))])
@pytest.mark.parametrize("theta", [0.0, 0.1, 0.3])
def test_oscillatory_phase(r, s, theta):
    assert abs(oscillatory_phase(r, s, theta) - sigma(r, s, theta)) <= 1e-3


def test_oscillatory_product_matches_star(params):
    rng = np.random.default_rng(3)
    f, g = random_component(rng), random_component(rng)
    assert close(oscillatory_product(f, g, 0.3), star_product(f, g, 0.3), 1e-3 * f.max_abs_coeff() * g.max_abs_coeff() * 4)
    c = ModeFunction.constant(2.0)
    assert close(oscillatory_product(c, g, 0.3), g.scale(2.0), 1e-3)


def test_sobolev_norm(params):
    assert sobolev_norm(params, ModeFunction(), 2) == 0.0
    f = ModeFunction.mode(1, 0, profiles.bump(3, 1))
    n0, n1, n2 = (sobolev_norm(params, f, k) for k in range(3))
    assert 0 < n0 <= n1 <= n2
    from nceh.residue import integral_4d, RadialGrid
    plain = math.sqrt(integral_4d(params, lambda r, t, ph, ps, a: np.abs(f(r, t, ph, ps, a)) ** 2,
                                  RadialGrid(6.0, 24, 8, 16)).real)
    assert n0 == pytest.approx(plain, rel=1e-6)


def test_seminorm_q(params):
    assert seminorm_q(params, ModeFunction.constant(1), 0) == pytest.approx(1.0)
    f = random_component(np.random.default_rng(4))
    q = [seminorm_q(params, f, m) for m in range(3)]
    assert q[0] <= q[1] <= q[2]


def test_local_unit(params):
    e = local_unit(3)
    assert e.modes == [(0, 0)]
    f = ModeFunction.mode(1, -1, profiles.bump(2, 0.5))
    rng = np.random.default_rng(0)
    X = np.stack([rng.uniform(1.01, 6, 200), rng.uniform(0, math.pi, 200), rng.uniform(0, 6, 200),
                  rng.uniform(0, 6, 200)])
    for theta in (0.0, 0.3):
        assert np.abs(star_product(e, f, theta)(*X, 1.0) - f(*X, 1.0)).max() <= 1e-12
        assert np.abs(star_product(f, e, theta)(*X, 1.0) - f(*X, 1.0)).max() <= 1e-12
    assert np.abs(star_product(e, local_unit(5), 0.3)(*X, 1.0) - e(*X, 1.0)).max() <= 1e-12
    with pytest.raises(ValueError):
        local_unit(0)
