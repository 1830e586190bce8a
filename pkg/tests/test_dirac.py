import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import interior_points
from nceh.dirac import (FunctionField, ModeSpinorField, apply_dirac, apply_dirac_fd, chirality_residual,
                        clifford_action, commutator_symbol, dirac_j_commutator, field_corpus,
                        multiplied_field, multiplier_commutator, random_component, symbol_L,
                        symbol_d_squared, zero_field)
from nceh.errors import DegenerateMetric
from nceh.geometry import ManifoldParams, Point, metric
from nceh.modealg import ModeFunction
from nceh.spinbundle import GAMMA, plain_conjugation
from nceh import profiles


@pytest.fixture(scope="module")
def corpus():
    return field_corpus(ManifoldParams(1.0), n=10, seed=0)


def test_zero_field(params):
    x = Point(2.0, 1.0, 0.3, 0.2)
    assert np.abs(apply_dirac(params, zero_field(), x)).max() == 0
    assert dirac_j_commutator(params, zero_field(), x) == 0


def test_dirac_singular_at_bolt(params, corpus):
    with pytest.raises(DegenerateMetric):
        apply_dirac(params, corpus[0], (1.0, 1.0, 0.0, 0.0))


def test_matches_finite_difference_oracle(params, corpus):
    for f in corpus[:4]:
        for x in interior_points(params, 3, seed=1):
            exact = apply_dirac(params, f, x)
            fd = apply_dirac_fd(params, f.value, x)
            assert np.abs(exact - fd).max() <= 1e-6 * max(1.0, np.abs(exact).max())


def test_chirality_and_reality_on_corpus(params, corpus):
    pts = interior_points(params, 3, seed=4)
    for f in corpus:
        for x in pts:
            assert chirality_residual(params, f, x) <= 1e-8
            assert dirac_j_commutator(params, f, x) <= 1e-8


def test_plain_conjugation_is_not_real_structure(params, corpus):
    x = Point(2.0, 1.0, 0.3, 0.2)
    assert dirac_j_commutator(params, corpus[1], x, conjugation=plain_conjugation) > 1e-3


def test_linearity(params, corpus):
    x = Point(2.5, 0.9, 1.0, 2.0)
    f, g = corpus[0], corpus[1]
    comb = FunctionField(lambda y: 2 * f.value(y) - 1j * g.value(y), lambda y: 2 * f.jacobian(y) - 1j * g.jacobian(y))
    lhs = apply_dirac(params, comb, x)
    assert np.abs(lhs - 2 * apply_dirac(params, f, x) + 1j * apply_dirac(params, g, x)).max() <= 1e-12


def test_multiplier_commutator(params, corpus):
    rng = np.random.default_rng(7)
    x = Point(2.2, 1.3, 0.4, 0.8)
    one = ModeFunction.constant(1)
    assert np.abs(multiplier_commutator(params, one, corpus[0], x)).max() <= 1e-12
    for f in [ModeFunction.mode(0, 1), random_component(rng), random_component(rng)]:
        lhs = multiplier_commutator(params, f, corpus[2], x)
        rhs = commutator_symbol(params, f, x) @ corpus[2].value(x.coords)
        assert np.abs(lhs - rhs).max() <= 1e-8


def test_leibniz(params, corpus):
    rng = np.random.default_rng(8)
    f, g = random_component(rng), random_component(rng)
    x = Point(3.0, 1.1, 0.2, 0.5)
    fld = corpus[3]
    lhs = multiplier_commutator(params, f * g, fld, x)
    rhs = (multiplier_commutator(params, f, multiplied_field(params, g, fld), x)
           + f.at(params, x.coords) * multiplier_commutator(params, g, fld, x))
    assert np.abs(lhs - rhs).max() <= 1e-8


def test_commutator_bounded_for_compact_support(params):
    f = ModeFunction.mode(1, 0, profiles.bump(3, 1))
    norms = [np.linalg.norm(commutator_symbol(params, f, x), 2) for x in interior_points(params, 200, seed=3)]
    assert np.isfinite(max(norms)) and max(norms) < 100


def test_symbol_d_squared(params):
    x = Point(2.0, math.pi / 2)
    assert np.abs(symbol_d_squared(params, x, np.zeros(4))).max() == 0
    s = symbol_d_squared(params, x, [1, 0, 0, 0])
    assert abs(s[0, 0]) == pytest.approx(15 / 16)
    rng = np.random.default_rng(0)
    ginv = metric(params, x).inverse
    for xi in rng.normal(size=(100, 4)):
        s = symbol_d_squared(params, x, xi)
        assert np.abs(s - s[0, 0] * np.eye(4)).max() <= 1e-12
        assert abs(s[0, 0]) == pytest.approx(xi @ ginv @ xi, rel=1e-12)
        for g in GAMMA:
            assert np.abs(s @ g - g @ s).max() <= 1e-12


@settings(max_examples=30, deadline=None)
@given(xi=st.lists(st.floats(-5, 5), min_size=4, max_size=4), seed=st.integers(0, 1000))
def test_symbol_L(xi, seed):
    params = ManifoldParams(1.0)
    x = Point(2.0, 1.0, 0.4, 0.3)
    f = random_component(np.random.default_rng(seed))
    assert np.abs(symbol_L(params, f, x, xi, 0.0) - f.at(params, x.coords) * np.eye(4)).max() <= 1e-12
    bound = sum(abs(f.part(m).at(params, x.coords)) for m in f.modes)
    assert np.abs(symbol_L(params, f, x, xi, 0.3)).max() <= bound + 1e-12
    g = ModeFunction.mode(0, 0, profiles.trig("sin"))
    assert np.allclose(symbol_L(params, g, x, xi, 0.3), symbol_L(params, g, x, np.zeros(4), 0.3))


def test_clifford_action_is_linear(params):
    x = Point(2.0, 1.0)
    a, b = np.array([1.0, 0, 2, 0]), np.array([0, 3.0, 0, -1])
    assert np.allclose(clifford_action(params, x, a + b), clifford_action(params, x, a) + clifford_action(params, x, b))


def test_mode_field_jacobian_consistent(corpus):
    f = corpus[0]
    x = np.array([2.0, 1.0, 0.3, 0.2])
    h = 1e-6
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        fd = (f.value(x + e) - f.value(x - e)) / (2 * h)
        assert np.abs(fd - f.jacobian(x)[j]).max() <= 1e-6
    assert isinstance(f, ModeSpinorField)
