import math

import numpy as np
import pytest

from conftest import interior_points
from nceh.errors import InconsistentSection
from nceh.geometry import SamplingBox
from nceh.modealg import ModeFunction, star_product
from nceh.projmod import (embed_section, evaluate_mode_matrix, mode_matrix_product, module_roundtrip,
                          patch_functions, projection_matrix, projection_mode_matrix, section_from_vector)
from nceh.spinbundle import spin_transition
from nceh import profiles


def test_patch_functions():
    for t in np.linspace(0, math.pi, 13):
        pf = patch_functions(t)
        assert pf.h_N + pf.h_S == pytest.approx(1)
        assert pf.k_N + pf.k_S == pytest.approx(1)
        assert pf.k_mix == pytest.approx(math.sqrt(pf.k_N * pf.k_S), abs=1e-15)
    # k_S vanishes to fourth order at theta = 0, h_S only to second
    assert patch_functions(1e-2).k_S / patch_functions(1e-2).h_S < 1e-3


def test_projection_examples(params):
    assert np.array_equal(projection_matrix((2.0, 0.0, 0.3, 0.0)), np.diag([1.0] * 4 + [0.0] * 4))
    assert np.abs(projection_matrix((2.0, math.pi, 0.3, 0.0)) - np.diag([0.0] * 4 + [1.0] * 4)).max() <= 1e-15
    with pytest.raises(ValueError):
        projection_matrix((2.0, 1.0, 0.0, 0.0), form="bogus")


def test_projection_hermitian_form(params):
    pts = interior_points(params, 100, seed=6, box=SamplingBox(eps_theta=1e-4))
    for x in pts:
        p = projection_matrix(x)
        assert np.abs(p @ p - p).max() <= 1e-12
        assert np.abs(p - p.conj().T).max() <= 1e-12
        assert abs(np.trace(p) - 4) <= 1e-12
        assert np.linalg.matrix_rank(p, tol=1e-9) == 4


def test_printed_form_idempotent_but_not_selfadjoint(params):
    x = (2.0, 1.0, 0.4, 0.0)
    p = projection_matrix(x, form="printed")
    assert np.abs(p @ p - p).max() <= 1e-12
    assert np.abs(p - p.conj().T).max() > 1e-2
    q = projection_matrix((2.0, math.pi / 2, 0.4, 0.0), form="printed")
    assert np.abs(q - q.conj().T).max() <= 1e-15  # k_N = k_S on the equator


def test_torus_invariant_multiplier_commutes(params):
    x = (2.0, 1.0, 0.4, 0.0)
    p = projection_matrix(x)
    assert np.abs(p @ (3.0 * np.eye(8)) - (3.0 * np.eye(8)) @ p).max() == 0
    M = projection_mode_matrix()
    h = ModeFunction.mode(0, 0, profiles.trig("sin"))
    for row in M:
        for f in row:
            if f.terms:
                assert (star_product(h, f, 0.3) - star_product(f, h, 0.3)).max_abs_coeff() <= 1e-15


@pytest.mark.parametrize("form", ["hermitian", "printed"])
def test_roundtrip(params, form):
    rng = np.random.default_rng(0)
    x0 = (2.0, 1.0, 0.3, 0.0)
    assert module_roundtrip(x0, np.zeros(4), np.zeros(4), form) == 0
    for x in interior_points(params, 30, seed=8):
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        assert module_roundtrip(x, psi, spin_transition(x).Q @ psi, form) <= 1e-10
    with pytest.raises(InconsistentSection):
        module_roundtrip(x0, np.ones(4), np.ones(4), form)


def test_chart_s_vanishes_at_north_pole():
    psi = np.array([1, 2, 3, 4], dtype=complex)
    T = embed_section((2.0, 0.0, 0.0, 0.0), psi, np.zeros(4))
    assert np.array_equal(T[4:], np.zeros(4))
    back_N, back_S = section_from_vector((2.0, 0.0, 0.0, 0.0), T)
    assert back_S is None and np.allclose(back_N, psi)


@pytest.mark.parametrize("theta_def", [0.0, 0.3])
def test_deformed_projection_idempotent(theta_def):
    M = projection_mode_matrix()
    M2 = mode_matrix_product(M, M, theta_def)
    for x in [(2.0, 1.0, 0.3, 0.5), (3.0, 2.5, 4.0, 1.0)]:
        p, p2 = evaluate_mode_matrix(M, 1.0, x), evaluate_mode_matrix(M2, 1.0, x)
        assert np.abs(p - projection_matrix(x)).max() <= 1e-12
        assert np.abs(p2 - p).max() <= 1e-12
        assert np.abs(p - p.conj().T).max() <= 1e-12
