import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import interior_points
from nceh.errors import DegenerateMetric, PoleSingularity
from nceh.geometry import ManifoldParams, Point
from nceh.spinbundle import (CHI, GAMMA, charge_conjugation, charge_conjugation_block_swap, clifford_residual,
                             gamma_covariance_residual, gamma_set, omega, spin_connection_closed,
                             spin_connection_from_frame, spin_transition, transition_conjugation_residual)

spinors = arrays(np.complex128, 4, elements=st.complex_numbers(max_magnitude=10, allow_nan=False,
                                                              allow_infinity=False))


def test_gamma_examples():
    g = gamma_set()
    assert np.array_equal(GAMMA[0] @ GAMMA[0], -np.eye(4))
    assert np.array_equal(g.chi, np.diag([-1, -1, 1, 1]))
    assert np.array_equal(g.anticommutator(0, 1), np.zeros((4, 4)))
    assert clifford_residual() == 0.0


def test_chirality_relations():
    assert np.array_equal(CHI @ CHI, np.eye(4))
    for g in GAMMA:
        assert np.array_equal(CHI @ g, -g @ CHI)


def test_spin_transition():
    t = spin_transition(Point(2.0, 1.0, 0.0))
    assert np.allclose(np.diag(t.P), [-1j, 1j, 1j, -1j], atol=1e-15)
    for phi in np.linspace(0.1, 6.0, 7):
        t = spin_transition(Point(2.0, 1.0, phi))
        assert np.abs(t.P @ t.Q - np.eye(4)).max() <= 1e-14
        assert np.abs(t.P.conj().T @ t.P - np.eye(4)).max() <= 1e-14
        assert np.abs(spin_transition((2.0, 1.0, phi + math.pi, 0.0)).P + t.P).max() <= 1e-14
        assert transition_conjugation_residual(phi) <= 1e-14
    with pytest.raises(PoleSingularity):
        spin_transition((2.0, 0.0, 0.0, 0.0))


@settings(max_examples=50, deadline=None)
@given(s=spinors)
def test_charge_conjugation(s):
    J = charge_conjugation
    assert np.abs(J(J(s)) + s).max() <= 1e-12
    assert np.abs(J(1j * s) + 1j * J(s)).max() <= 1e-12
    assert np.abs(J(CHI @ s) - CHI @ J(s)).max() <= 1e-12


def test_block_swap_reading_anticommutes_with_chi():
    s = np.array([1, 2j, 3, -1j])
    assert np.abs(charge_conjugation_block_swap(CHI @ s) + CHI @ charge_conjugation_block_swap(s)).max() == 0


def test_spin_connection_examples(params):
    t = spin_connection_closed(params, Point(2.0, 1.0, math.pi / 2))
    assert t.coefficient(1, 2, 3) == pytest.approx(0.5 * math.sqrt(15 / 16))
    assert t.coefficient(1, 4, 2) == pytest.approx(15 / 32)
    assert t.coefficient(3, 2, 1) == pytest.approx(-t.coefficient(1, 2, 3))


def test_spin_connection_matches_frame_oracle(params):
    for x in interior_points(params, 50):
        closed = spin_connection_closed(params, x).table
        frame = spin_connection_from_frame(params, x).table
        assert np.abs(closed - frame).max() <= 1e-9
        assert np.abs(frame + np.swapaxes(frame, 1, 2)).max() <= 1e-9


def test_spin_connection_small_a_keeps_angular_terms():
    x = (2.0, 1.0, 0.7, 0.0)
    small = spin_connection_from_frame(ManifoldParams(1e-6), x).table
    flat = spin_connection_closed(ManifoldParams(0.0, conifold=True), x).table
    assert np.abs(small - flat).max() <= 1e-9
    assert np.abs(flat).max() > 0.1


def test_spin_connection_degenerate(params):
    with pytest.raises(DegenerateMetric):
        spin_connection_closed(params, (1.0, 1.0, 0.0, 0.0))


def test_omega_properties(params):
    for x in interior_points(params, 20, seed=2):
        om = omega(params, x)
        assert np.abs(om[0]).max() == 0
        for w in om:
            assert abs(np.trace(w)) <= 1e-14
            assert np.abs(w + w.conj().T).max() <= 1e-14


def test_coordinate_gammas_are_parallel(params):
    for x in interior_points(params, 5, seed=9):
        assert gamma_covariance_residual(params, x) <= 1e-6
