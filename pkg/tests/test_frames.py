import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import interior_points
from nceh.errors import DegenerateMetric, PoleSingularity
from nceh.frames import coframe, cotangent_transition, cotangent_transition_from_z, stereo
from nceh.geometry import ManifoldParams, Point, det_metric, metric, volume_density


def test_stereo_examples():
    assert stereo(Point(2.0, math.pi / 2, 0.0)) == pytest.approx(1.0)
    assert stereo(Point(2.0, math.pi / 2, math.pi / 2)) == pytest.approx(-1j)
    p = Point(2.0, 0.7, 1.3)
    assert stereo(p.in_chart("S")) == pytest.approx(1 / stereo(p))
    with pytest.raises(PoleSingularity):
        stereo(Point(2.0, 0.0))


def test_coframe_orthonormal(params):
    for x in interior_points(params, 50):
        cf = coframe(params, x)
        assert np.abs(cf.H.T @ cf.H - metric(params, x).g).max() <= 1e-10
        assert np.abs(cf.H @ cf.Hinv - np.eye(4)).max() <= 1e-12


def test_coframe_example(params):
    assert coframe(params, Point(2.0, math.pi / 2, 0.0)).H[0, 1] == pytest.approx(-1.0)
    with pytest.raises(DegenerateMetric):
        coframe(params, (1.0, 1.0, 0.0, 0.0))


def test_transition_at_phi_zero():
    F = cotangent_transition(Point(2.0, 1.0, 0.0)).F_SN
    assert np.allclose(F, np.diag([-1.0, -1.0, 1.0, 1.0]), atol=1e-15)
    with pytest.raises(PoleSingularity):
        cotangent_transition(Point(2.0, 0.0))


@settings(max_examples=50, deadline=None)
@given(phi=st.floats(0, 2 * math.pi), th=st.floats(0.05, math.pi - 0.05))
def test_transition_is_rotation_and_cocycle(phi, th):
    t = cotangent_transition(Point(2.0, th, phi))
    assert np.linalg.det(t.F_SN) == pytest.approx(1.0, abs=1e-14)
    assert np.abs(t.F_SN.T @ t.F_SN - np.eye(4)).max() <= 1e-14
    assert np.abs(t.F_SN @ t.F_NS - np.eye(4)).max() <= 1e-14
    assert np.abs(t.F_NS @ t.F_SN - np.eye(4)).max() <= 1e-14
    z = stereo(Point(2.0, th, phi))
    assert np.abs(cotangent_transition_from_z(z) - t.F_SN).max() <= 1e-12


def test_transition_relates_chart_coframes(params):
    for x in interior_points(params, 20, seed=5):
        HN = coframe(params, x).H
        HS = coframe(params, x.in_chart("S")).H
        assert np.abs(HS - cotangent_transition(x).F_SN @ HN).max() <= 1e-10
        assert np.abs(HS.T @ HS - metric(params, x).g).max() <= 1e-10


def test_chart_independent_invariants(params):
    x = Point(2.3, 1.2, 0.4, 0.9)
    HS = coframe(params, x.in_chart("S")).H
    assert abs(np.linalg.det(HS)) == pytest.approx(volume_density(params, x), rel=1e-12)
    assert np.linalg.det(HS.T @ HS) == pytest.approx(det_metric(params, x), rel=1e-12)
