import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cohortflow.core import (
    CalibrationConfig,
    DegenerateSampleError,
    Detection,
    FlowVector,
    FrameVectors,
    angular_diff,
    mean_resultant,
    wrap_angle,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_angular_diff_examples():
    assert angular_diff(0.0, 0.0) == 0.0
    assert angular_diff(math.pi / 2, 0.0) == pytest.approx(math.pi / 2)
    # 3pi/4 - (-3pi/4) = 3pi/2, wrapped by -2pi
    assert angular_diff(3 * math.pi / 4, -3 * math.pi / 4) == pytest.approx(-math.pi / 2)


def test_wrap_range_is_half_open():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)


@given(finite, finite)
def test_angular_diff_properties(a, b):
    d = angular_diff(a, b)
    assert -math.pi < d <= math.pi
    assert angular_diff(a, a) == 0.0
    # the same rotation as the complex-number oracle
    z = complex(math.cos(a), math.sin(a)) / complex(math.cos(b), math.sin(b))
    assert abs(angular_diff(d, math.atan2(z.imag, z.real))) < 1e-9
    r = angular_diff(b, a)
    if abs(abs(d) - math.pi) > 1e-9:
        assert d == pytest.approx(-r, abs=1e-9)


def test_mean_resultant_examples():
    mr = mean_resultant([0.0, math.pi / 2])
    assert mr.mu == pytest.approx(math.pi / 4)
    assert mr.rbar == pytest.approx(math.sqrt(2) / 2)
    mr = mean_resultant([1.234])
    assert mr.mu == pytest.approx(1.234) and mr.rbar == pytest.approx(1.0)
    mr = mean_resultant([0.0, math.pi])
    assert mr.rbar < 1e-9 and mr.degenerate
    with pytest.raises(DegenerateSampleError):
        mean_resultant([0.1, 0.2], [0.0, 0.0])


angles_st = st.lists(st.floats(-math.pi, math.pi), min_size=1, max_size=30)


@given(angles_st, st.floats(-10, 10))
def test_mean_resultant_rotation_equivariance(angles, delta):
    a = mean_resultant(angles)
    b = mean_resultant(np.asarray(angles) + delta)
    assert b.rbar == pytest.approx(a.rbar, abs=1e-9)
    assert 0.0 <= a.rbar <= 1.0
    if a.rbar > 1e-6:
        assert abs(angular_diff(b.mu, a.mu + delta)) < 1e-6


@given(st.floats(-math.pi, math.pi), st.integers(1, 20))
def test_rbar_one_iff_equal(theta, n):
    assert mean_resultant([theta] * n).rbar == pytest.approx(1.0)
    assert mean_resultant([theta] * n + [theta + 0.5]).rbar < 1.0


def test_weighted_mean_matches_replication():
    a = [0.1, 1.0, 2.0]
    w = [2.0, 1.0, 3.0]
    rep = [0.1, 0.1, 1.0, 2.0, 2.0, 2.0]
    assert mean_resultant(a, w).mu == pytest.approx(mean_resultant(rep).mu)
    assert mean_resultant(a, w).rbar == pytest.approx(mean_resultant(rep).rbar)


def test_calibration_max_disp():
    c = CalibrationConfig(meters_per_pixel=0.05, fps=20.0)
    assert c.v_max == pytest.approx(44.7 / 3.6)
    assert c.max_disp_px == pytest.approx(12.4166666, rel=1e-6)
    assert c.px_per_frame_to_mps(3.0) == pytest.approx(3.0 * 0.05 * 20)
    with pytest.raises(ValueError):
        CalibrationConfig(fps=0.0)


def test_flow_vector_derived():
    v = FlowVector(0, 1.0, 2.0, 3.0, 4.0)
    assert v.speed == pytest.approx(5.0)
    assert v.angle == pytest.approx(math.atan2(4.0, 3.0))
    assert v.end == (4.0, 6.0)


def test_detection_validation():
    with pytest.raises(ValueError):
        Detection(-1, 0.0, 0.0)
    with pytest.raises(ValueError):
        Detection(0, float("nan"), 0.0)
    with pytest.raises(ValueError):
        Detection(0, 0.0, 0.0, -1.0)


def test_frame_vectors_columns():
    fv = FrameVectors(3, np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([[0.0, 2.0], [-1.0, 0.0]]),
                      np.array([0, -1]), np.array([0.1, 0.2]))
    assert np.allclose(fv.speeds, [2.0, 1.0])
    assert np.allclose(fv.angles, [math.pi / 2, math.pi])
    assert np.allclose(fv.straightness, 1.0)
    vs = fv.to_list()
    assert vs[1].cohort_id == -1 and vs[0].frame == 3
