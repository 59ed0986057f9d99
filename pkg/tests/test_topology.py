import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rconvex.errors import PreconditionError
from rconvex.geometry import (FinitePoints, SampledCurve, Segment, omega_t_components, t0_estimate,
                              uniform_ball_check)
from rconvex.geometry.sets import circle_curve
from rconvex.grid import GridField

G = GridField.square(0.5, 3, 401)

# open polyline: two walls 0.2 apart leading into a chamber; Omega_t splits once the walls' t-bands meet
NECK = SampledCurve([-1 + 0.1j, 0.2 + 0.1j, 0.2 + 1j, 1.5 + 1j, 1.5 - 1j, 0.2 - 1j, 0.2 - 0.1j, -1 - 0.1j])


def test_components_examples():
    assert omega_t_components(Segment(0, 1), 0.3, G).count == 1
    c = omega_t_components(circle_curve(1, 400), 0.1, G)
    assert c.count == 2 and c.unbounded_label is not None
    assert omega_t_components(FinitePoints([0, 1]), 0.4, G).connected


def test_margin_violation():
    with pytest.raises(PreconditionError):
        omega_t_components(Segment(0, 1), 1.5, G)


@pytest.mark.parametrize("t", [0.1, 0.2, 0.3, 0.4, 0.45, 0.5])
def test_two_points_connected(t):
    assert omega_t_components(FinitePoints([0, 1]), t, G).count == 1


@settings(max_examples=10)
@given(st.floats(0.01, 0.5), st.floats(0.01, 0.5))
def test_unbounded_component_shrinks(t1, t2):
    lo, hi = sorted((t1, t2))
    E = circle_curve(1, 200)
    a = omega_t_components(E, lo, G).unbounded_mask()
    b = omega_t_components(E, hi, G).unbounded_mask()
    assert np.all(a[b])


def test_t0_finite_exact():
    t0 = t0_estimate(FinitePoints([0, 1, 5]), None, 1.0)
    assert t0.value == 0.5 and t0.method == "exact"


def test_t0_segment_never_disconnects():
    assert t0_estimate(Segment(0, 1), G, 1.0).value == 1.0


def test_t0_neck():
    g = GridField.square(0.25, 3, 801)
    t0 = t0_estimate(NECK, g, 0.5)
    assert abs(t0.value - 0.1) <= 2 * g.h
    assert omega_t_components(NECK, 0.9 * t0.value, g).connected
    assert not omega_t_components(NECK, 0.1 + 3 * g.h, g).connected


def test_t0_closed_curve_rejected():
    with pytest.raises(PreconditionError, match="splits the plane"):
        t0_estimate(circle_curve(1, 200), G, 0.5)


def test_ball_check_circle():
    c = circle_curve(2, 720)
    assert uniform_ball_check(c, 1.9).passed
    res = uniform_ball_check(c, 2.1)
    assert not res.passed and res.worst_side == "inner"


def _ellipse(n=720):
    th = 2 * np.pi * np.arange(n) / n
    return SampledCurve(2 * np.cos(th) + 1j * np.sin(th), closed=True)


def test_ball_check_ellipse():
    e = _ellipse()
    # min osculating radius b^2/a = 0.5
    assert uniform_ball_check(e, 0.45).passed
    assert uniform_ball_check(e, 0.49).passed
    assert not uniform_ball_check(e, 0.51).passed
    assert not uniform_ball_check(e, 0.55).passed


def test_ball_check_errors():
    with pytest.raises(PreconditionError):
        uniform_ball_check(NECK, 0.1)
    bowtie = SampledCurve([0, 1 + 1j, 1, 1j], closed=True)
    with pytest.raises(PreconditionError, match="self-intersecting"):
        uniform_ball_check(bowtie, 0.1)
