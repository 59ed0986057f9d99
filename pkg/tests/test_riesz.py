import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rconvex.errors import PreconditionError
from rconvex.geometry import Disk, DiskUnion, FinitePoints, Segment
from rconvex.grid import GridField
from rconvex.potential import exterior_disk_estimate, green_collocation
from rconvex.riesz import (CONVERGENT, DIVERGENT, FINITE, INFINITE, atomic_measure, blaschke_integral,
                           discrete_riesz, divergence_probe, dpow_measure, green_mass, layer_cake_check,
                           nested_dpow_measures, piecewise_power, riesz_density_segment, truncation_sequence,
                           weight_dpow_summable, weight_power, weight_finite_set)

SEG = Segment(0, 1)


# weights

def test_summable_weight_values():
    w = weight_dpow_summable(2, 0.5)
    assert w.phi(0.5) == pytest.approx(0.5 ** 3.5, rel=1e-12)
    assert w.phi(0.5) == pytest.approx(0.08839, abs=1e-5)
    assert w.phi(2) == pytest.approx(2 ** 1.5, rel=1e-12)
    assert w.psi(0.5) == pytest.approx(4)
    assert w.x_star >= 1


def test_summability_finite_value():
    # both integrals are elementary: 5^2 * 2.5 * int t^-1/2 + 9 * 1.5 * int t^-3/2 = 125 + 27
    w = weight_dpow_summable(2, 0.5)
    assert w.summability == FINITE
    assert w.summability_value == pytest.approx(152, rel=1e-6)


def test_summability_borderline_infinite():
    assert weight_dpow_summable(2, 0).summability == INFINITE


@settings(max_examples=15)
@given(st.floats(1.0, 3.0), st.floats(0.05, 0.9))
def test_summability_matches_closed_form(q, frac):
    eps = frac * q
    w = weight_dpow_summable(q, eps)
    a, b = q + 1 + eps, q - eps
    want = (a - 1) * 5 ** q / eps + b * 3 ** q / eps
    assert w.summability == FINITE
    assert w.summability_value == pytest.approx(want, rel=1e-6)


def test_finite_set_weight():
    w = weight_finite_set(1, 0.1)
    assert w.phi(0.5) == pytest.approx(0.5 ** 1.1, rel=1e-12)
    assert w.phi(0.5) == pytest.approx(0.4665, abs=1e-4)
    assert w.phi(1.0) == 1.0 and float(w.phi(np.nextafter(1.0, 2))) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        weight_finite_set(1, 1.5)


def test_eps_ge_q_rejected():
    with pytest.raises(ValueError):
        weight_dpow_summable(2, 2)


@given(st.floats(0.5, 3), st.floats(0.0, 0.49))
def test_weights_vanish_at_zero_and_are_continuous(q, frac):
    w = weight_dpow_summable(q, frac * q)
    assert float(w.phi(0.0)) == 0.0
    assert float(w.phi(1 - 1e-12)) == pytest.approx(float(w.phi(1 + 1e-12)), rel=1e-9)
    x = np.linspace(0.01, 5, 200)
    assert np.all(np.diff(w.phi(x)) > 0)
    np.testing.assert_allclose(w.phi1(x), w.phi(x) / x, rtol=1e-12)


@given(st.floats(0.05, 3))
def test_weight_derivatives(x):
    w = weight_dpow_summable(2, 0.5)
    h = 1e-6 * x
    if abs(x - 1) < 1e-3:
        return
    assert float(w.dphi(x)) == pytest.approx(float((w.phi(x + h) - w.phi(x - h)) / (2 * h)), rel=1e-5)
    assert float(w.dphi1(x)) == pytest.approx(float((w.phi1(x + h) - w.phi1(x - h)) / (2 * h)), rel=1e-5)


# densities

def test_segment_density_examples():
    assert riesz_density_segment(0.5 + 1j) == pytest.approx(6 / (2 * math.pi))
    assert riesz_density_segment(-1) == pytest.approx(4 / (2 * math.pi))
    assert riesz_density_segment(2) == pytest.approx(4 / (2 * math.pi))
    with pytest.raises(PreconditionError):
        riesz_density_segment(0.5)


def test_discrete_riesz_quadratic_and_harmonic():
    g = GridField.square(0, 1, 201)
    Z = g.points()
    m = discrete_riesz(g.with_values(np.abs(Z) ** 2))
    assert np.nanmax(np.abs(m.density.values - 2 / math.pi)) < 1e-9
    assert m.mask[0].all() and m.mask[:, -1].all()
    m = discrete_riesz(g.with_values(np.log(np.abs(Z + 3))))
    # five-point error h^2/12 (f_xxxx + f_yyyy) / 2pi; harmonic so both equal Re(-6/(z+3)^4), |.| <= 6/2^4
    assert np.nanmax(np.abs(m.density.values)) <= g.h ** 2 / 12 * 2 * 6 / 16 / (2 * math.pi) * 1.01


def test_discrete_riesz_masks_propagate():
    g = GridField.square(0, 1, 21)
    v = np.ones(g.shape)
    v[10, 10] = np.inf
    m = discrete_riesz(g.with_values(v))
    assert m.mask[10, 10] and m.mask[9, 10] and m.mask[10, 11]
    assert not m.mask[8, 10]


@pytest.fixture(scope="module")
def seg_grid_measure():
    g = GridField.square(0.5, 1.6, 641)
    return g, dpow_measure(SEG, 2, g)


def test_discrete_density_matches_closed_form(seg_grid_measure):
    g, m = seg_grid_measure
    Z = g.points()
    d = SEG.distance(Z)
    # the exact density jumps across x = 0 and x = 1; stay two cells off those lines
    sel = ~m.mask & (d > 5 * g.h) & (np.abs(Z.real) > 2 * g.h) & (np.abs(Z.real - 1) > 2 * g.h)
    exact = riesz_density_segment(Z[sel])
    rel = np.abs(m.density.values[sel] - exact) / exact
    # leading relative stencil error: y^-2 in the strip gives (5/3)(h/d)^2, r^-2 on the cap axis gives
    # 3(h/d)^2; at d >= 5h the next order adds at most a few percent of that
    assert np.all(rel <= 3.5 * (g.h / d[sel]) ** 2)


def test_subharmonic_density_nonnegative(seg_grid_measure):
    g, m = seg_grid_measure
    vals = m.density.values[~m.mask]
    assert vals.min() >= -1e-9


# integrals

def test_blaschke_monotone_in_phi(seg_grid_measure):
    g, m = seg_grid_measure
    a = blaschke_integral(m, SEG, weight_power(3), 0.05, 1.0).value
    b = blaschke_integral(m, SEG, weight_power(2), 0.05, 1.0).value   # x^2 >= x^3 on (0, 1)
    assert a <= b


@settings(max_examples=10)
@given(st.floats(1.0, 4.0), st.floats(0.0, 2.0))
def test_blaschke_monotone_property(p, dp):
    g = GridField.square(0.5, 1.6, 161)
    m = dpow_measure(SEG, 2, g)
    lo = blaschke_integral(m, SEG, lambda x: x ** (p + dp), 0.1, 1.0).value
    hi = blaschke_integral(m, SEG, lambda x: x ** p, 0.1, 1.0).value
    assert lo <= hi * (1 + 1e-12)


def test_blaschke_errors(seg_grid_measure):
    g, m = seg_grid_measure
    with pytest.raises(PreconditionError):
        blaschke_integral(m, SEG, weight_power(2), 0.1 * g.h, 1.0)
    with pytest.raises(PreconditionError, match="cover"):
        blaschke_integral(m, SEG, weight_power(2), 0.1, 5.0)


@pytest.fixture(scope="module")
def fine_near():
    g = GridField.square(0.5, 1.1, 1761)
    return dpow_measure(SEG, 2, g)


@pytest.fixture(scope="module")
def nested():
    return nested_dpow_measures(SEG, 2, 0.5, 3.5, 256, 1024, 1024)


def test_convergent_weight_stabilises(fine_near, nested):
    w = weight_dpow_summable(2, 0.5)
    rest = blaschke_integral(nested, SEG, w, 0.5, 250.0).value
    cuts = [0.1, 0.05, 0.025, 0.0125]
    vals = truncation_sequence(fine_near, SEG, w, cuts, 0.5, "inner") + rest
    assert divergence_probe(cuts, vals).kind == CONVERGENT
    assert abs(vals[-1] - vals[-2]) / vals[-1] < 0.02


def test_borderline_weights_diverge(fine_near, nested):
    cuts = [0.1, 0.05, 0.025, 0.0125]
    near = divergence_probe(cuts, truncation_sequence(fine_near, SEG, weight_power(3), cuts, 0.5, "inner"))
    assert near.label == "Divergent(log)"
    oc = [4, 8, 16, 32, 64]
    far = divergence_probe(oc, truncation_sequence(nested, SEG, weight_power(2), oc, 1.0, "outer"))
    assert far.label == "Divergent(log)"


# layer cake

def test_layer_cake_atoms():
    mu = atomic_measure([0.5, 1, 2])
    r = layer_cake_check(mu, FinitePoints([0]), lambda x: x ** 2, np.linspace(0, 2, 5))
    assert r.direct == pytest.approx(5.25) and r.layer_cake == pytest.approx(5.25)


def test_layer_cake_constant_weight():
    mu = atomic_measure([0.5, 1, 2])
    r = layer_cake_check(mu, FinitePoints([0]), lambda x: np.full_like(np.asarray(x, float), 3.0))
    assert r.direct == pytest.approx(9.0) and r.layer_cake == pytest.approx(9.0)


def _annulus(n):
    g = GridField.square(0, 2.5, n)
    Z = g.points()
    v = np.where((np.abs(Z) > 1) & (np.abs(Z) < 2), 1.0, 0.0)
    m = discrete_riesz(g.with_values(np.zeros(g.shape)))
    m.density = g.with_values(v)
    m.mask = g.frame()
    return g, m


def test_layer_cake_annulus():
    exact = 2 * math.pi * (8 - 1) / 3     # int_1^2 r * 2 pi r dr
    gaps, errs = [], []
    for n in (201, 401):
        g, m = _annulus(n)
        r = layer_cake_check(m, FinitePoints([0]), lambda x: x, np.arange(0, 2.5, g.h))
        gaps.append(r.gap)
        errs.append(abs(r.direct - exact) / exact)
    assert max(gaps) < 0.01
    assert gaps[1] <= gaps[0]
    assert errs[1] < errs[0] < 0.02


# green mass

def test_green_mass_unit_atom_outside_circle():
    mu = atomic_measure([math.e])
    E = DiskUnion([Disk(0, 1)])
    assert green_mass(E, 0.0, mu, exterior_disk_estimate(1, [])).value == 1.0
    g = green_collocation(E, 0.0)
    assert green_mass(E, 0.0, mu, g).value == pytest.approx(1, abs=1e-12)


def test_green_mass_segment_t1(nested):
    r = green_mass(SEG, 1.0, nested, green_collocation(SEG, 1.0))
    assert r.value == pytest.approx(1.0, rel=0.05)
    assert r.warning is None


# probes

def test_probe_examples():
    cuts = 10.0 ** -np.arange(1, 6)
    assert divergence_probe(cuts, [math.log(1 / c) for c in cuts]).label == "Divergent(log)"
    assert divergence_probe(cuts, [2 - 2 * math.sqrt(c) for c in cuts]).kind == CONVERGENT
    p = divergence_probe(cuts, [1 / c for c in cuts])
    assert p.label == "Divergent(power)" and p.exponent == pytest.approx(1, rel=1e-9)
    with pytest.raises(ValueError):
        divergence_probe(cuts[:3], [1, 2, 3])


@given(st.floats(0.1, 0.84) | st.floats(0.86, 1.14))
def test_probe_geometric_sequences(rho):
    # the decision threshold sits at ratio 0.85; stay off it so rounding cannot flip the label
    cuts = 2.0 ** -np.arange(6)
    vals = np.cumsum(rho ** np.arange(6))
    p = divergence_probe(cuts, vals)
    assert p.ratio == pytest.approx(rho, rel=1e-9)
    assert p.label == ("Convergent" if rho < 0.85 else "Divergent(log)")


def test_piecewise_weight_recorded_threshold():
    assert piecewise_power("x", 0.5, 2, 1, check_summability=False).x_star == 0
    assert piecewise_power("x", 2, 0.5, 1, check_summability=False).x_star == 1
    assert math.isinf(piecewise_power("x", 2, 2, 1, check_summability=False).x_star)
