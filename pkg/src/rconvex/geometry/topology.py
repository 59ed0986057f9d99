"""Connectivity of Omega_t = {d > t} and the uniform ball condition for closed curves."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import PreconditionError
from ..grid import GridField
from .sets import CompactSet, FinitePoints, SampledCurve

# 4-connectivity: diagonal steps could leak through one-cell walls
_STRUCT = ndimage.generate_binary_structure(2, 1)


@dataclass
class Components:
    count: int
    labels: GridField           # 0 outside Omega_t, 1..count components
    unbounded_label: int | None
    t: float
    t_effective: float

    @property
    def connected(self) -> bool:
        return self.count == 1

    def unbounded_mask(self) -> np.ndarray:
        if self.unbounded_label is None:
            return np.zeros(self.labels.shape, bool)
        return self.labels.values == self.unbounded_label


def omega_t_components(E: CompactSet, t: float, grid: GridField, d=None) -> Components:
    """Flood fill of {grid points : d > t}.

    Grid points closer to E than h/2 are treated as part of E so that a curve
    passing between two neighbouring nodes still separates them.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    h = grid.h
    lo, hi = E.bbox()
    if grid.margin_to(lo, hi) <= 2 * t + 2 * h:
        raise PreconditionError("bbox must contain E with margin > 2t + 2h")
    if d is None:
        d = E.distance(grid.points())
    t_eff = max(t, h / 2)
    labels, count = ndimage.label(d > t_eff, structure=_STRUCT)
    fr = labels[grid.frame()]
    fr = fr[fr > 0]
    unb = int(np.bincount(fr).argmax()) if fr.size else None
    return Components(int(count), grid.with_values(labels), unb, float(t), float(t_eff))


@dataclass
class T0Estimate:
    value: float
    method: str                     # "exact" (finite sets) or "flood-fill"
    quarter_r_bound: float | None   # r/4 from the existence theorem, when r is supplied
    bracket: tuple[float, float] | None = None


def t0_estimate(E: CompactSet, grid: GridField | None, t_max: float, r: float | None = None,
                n_scan: int = 24, tol: float | None = None) -> T0Estimate:
    """Largest t <= t_max with Omega_t connected.

    Finite sets: delta(E)/2 exactly. Otherwise a coarse scan locates the first
    disconnection and bisection refines it to tol (default h/4).
    """
    qb = None if r is None else r / 4
    if isinstance(E, FinitePoints):
        return T0Estimate(E.separation() / 2, "exact", qb)
    if grid is None:
        raise ValueError("grid required for non-finite sets")
    d = E.distance(grid.points())
    if not omega_t_components(E, 0.0, grid, d).connected:
        raise PreconditionError("E splits the plane at this resolution")
    tol = grid.h / 4 if tol is None else tol

    def conn(t):
        return omega_t_components(E, t, grid, d).connected

    ts = np.linspace(t_max / n_scan, t_max, n_scan)
    ok_t = 0.0
    bad_t = None
    for t in ts:
        if conn(t):
            ok_t = t
        else:
            bad_t = t
            break
    if bad_t is None:
        return T0Estimate(float(t_max), "flood-fill", qb, (float(t_max), math.inf))
    lo, hi = ok_t, bad_t
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if conn(mid):
            lo = mid
        else:
            hi = mid
    return T0Estimate(float(lo), "flood-fill", qb, (float(lo), float(hi)))


@dataclass
class BallCheck:
    passed: bool
    worst_index: int
    worst_point: complex
    worst_side: str        # "inner" or "outer"
    worst_margin: float    # min over samples of dist(centre, curve) - (r - eps); < 0 means failure
    eps: float


def _segments_cross(a, b, c, d):
    def orient(p, q, s):
        return ((q - p) * np.conj(s - p)).imag
    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 < 0) & (o3 * o4 < 0)


def is_simple(curve: SampledCurve) -> bool:
    a = curve._seg_a
    b = curve._seg_b
    n = a.size
    for i in range(n):
        j = np.arange(i + 2, n)
        if curve.closed and i == 0:
            j = j[j != n - 1]
        if j.size and np.any(_segments_cross(a[i], b[i], a[j], b[j])):
            return False
    return True


def uniform_ball_check(curve: SampledCurve, r: float, eps: float | None = None) -> BallCheck:
    """Both tangent disks of radius r at every sample stay off the curve (up to eps)."""
    if not curve.closed:
        raise PreconditionError("uniform ball check needs a closed curve")
    if not is_simple(curve):
        raise PreconditionError("self-intersecting polyline")
    p = curve.points
    # chords of a polyline inscribed in a curve of radius >= r poke into the
    # tangent disk by at most spacing^2/(8r); allow a factor 4 for normal errors
    eps = curve.spacing ** 2 / (2 * r) if eps is None else eps
    tang = np.roll(p, -1) - np.roll(p, 1)
    tang /= np.abs(tang)
    sgn = 1.0 if curve.orientation() > 0 else -1.0
    n_out = -1j * tang * sgn
    worst = (math.inf, 0, "inner")
    for side, c in (("inner", p - r * n_out), ("outer", p + r * n_out)):
        m = curve.distance(c) - (r - eps)
        i = int(np.argmin(m))
        if m[i] < worst[0]:
            worst = (float(m[i]), i, side)
    return BallCheck(worst[0] >= 0, worst[1], complex(p[worst[1]]), worst[2], worst[0], float(eps))
