"""r-convex hulls on a grid.

A point w lies outside conv_r(E) iff some open disk B(x, r) with dist(x, E) >= r
contains it. Feasible centres are collected explicitly (grid points of
F_r = {d >= r} near its boundary, radial projections onto the boundary of F_r,
circle-circle corners of F_r) and queried with a KD-tree. Sub-cell probes at a
small distance rho from E catch hull growth that is thinner than one grid cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree

from ..errors import PreconditionError
from ..grid import GridField
from .sets import CompactSet

_REL = 1e-12


@dataclass
class HullResult:
    mask: GridField
    r: float
    hausdorff_excess: float
    probe_radius: float = 0.0
    probe_hits: int = 0          # probes at distance probe_radius from E found inside the hull
    n_centers: int = 0

    def equals_set(self, tol: float) -> bool:
        """True when the hull adds nothing beyond E at grid and probe resolution."""
        return self.hausdorff_excess <= tol and self.probe_hits == 0


def _centers(E: CompactSet, r, Z, d, foot, h):
    band_out = (d >= r) & (d < r + 1.5 * h)
    cen = [Z[band_out]]
    band_in = (d < r) & (d > r - 1.5 * h) & (d > 0)
    x, p = Z[band_in], foot[band_in]
    cen.append(p + r * (x - p) / np.abs(x - p))
    cen.append(E.hull_corners(r))
    C = np.concatenate(cen)
    dc = E.distance(C) if C.size else C.real
    return C[dc >= r * (1 - _REL)]


def _check_margin(E, grid, margin, what):
    lo, hi = E.bbox()
    if not grid.contains(lo, hi, margin):
        raise PreconditionError(what)


class _HullContext:
    """Distance data of a grid, reused across radii."""

    def __init__(self, E: CompactSet, grid: GridField):
        self.E, self.grid = E, grid
        self.Z = grid.points()
        self.d, self.foot = E.nearest(self.Z)
        self.h = grid.h
        self.raster = self.d <= self.h / math.sqrt(2)
        self.rho = E.probe_radius(self.h)
        if self.rho > 0:
            P = E.probes(self.rho, self.h / 2)
            self.probes = P
            self.probe_feet = E.nearest(P)[1] if P.size else P
        else:
            self.probes = self.probe_feet = np.empty(0, dtype=complex)

    def hull(self, r: float, probe=True) -> HullResult:
        E, h = self.E, self.h
        _check_margin(E, self.grid, 2 * r, "bbox must contain E with 2r margin")
        C = [_centers(E, r, self.Z, self.d, self.foot, h)]
        if probe and self.probes.size:
            # tangent centres behind each probe: exact for smooth pieces of the boundary of F_r
            p, f = self.probes, self.probe_feet
            x = f + r * (p - f) / np.abs(p - f)
            C.append(x[E.distance(x) >= r * (1 - _REL)])
        C = np.concatenate(C)
        mask = self.raster.copy()
        q = self.d < r
        if C.size:
            tree = cKDTree(np.c_[C.real, C.imag])
            dd, _ = tree.query(np.c_[self.Z[q].real, self.Z[q].imag])
            mask[q] |= dd >= r * (1 - _REL)
        else:
            tree = None
            mask |= q
        excess = float(self.d[mask].max())
        hits = 0
        if probe and self.probes.size:
            if tree is None:
                hits = self.probes.size
            else:
                dq, _ = tree.query(np.c_[self.probes.real, self.probes.imag])
                hits = int(np.count_nonzero(dq >= r * (1 - _REL)))
        return HullResult(self.grid.with_values(mask), float(r), excess,
                          self.rho if probe else 0.0, hits, int(C.size))


def r_convex_hull(E: CompactSet, r: float, grid: GridField, probe: bool = True) -> HullResult:
    if not r > 0:
        raise ValueError("r must be positive")
    _check_margin(E, grid, 2 * r, "bbox must contain E with 2r margin")
    return _HullContext(E, grid).hull(r, probe)


@dataclass
class ConvexityRadius:
    value: float            # midpoint of the final bracket, or r_hi when unbounded
    lo: float
    hi: float
    unbounded: bool = False
    evaluations: list = field(default_factory=list)   # (r, excess, probe_hits)

    def marker(self) -> str:
        return "unbounded (>= r_hi)" if self.unbounded else f"{self.value:.6g}"


def radius_of_convexity(E: CompactSet, grid: GridField, r_lo: float, r_hi: float,
                        tol: float | None = None, threshold: float | None = None) -> ConvexityRadius:
    """Bisection on r of 'conv_r(E) adds nothing beyond 2h (and no sub-cell probe)'."""
    if not 0 < r_lo < r_hi:
        raise ValueError("need 0 < r_lo < r_hi")
    _check_margin(E, grid, 2 * r_hi, "bbox must contain E with 2r margin")
    ctx = _HullContext(E, grid)
    h = grid.h
    tol = h / 4 if tol is None else tol
    thr = 2 * h if threshold is None else threshold
    evals = []

    def ok(r):
        res = ctx.hull(r)
        evals.append((r, res.hausdorff_excess, res.probe_hits))
        return res.equals_set(thr)

    if not ok(r_lo):
        raise PreconditionError("E not r_lo-convex at grid resolution")
    if ok(r_hi):
        return ConvexityRadius(r_hi, r_hi, math.inf, True, evals)
    lo, hi = r_lo, r_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return ConvexityRadius(0.5 * (lo + hi), lo, hi, False, evals)


# sentinel for max_inscribed_disk
UNBOUNDED = None


@dataclass(frozen=True)
class InscribedDisk:
    center: complex
    radius: float
    unbounded: bool = False


def max_inscribed_disk(z: complex, E: CompactSet, r_cap: float, n_radial: int = 24,
                       n_angular: int = 64, n_starts: int = 6) -> InscribedDisk:
    """Largest rho <= r_cap with z in B(x, rho) and B(x, rho) disjoint from E.

    Only centres with |x - z| < r_cap need searching: a larger admissible disk
    always contains one of radius r_cap around some such centre.
    """
    z = complex(z)
    d0 = float(E.distance(np.array([z]))[0])
    scale = max(E.diameter_bound(), abs(z), 1.0)
    if d0 <= 1e-12 * scale:
        raise PreconditionError("z lies in E")
    radii = r_cap * np.geomspace(1e-4, 1.0, n_radial, endpoint=False)
    ang = np.exp(2j * np.pi * np.arange(n_angular) / n_angular)
    X = np.concatenate([[z], (z + radii[:, None] * ang[None]).ravel()])
    dX = E.distance(X)
    feas = np.abs(X - z) < dX
    val = np.where(feas, np.minimum(dX, r_cap), -np.inf)
    if val.max() >= r_cap * (1 - 1e-12):
        i = int(np.argmax(val))
        return InscribedDisk(X[i], r_cap, True)

    def neg(v):
        x = complex(v[0], v[1])
        dx = float(E.distance(np.array([x]))[0])
        gap = abs(x - z) - dx
        return -min(dx, r_cap) + 1e3 * max(gap, 0.0) + 1e3 * max(abs(x - z) - r_cap, 0.0)

    best_x, best_r = z, d0
    for i in np.argsort(-val)[:n_starts]:
        if not np.isfinite(val[i]):
            continue
        x0 = X[i]
        res = minimize(neg, [x0.real, x0.imag], method="Nelder-Mead",
                       options={"xatol": 1e-10 * scale, "fatol": 1e-12 * scale, "maxiter": 4000})
        x = complex(*res.x)
        dx = float(E.distance(np.array([x]))[0])
        if abs(x - z) < dx and dx > best_r:
            best_x, best_r = x, dx
    if best_r >= r_cap * (1 - 1e-12):
        return InscribedDisk(best_x, r_cap, True)
    return InscribedDisk(best_x, best_r, False)
