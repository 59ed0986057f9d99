"""Green's functions of outer neighbourhoods with pole at infinity.

The collocation estimator is a method-of-fundamental-solutions fit
    G(z) = c0 + sum_j c_j log|z - s_j|,   sum_j c_j = 1,
with G = 0 on the boundary of Omega_t = {d > t}. Sources sit halfway between a
boundary point and the part of E it is closest to, i.e. inside the t-thickening.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lstsq
from scipy.stats import qmc

from .errors import DisconnectedDomainError, NumericalError, PreconditionError
from .geometry.sets import CompactSet, Disk, DiskUnion, FinitePoints, SampledCurve
from .geometry.topology import omega_t_components
from .grid import GridField

CLOSED_FORM_DISK = "ClosedFormDisk"
CLOSED_FORM_EXTERIOR_DISK = "ClosedFormExteriorDisk"
FINITE_SET_LOWER_BOUND = "FiniteSetLowerBound"
COLLOCATION = "Collocation"


def green_disk_center_pole(disk: Disk, v) -> float:
    """G_B(c, v) = log(R/|v - c|) for the disk B = B(c, R)."""
    r = abs(complex(v) - disk.center)
    if r > disk.radius * (1 + 1e-12):
        raise PreconditionError("v outside the closed disk")
    if r == 0:
        return math.inf
    return max(math.log(disk.radius / r), 0.0)


def green_exterior_disk(R: float, z):
    """log|z| - log R on |z| >= R (vectorised)."""
    z = np.asarray(z, dtype=complex)
    a = np.abs(z)
    if np.any(a < R * (1 - 1e-12)):
        raise PreconditionError("|z| < R")
    g = np.maximum(np.log(a) - math.log(R), 0.0)
    return float(g) if g.ndim == 0 else g


@dataclass(frozen=True)
class FiniteSetConstants:
    m: tuple
    C: float
    delta: float
    t1: float
    k: float
    N: int


def finite_set_constants(E: FinitePoints) -> FiniteSetConstants:
    p = E.points
    N = p.size
    if N < 2:
        raise ValueError("need at least two points")
    D = np.abs(p[:, None] - p[None])
    np.fill_diagonal(D, 1.0)
    m = np.prod(D, axis=1)
    C = 2.0 ** (N - 1) * float(m.max())
    delta = E.separation()
    return FiniteSetConstants(tuple(float(x) for x in m), C, delta, delta / 2,
                              1 + 2 * C * (2 / delta) ** (N - 1), N)


def vt_lower_bound(E: FinitePoints, t: float, z):
    """v_t(z) = (sum_j log|z - zeta_j| - log t - log C)/N; -inf at points of E."""
    c = finite_set_constants(E)
    if not 0 < t <= c.t1 * (1 + 1e-12):
        raise PreconditionError("outside validity range: need 0 < t <= delta/2")
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore"):
        s = np.log(np.abs(z[..., None] - E.points)).sum(axis=-1)
    v = (s - math.log(t) - math.log(c.C)) / c.N
    return float(v) if v.ndim == 0 else v


@dataclass
class GreenEstimate:
    values: np.ndarray
    queries: np.ndarray
    boundary_residual: float
    method: str
    sources: np.ndarray = field(default_factory=lambda: np.empty(0, complex))
    coefficients: np.ndarray = field(default_factory=lambda: np.empty(0))
    constant: float = 0.0
    t: float = 0.0
    n_clamped: int = 0          # values in [-residual, 0) reported as 0
    n_violations: int = 0       # values below -residual (left as computed)
    condition: float = 1.0
    rank: int = 0
    n_collocation: int = 0
    outer_only: bool = False

    def evaluate(self, z) -> np.ndarray:
        """Raw expansion c0 + sum c_j log|z - s_j| (no clamping)."""
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.empty(flat.shape)
        step = max(1, 4_000_000 // max(1, self.sources.size))
        for s in range(0, flat.size, step):
            zz = flat[s:s + step, None]
            out[s:s + step] = self.constant + np.log(np.abs(zz - self.sources[None])) @ self.coefficients
        return out.reshape(z.shape)

    __call__ = evaluate

    def to_json(self) -> dict:
        return {
            "method": self.method, "t": self.t, "boundary_residual": self.boundary_residual,
            "constant": self.constant, "condition": self.condition, "rank": self.rank,
            "n_collocation": self.n_collocation, "outer_only": self.outer_only,
            "n_clamped": self.n_clamped, "n_violations": self.n_violations,
            "sources": [[float(s.real), float(s.imag), float(c)] for s, c in zip(self.sources, self.coefficients)],
            "queries": [[float(q.real), float(q.imag), float(v)] for q, v in zip(self.queries, self.values)],
        }

    @classmethod
    def from_json(cls, d: dict) -> "GreenEstimate":
        src = np.asarray(d.get("sources", []), dtype=float).reshape(-1, 3)
        q = np.asarray(d.get("queries", []), dtype=float).reshape(-1, 3)
        return cls(q[:, 2], q[:, 0] + 1j * q[:, 1], d["boundary_residual"], d["method"],
                   src[:, 0] + 1j * src[:, 1], src[:, 2], d.get("constant", 0.0), d.get("t", 0.0),
                   d.get("n_clamped", 0), d.get("n_violations", 0), d.get("condition", 1.0),
                   d.get("rank", 0), d.get("n_collocation", 0), d.get("outer_only", False))


def _finish(est: GreenEstimate, z) -> GreenEstimate:
    z = np.asarray(z, dtype=complex).ravel()
    v = est.evaluate(z) if z.size else np.empty(0)
    res = est.boundary_residual
    neg = v < 0
    bad = v < -res
    clamp = neg & ~bad
    v = np.where(clamp, 0.0, v)
    est.values, est.queries = v, z
    est.n_clamped, est.n_violations = int(clamp.sum()), int(bad.sum())
    return est


def exterior_disk_estimate(R: float, queries, center: complex = 0j) -> GreenEstimate:
    q = np.asarray(queries, dtype=complex).ravel()
    if np.any(np.abs(q - center) < R * (1 - 1e-12)):
        raise PreconditionError("query inside the disk")
    est = GreenEstimate(np.empty(0), q, 0.0, CLOSED_FORM_EXTERIOR_DISK, np.array([complex(center)]),
                        np.array([1.0]), -math.log(R))
    return _finish(est, q)


def lower_bound_estimate(E: FinitePoints, t: float, queries) -> GreenEstimate:
    """v_t packaged as an expansion: sources at the points with weights 1/N."""
    c = finite_set_constants(E)
    vt_lower_bound(E, t, 2 * abs(E.points).max() + 1)   # validity check
    est = GreenEstimate(np.empty(0), np.empty(0, complex), 0.0, FINITE_SET_LOWER_BOUND, E.points.copy(),
                        np.full(c.N, 1.0 / c.N), -(math.log(t) + math.log(c.C)) / c.N, t=t)
    est = _finish(est, queries)
    est.n_clamped = est.n_violations = 0
    est.values = est.evaluate(est.queries)
    return est


def default_grid(E: CompactSet, t: float, n: int = 400) -> GridField:
    lo, hi = E.bbox()
    span = max((hi - lo).real, (hi - lo).imag, 1e-9)
    half = span / 2 + 2 * t + 0.1 * span + 1e-3
    half *= 1 + 4.0 / n
    return GridField.square((lo + hi) / 2, half, n)


def _closed_curve_inradius(curve: SampledCurve, b, n_in, s_max, iters=40):
    """Largest s with dist(b + s n_in, curve) >= 0.95 s, by bisection (vectorised).

    The slack matters: next to a polyline vertex the exact tangent disk is tiny.
    """
    lo = np.zeros(b.size)
    hi = np.full(b.size, s_max)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = curve.distance(b + mid * n_in) >= 0.95 * mid
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


class _Boundary:
    """Boundary samples and matching source positions for one of the supported geometries."""

    def __init__(self, E: CompactSet, t: float, outer_only: bool, comps=None, grid=None):
        self.E, self.t, self.outer_only = E, t, outer_only
        self.comps, self.grid = comps, grid
        self.closed_t0 = isinstance(E, SampledCurve) and E.closed and t == 0
        if t == 0 and not (self.closed_t0 or isinstance(E, DiskUnion)):
            raise PreconditionError("t = 0 needs a closed curve (outer side) or a union of disks")
        if self.closed_t0 and not outer_only:
            raise DisconnectedDomainError("domain disconnected: a closed curve at t = 0 has two sides")

    def length(self):
        E = self.E
        if self.closed_t0:
            return float(E._seg_len.sum())
        return E.boundary_length(self.t)

    def sample(self, spacing, phase):
        E, t = self.E, self.t
        if self.closed_t0:
            b, tang = E.arclength_points(spacing, phase)
            sgn = 1.0 if E.orientation() > 0 else -1.0
            n_out = -1j * tang * sgn
            return b, b - n_out     # anchor: a point on the inner side
        b, foot = E.level_set_samples(t, spacing, phase)
        anchor = E.source_anchor(b, foot)
        if self.outer_only and self.comps is not None and b.size:
            u = b - anchor
            u = u / np.where(np.abs(u) > 0, np.abs(u), 1)
            probe = b + 2 * self.grid.h * u
            i, j = self.grid.index_of(probe)
            keep = self.comps.labels.values[i, j] == self.comps.unbounded_label
            b, anchor = b[keep], anchor[keep]
        return b, anchor

    def sources(self, spacing):
        b, anchor = self.sample(spacing, 0.5)
        if self.closed_t0:
            n_in = anchor - b
            lo, hi = self.E.bbox()
            depth = _closed_curve_inradius(self.E, b, n_in, abs(hi - lo))
            return b + 0.5 * depth * n_in, 0.5 * depth
        return anchor + 0.5 * (b - anchor), 0.5 * np.abs(b - anchor)


def green_collocation(E: CompactSet, t: float, queries=(), n_sources: int | None = None,
                      n_collocation: int | None = None, outer_only: bool = False,
                      grid: GridField | None = None, residual_tol: float = 1e-3,
                      max_sources: int = 1500) -> GreenEstimate:
    """Least-squares MFS estimate of G_{Omega_t}(z, inf).

    outer_only restricts Omega_t to its unbounded component (for sets that
    split the plane, e.g. a closed curve, whose exterior sheet is wanted).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    comps = None
    if not (isinstance(E, SampledCurve) and E.closed and t == 0):
        grid = default_grid(E, t) if grid is None else grid
        comps = omega_t_components(E, t, grid)
        if comps.count > 1 and not outer_only:
            raise DisconnectedDomainError(f"domain disconnected: Omega_t has {comps.count} components")
    bd = _Boundary(E, t, outer_only, comps, grid)
    L = bd.length()
    if n_sources is None:
        _, depth = bd.sources(L / 400)
        kept = depth.size * L / 400
        n_sources = int(np.clip(math.ceil(3 * kept / np.median(depth)), 32, max_sources))
        spacing_s = kept / n_sources * (L / kept)
    else:
        spacing_s = L / n_sources
    src, _ = bd.sources(spacing_s)
    n_sources = src.size
    if n_collocation is None:
        n_collocation = 2 * n_sources
    b_col, _ = bd.sample(spacing_s * n_sources / n_collocation, 0.0)
    b_chk, _ = bd.sample(spacing_s * n_sources / n_collocation, 0.5)
    if b_col.size < n_sources + 1:
        raise NumericalError("fewer collocation points than unknowns")

    # sum c_j = 1 eliminated through the last source
    Lg = np.log(np.abs(b_col[:, None] - src[None]))
    A = np.empty((b_col.size, n_sources))
    A[:, 0] = 1.0
    A[:, 1:] = Lg[:, :-1] - Lg[:, -1:]
    rhs = -Lg[:, -1]
    x, _, rank, sv = lstsq(A, rhs, cond=1e-12, lapack_driver="gelsd")
    c = np.empty(n_sources)
    c[:-1] = x[1:]
    c[-1] = 1.0 - x[1:].sum()
    est = GreenEstimate(np.empty(0), np.empty(0, complex), 0.0, COLLOCATION, src, c, float(x[0]), float(t),
                        condition=float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf, rank=int(rank),
                        n_collocation=int(b_col.size), outer_only=bool(outer_only))
    res = max(np.abs(est.evaluate(b_col)).max(), np.abs(est.evaluate(b_chk)).max() if b_chk.size else 0.0)
    est.boundary_residual = float(res)
    if not res <= residual_tol:
        raise NumericalError(f"collocation residual {res:.3g} > {residual_tol:g} "
                             f"(rank {rank}/{n_sources}, condition {est.condition:.3g})")
    q = np.asarray(queries, dtype=complex).ravel()
    if q.size:
        dq = E.distance(q)
        if np.any(dq < t * (1 - 1e-9) - 1e-12):
            raise PreconditionError("queries must lie in Omega_t")
    return _finish(est, q)


# sampling of Omega_t

def level_set_points(E: CompactSet, t: float, n: int) -> np.ndarray:
    """n roughly equispaced points on {d = t}."""
    L = E.boundary_length(t)
    b, _ = E.level_set_samples(t, L / (8 * n))
    if b.size == 0:
        return b
    idx = np.linspace(0, b.size, n, endpoint=False).astype(int)
    return b[idx]


def omega_samples(E: CompactSet, t: float, n: int, radius: float, center: complex | None = None,
                  seed: int = 0, level_fraction: float = 0.5, min_distance: float | None = None) -> np.ndarray:
    """Deterministic sample of Omega_t ∩ B(center, radius).

    A fraction of the points lies on the level set {d = min_distance} (default t),
    where ratios such as G/d are smallest; the rest is a scrambled Sobol sample.
    """
    lo, hi = E.bbox()
    center = (lo + hi) / 2 if center is None else complex(center)
    tmin = t if min_distance is None else min_distance
    n_lev = int(round(level_fraction * n)) if tmin > 0 else 0
    out = [level_set_points(E, tmin, n_lev)] if n_lev else []
    need = n - n_lev
    sob = qmc.Sobol(2, scramble=True, seed=seed)
    got = []
    while need > 0:
        u = sob.random(1 << max(6, int(math.ceil(math.log2(4 * need + 1)))))
        w = center + radius * np.sqrt(u[:, 0]) * np.exp(2j * np.pi * u[:, 1])
        w = w[E.distance(w) > tmin]
        got.append(w[:need])
        need -= got[-1].size
    out.extend(got)
    return np.concatenate(out) if out else np.empty(0, complex)


@dataclass
class GreenDistanceRatio:
    infimum: float
    argmin: complex
    ratios: np.ndarray
    samples: np.ndarray
    green: GreenEstimate


def green_distance_ratio(E: CompactSet, t: float, samples, green: GreenEstimate | None = None,
                   **kw) -> GreenDistanceRatio:
    """inf over samples of G_{t/5}(z, inf) (|z| + 1) / d(z)."""
    z = np.asarray(samples, dtype=complex).ravel()
    d = E.distance(z)
    if np.any(d < t * (1 - 1e-9)):
        raise PreconditionError("samples must lie in Omega_t")
    if green is None:
        green = green_collocation(E, t / 5, **kw)
    g = green.evaluate(z)
    if np.any(g <= -green.boundary_residual) or np.any(g <= 0):
        raise NumericalError("collocation failure: nonpositive Green value")
    r = g * (np.abs(z) + 1) / d
    i = int(np.argmin(r))
    return GreenDistanceRatio(float(r[i]), complex(z[i]), r, z, green)
