"""Planar compact sets.

Points are complex numbers throughout. Every set exposes nearest(z) -> (d, foot)
which is vectorised over arrays of query points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..grid import GridField

# directions used for probe circles around points
_PROBE_DIRS = 256


def as_points(z) -> np.ndarray:
    z = np.asarray(z)
    if z.dtype.kind in "iuf" and z.ndim >= 2 and z.shape[-1] == 2:
        z = z[..., 0] + 1j * z[..., 1]
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite coordinates")
    return z


def _pt_json(z: complex):
    return [float(z.real), float(z.imag)]


def _kd(pts):
    return cKDTree(np.c_[pts.real, pts.imag])


def _circle_pts(centers, radii, n, phase=0.0):
    ang = np.exp(2j * np.pi * (np.arange(n) + phase) / n)
    return (np.asarray(centers)[:, None] + np.asarray(radii)[:, None] * ang[None]).ravel()


def _circle_intersections(c1, r1, c2, r2):
    """Intersection points of circle pairs (vectorised); non-intersecting pairs dropped."""
    D = np.abs(c2 - c1)
    ok = (D > 0) & (D < r1 + r2) & (D > np.abs(r1 - r2))
    c1, r1, c2, r2, D = c1[ok], r1[ok], c2[ok], r2[ok], D[ok]
    u = (c2 - c1) / D
    a = (D ** 2 + r1 ** 2 - r2 ** 2) / (2 * D)
    k = np.sqrt(np.maximum(r1 ** 2 - a ** 2, 0.0))
    m = c1 + a * u
    return np.concatenate([m + 1j * u * k, m - 1j * u * k])


def _segment_foot(z, a, b):
    ab = b - a
    s = np.clip(((z - a) * np.conj(ab)).real / (abs(ab) ** 2), 0.0, 1.0)
    return a + s * ab


class CompactSet:
    """Base class; subclasses implement nearest, bbox and serialization."""

    kind = "abstract"

    def nearest(self, z):
        raise NotImplementedError

    def distance(self, z):
        return self.nearest(z)[0]

    def bbox(self) -> tuple[complex, complex]:
        raise NotImplementedError

    def diameter_bound(self) -> float:
        lo, hi = self.bbox()
        return abs(hi - lo)

    def raster(self, grid: GridField) -> np.ndarray:
        return self.distance(grid.points()) <= grid.h / math.sqrt(2)

    # hooks used by the hull and by the Green solver

    def hull_corners(self, r: float) -> np.ndarray:
        return np.empty(0, dtype=complex)

    def probe_radius(self, h: float) -> float:
        return 1e-3 * h

    def probes(self, rho: float, spacing: float) -> np.ndarray:
        return np.empty(0, dtype=complex)

    def level_set_samples(self, t: float, spacing: float, phase: float = 0.5):
        """Points b on {d = t} (roughly equispaced) and their nearest points in E."""
        raise NotImplementedError(f"{self.kind} has no analytic level sets")

    def boundary_length(self, t: float) -> float:
        raise NotImplementedError

    def source_anchor(self, b, foot):
        """Point of E towards which collocation sources are pulled from b."""
        return foot

    def to_json(self) -> dict:
        raise NotImplementedError

    def _filter_level(self, b, t, rel=1e-9):
        if b.size == 0:
            return b, b
        d, foot = self.nearest(b)
        keep = d >= t * (1 - rel) if t > 0 else np.ones(b.shape, bool)
        return b[keep], foot[keep]


class FinitePoints(CompactSet):
    kind = "finite"

    def __init__(self, points):
        pts = as_points(points).ravel()
        if pts.size == 0:
            raise ValueError("empty set")
        if np.unique(pts).size != pts.size:
            raise ValueError("FinitePoints must be distinct")
        self.points = pts
        self._tree = _kd(pts)

    def __len__(self):
        return self.points.size

    def nearest(self, z):
        z = np.asarray(z, dtype=complex)
        d, i = self._tree.query(np.c_[z.ravel().real, z.ravel().imag])
        return d.reshape(z.shape), self.points[i].reshape(z.shape)

    def bbox(self):
        p = self.points
        return complex(p.real.min(), p.imag.min()), complex(p.real.max(), p.imag.max())

    def separation(self) -> float:
        if self.points.size < 2:
            return math.inf
        d, _ = self._tree.query(np.c_[self.points.real, self.points.imag], k=2)
        return float(d[:, 1].min())

    def hull_corners(self, r):
        pairs = np.array(sorted(self._tree.query_pairs(2 * r)), dtype=int).reshape(-1, 2)
        if len(pairs) == 0:
            return np.empty(0, dtype=complex)
        a, b = self.points[pairs[:, 0]], self.points[pairs[:, 1]]
        rr = np.full(len(a), r)
        return _circle_intersections(a, rr, b, rr)

    def probes(self, rho, spacing):
        return self._filter_level(_circle_pts(self.points, np.full(self.points.size, rho), _PROBE_DIRS), rho, 1e-6)[0]

    def level_set_samples(self, t, spacing, phase=0.5):
        if t <= 0:
            raise ValueError("finite sets have no boundary curve at t = 0")
        n = max(8, int(math.ceil(2 * math.pi * t / spacing)))
        return self._filter_level(_circle_pts(self.points, np.full(self.points.size, t), n, phase), t)

    def boundary_length(self, t):
        return 2 * math.pi * t * self.points.size

    def to_json(self):
        return {"type": "finite", "points": [_pt_json(p) for p in self.points]}


class Segment(CompactSet):
    kind = "segment"

    def __init__(self, a, b):
        self.a, self.b = complex(a), complex(b)
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("non-finite coordinates")
        if self.a == self.b:
            raise ValueError("degenerate segment; use FinitePoints")

    @property
    def length(self):
        return abs(self.b - self.a)

    def nearest(self, z):
        z = np.asarray(z, dtype=complex)
        foot = _segment_foot(z, self.a, self.b)
        return np.abs(z - foot), foot

    def bbox(self):
        a, b = self.a, self.b
        return complex(min(a.real, b.real), min(a.imag, b.imag)), complex(max(a.real, b.real), max(a.imag, b.imag))

    def hull_corners(self, r):
        rr = np.array([r])
        return _circle_intersections(np.array([self.a]), rr, np.array([self.b]), rr)

    def _sides(self, off, spacing, phase):
        u = (self.b - self.a) / self.length
        n = max(2, int(math.ceil(self.length / spacing)))
        s = (np.arange(n) + phase) / n
        base = self.a + s * (self.b - self.a)
        return np.concatenate([base + 1j * u * off, base - 1j * u * off])

    def probes(self, rho, spacing):
        pts = np.concatenate([self._sides(rho, spacing, 0.5),
                              _circle_pts(np.array([self.a, self.b]), np.full(2, rho), _PROBE_DIRS)])
        return self._filter_level(pts, rho, 1e-6)[0]

    def level_set_samples(self, t, spacing, phase=0.5):
        if t <= 0:
            raise ValueError("a segment has no two-sided boundary at t = 0")
        n = max(8, int(math.ceil(2 * math.pi * t / spacing)))
        pts = np.concatenate([self._sides(t, spacing, phase),
                              _circle_pts(np.array([self.a, self.b]), np.full(2, t), n, phase)])
        return self._filter_level(pts, t)

    def boundary_length(self, t):
        return 2 * self.length + 2 * math.pi * t

    def to_json(self):
        return {"type": "segment", "a": _pt_json(self.a), "b": _pt_json(self.b)}


def _polyline_nearest(z, v, closed, tree, seg_len_max, k=8):
    """Exact nearest point on a polyline; KD candidates with a brute-force fallback."""
    shp = z.shape
    z = z.ravel()
    a = v
    b = np.roll(v, -1) if closed else v[1:]
    a = a if closed else v[:-1]
    nseg = a.size
    nv = v.size
    kk = min(k, nv)
    dv, iv = tree.query(np.c_[z.real, z.imag], k=kk)
    dv = dv.reshape(z.size, kk)
    iv = iv.reshape(z.size, kk)
    # segments touching the candidate vertices
    cand = np.concatenate([iv - 1, iv], axis=1)
    if closed:
        cand %= nseg
    else:
        cand = np.clip(cand, 0, nseg - 1)
    A, B = a[cand], b[cand]
    foot = _segment_foot(z[:, None], A, B)
    dist = np.abs(z[:, None] - foot)
    j = dist.argmin(axis=1)
    best = dist[np.arange(z.size), j]
    bfoot = foot[np.arange(z.size), j]
    # the optimal segment has an endpoint within sqrt(best^2 + (L/2)^2) of z
    bad = (dv[:, -1] <= np.sqrt(best ** 2 + seg_len_max ** 2 / 4)) & (kk < nv)
    if bad.any():
        zb = z[bad]
        for s in range(0, zb.size, 2048):
            zz = zb[s:s + 2048, None]
            f = _segment_foot(zz, a[None], b[None])
            dd = np.abs(zz - f)
            jj = dd.argmin(axis=1)
            idx = np.flatnonzero(bad)[s:s + 2048]
            best[idx] = dd[np.arange(jj.size), jj]
            bfoot[idx] = f[np.arange(jj.size), jj]
    return best.reshape(shp), bfoot.reshape(shp)


class SampledCurve(CompactSet):
    kind = "curve"

    def __init__(self, points, closed: bool = False):
        pts = as_points(points).ravel()
        if pts.size < 2:
            raise ValueError("SampledCurve needs at least 2 points")
        nxt = np.roll(pts, -1) if closed else pts[1:]
        cur = pts if closed else pts[:-1]
        if np.any(nxt == cur):
            raise ValueError("repeated consecutive points in SampledCurve")
        self.points = pts
        self.closed = bool(closed)
        self._tree = _kd(pts)
        self._seg_a = cur
        self._seg_b = nxt
        self._seg_len = np.abs(nxt - cur)

    def __len__(self):
        return self.points.size

    @property
    def spacing(self) -> float:
        return float(self._seg_len.max())

    def nearest(self, z):
        z = np.asarray(z, dtype=complex)
        return _polyline_nearest(z, self.points, self.closed, self._tree, self._seg_len.max())

    def bbox(self):
        p = self.points
        return complex(p.real.min(), p.imag.min()), complex(p.real.max(), p.imag.max())

    def hull_corners(self, r):
        pairs = np.array(sorted(self._tree.query_pairs(2 * r)), dtype=int).reshape(-1, 2)
        if len(pairs) == 0:
            return np.empty(0, dtype=complex)
        a, b = self.points[pairs[:, 0]], self.points[pairs[:, 1]]
        rr = np.full(len(a), r)
        return _circle_intersections(a, rr, b, rr)

    def probe_radius(self, h):
        # the hull centres are only approximately sampled along offset segments
        return h / 16

    def arclength_points(self, spacing, phase=0.5):
        """Points at arclength (k + phase)*spacing along the polyline, with unit tangents."""
        a, b, L = self._seg_a, self._seg_b, self._seg_len
        cum = np.concatenate([[0.0], np.cumsum(L)])
        n = max(2, int(math.ceil(cum[-1] / spacing)))
        s = (np.arange(n) + phase) * cum[-1] / n
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, a.size - 1)
        u = (b[k] - a[k]) / L[k]
        return a[k] + (s - cum[k]) * u, u

    def _sides(self, off, spacing, phase):
        base, u = self.arclength_points(spacing, phase)
        return np.concatenate([base + 1j * u * off, base - 1j * u * off])

    def probes(self, rho, spacing):
        pts = np.concatenate([self._sides(rho, spacing, 0.5),
                              _circle_pts(self.points, np.full(self.points.size, rho), 64)])
        return self._filter_level(pts, rho, 1e-6)[0]

    def level_set_samples(self, t, spacing, phase=0.5):
        if t <= 0:
            raise ValueError("use outer-boundary sampling for t = 0")
        n = max(8, int(math.ceil(2 * math.pi * t / spacing)))
        pts = np.concatenate([self._sides(t, spacing, phase),
                              _circle_pts(self.points, np.full(self.points.size, t), n, phase)])
        return self._filter_level(pts, t)

    def boundary_length(self, t):
        extra = 0.0 if self.closed else 2 * math.pi * t
        return 2 * float(self._seg_len.sum()) + extra

    def orientation(self) -> float:
        """Signed area (positive for counter-clockwise closed curves)."""
        p = self.points
        q = np.roll(p, -1)
        return 0.5 * float(np.sum(p.real * q.imag - q.real * p.imag))

    def to_json(self):
        return {"type": "curve", "points": [_pt_json(p) for p in self.points], "closed": self.closed}


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError("disk radius must be positive and finite")
        if not np.isfinite(self.center):
            raise ValueError("non-finite coordinates")

    def contains(self, z, closed=False):
        d = np.abs(np.asarray(z) - self.center)
        return d <= self.radius if closed else d < self.radius

    def to_json(self):
        return {"center": _pt_json(self.center), "radius": float(self.radius)}


class DiskUnion(CompactSet):
    """Union of closed disks."""

    kind = "disks"

    def __init__(self, disks):
        disks = [d if isinstance(d, Disk) else Disk(*d) for d in disks]
        if not disks:
            raise ValueError("empty set")
        self.disks = tuple(disks)
        self.centers = np.array([d.center for d in disks])
        self.radii = np.array([d.radius for d in disks])

    def nearest(self, z):
        z = np.asarray(z, dtype=complex)
        zf = z.ravel()
        d = np.empty(zf.shape)
        foot = np.empty(zf.shape, dtype=complex)
        for s in range(0, zf.size, 1 << 16):
            zz = zf[s:s + (1 << 16), None]
            g = np.abs(zz - self.centers[None]) - self.radii[None]
            j = g.argmin(axis=1)
            rows = np.arange(j.size)
            dd = g[rows, j]
            c = self.centers[j]
            dirs = zz[:, 0] - c
            nrm = np.abs(dirs)
            f = np.where(nrm > 0, c + self.radii[j] * dirs / np.where(nrm > 0, nrm, 1), c + self.radii[j])
            inside = dd <= 0
            f[inside] = zz[inside, 0]
            d[s:s + j.size] = np.maximum(dd, 0.0)
            foot[s:s + j.size] = f
        return d.reshape(z.shape), foot.reshape(z.shape)

    def bbox(self):
        c, r = self.centers, self.radii
        return complex((c.real - r).min(), (c.imag - r).min()), complex((c.real + r).max(), (c.imag + r).max())

    def hull_corners(self, r):
        n = self.centers.size
        if n < 2:
            return np.empty(0, dtype=complex)
        I, J = np.triu_indices(n, 1)
        return _circle_intersections(self.centers[I], self.radii[I] + r, self.centers[J], self.radii[J] + r)

    def probes(self, rho, spacing):
        pts = _circle_pts(self.centers, self.radii + rho, _PROBE_DIRS)
        return self._filter_level(pts, rho, 1e-6)[0]

    def level_set_samples(self, t, spacing, phase=0.5):
        n = max(8, int(math.ceil(2 * math.pi * (self.radii.max() + t) / spacing)))
        pts = _circle_pts(self.centers, self.radii + t, n, phase)
        b, foot = self._filter_level(pts, t) if t > 0 else self._filter_outside(pts)
        return b, foot

    def _filter_outside(self, pts):
        g = np.abs(pts[:, None] - self.centers[None]) - self.radii[None]
        keep = (g >= -1e-12 * self.radii.max()).all(axis=1)
        b = pts[keep]
        return b, b.copy()

    def boundary_length(self, t):
        return float(2 * math.pi * np.sum(self.radii + t))

    def source_anchor(self, b, foot):
        g = np.abs(b[:, None] - self.centers[None]) - self.radii[None]
        return self.centers[g.argmin(axis=1)]

    def to_json(self):
        return {"type": "disks", "disks": [d.to_json() for d in self.disks]}


class RasterMask(CompactSet):
    """A set given by True cells of a boolean grid; distances are to cell centres."""

    kind = "mask"

    def __init__(self, field: GridField):
        if field.values is None:
            raise ValueError("mask grid carries no values")
        v = np.asarray(field.values, dtype=bool)
        if not v.any():
            raise ValueError("empty set")
        self.field = field.with_values(v)
        Z = field.points()
        self.points = Z[v]
        self._tree = _kd(self.points)

    def nearest(self, z):
        z = np.asarray(z, dtype=complex)
        d, i = self._tree.query(np.c_[z.ravel().real, z.ravel().imag])
        return d.reshape(z.shape), self.points[i].reshape(z.shape)

    def bbox(self):
        p = self.points
        return complex(p.real.min(), p.imag.min()), complex(p.real.max(), p.imag.max())

    def probe_radius(self, h):
        return 0.0

    def boundary_length(self, t):
        return float(self.points.size) * self.field.h

    def to_json(self):
        f = self.field
        return {"type": "mask", "bbox": [_pt_json(f.lo), _pt_json(f.hi)], "nx": f.nx, "ny": f.ny,
                "values": np.asarray(f.values, dtype=int).tolist()}


def distance_to_set(z, E: CompactSet):
    """dist(z, E); scalar in, scalar out."""
    d = E.distance(np.asarray(z, dtype=complex))
    return float(d) if np.ndim(d) == 0 else d


def compact_set_from_json(d: dict) -> CompactSet:
    t = d.get("type")
    if t == "finite":
        return FinitePoints(d["points"])
    if t == "segment":
        return Segment(complex(*d["a"]), complex(*d["b"]))
    if t == "curve":
        return SampledCurve(d["points"], bool(d.get("closed", False)))
    if t == "disks":
        return DiskUnion([Disk(complex(*x["center"]), float(x["radius"])) for x in d["disks"]])
    if t == "mask":
        (x0, y0), (x1, y1) = d["bbox"]
        return RasterMask(GridField(complex(x0, y0), complex(x1, y1), int(d["nx"]), int(d["ny"]),
                                    np.asarray(d["values"], dtype=bool)))
    c = complex(*d.get("center", (0.0, 0.0)))
    if t == "circle_points":
        return circle_points(float(d["radius"]), int(d["n"]), c, float(d.get("phase", 0.0)))
    if t == "circle":
        return circle_curve(float(d["radius"]), int(d["n"]), c)
    if t == "arc":
        return arc_curve(float(d["radius"]), float(d["theta0"]), float(d["theta1"]), int(d["n"]), c)
    raise ValueError(f"unknown set type {t!r}")


# common fixtures

def circle_curve(radius: float, n: int, center: complex = 0j, closed=True) -> SampledCurve:
    th = 2 * np.pi * np.arange(n) / n
    return SampledCurve(center + radius * np.exp(1j * th), closed=closed)


def arc_curve(radius: float, theta0: float, theta1: float, n: int, center: complex = 0j) -> SampledCurve:
    th = np.linspace(theta0, theta1, n)
    return SampledCurve(center + radius * np.exp(1j * th), closed=False)


def circle_points(radius: float, n: int, center: complex = 0j, phase: float = 0.0) -> FinitePoints:
    return FinitePoints(center + radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + phase)))
