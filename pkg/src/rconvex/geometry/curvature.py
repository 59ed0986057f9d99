from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sets import CompactSet, FinitePoints, SampledCurve

# returned by circumradius for collinear vertices (the circumcircle degenerates to a line)
DEGENERATE = math.inf


@dataclass(frozen=True)
class Triangle:
    a: complex
    b: complex
    c: complex

    def __post_init__(self):
        for k in "abc":
            object.__setattr__(self, k, complex(getattr(self, k)))
        a, b, c = self.a, self.b, self.c
        if not all(np.isfinite([a, b, c])):
            raise ValueError("non-finite coordinates")
        if a == b or b == c or a == c:
            raise ValueError("triangle vertices must be pairwise distinct")

    @property
    def degenerate(self) -> bool:
        return math.isinf(circumradius(self))

    def vertices(self):
        return (self.a, self.b, self.c)


def _circumradius_arrays(z1, z2, z3):
    """Vectorised circumradius, +inf for (numerically) collinear triples."""
    u, v = z1 - z2, z2 - z3
    im = (u * np.conj(v)).imag
    lu, lv, lw = np.abs(u), np.abs(v), np.abs(z1 - z3)
    # sine of the angle at z2; scale free
    flat = np.abs(im) <= 1e-12 * lu * lv
    with np.errstate(divide="ignore", invalid="ignore"):
        R = lu * lv * lw / (2 * np.abs(im))
    return np.where(flat, np.inf, R)


def circumradius(t: Triangle) -> float:
    """R with R^-2 = 4 Im^2((z1-z2)conj(z2-z3)) / |(z1-z2)(z1-z3)(z2-z3)|^2; DEGENERATE if collinear."""
    return float(_circumradius_arrays(np.array(t.a), np.array(t.b), np.array(t.c)))


def _vertex_pool(E) -> np.ndarray:
    if isinstance(E, (FinitePoints, SampledCurve)):
        return E.points
    pts = np.asarray(E, dtype=complex).ravel()
    return pts


def global_curvature_radius(E) -> tuple[float, Triangle | None]:
    """inf of the circumradius over all triangles with vertices in the sample pool.

    Exhaustive over triples; a pair (i, j) is skipped once |z_i - z_j|/2 is not
    below the current minimum, since every triangle on that edge has R >= |z_i - z_j|/2.
    """
    p = _vertex_pool(E)
    n = p.size
    if n < 3:
        raise ValueError("need at least 3 points")
    best, wit = math.inf, None
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            if abs(p[i] - p[j]) / 2 >= best:
                continue
            k = np.arange(j + 1, n)
            R = _circumradius_arrays(p[i], p[j], p[k])
            m = int(np.argmin(R))
            if R[m] < best:
                best, wit = float(R[m]), (i, j, int(k[m]))
    if wit is None:
        return math.inf, None
    return best, Triangle(p[wit[0]], p[wit[1]], p[wit[2]])


def curvature_at(curve: SampledCurve, index: int) -> float:
    """|y''x' - x''y'| / |z'|^3 from fourth-order central differences in the sample index."""
    p = curve.points
    n = p.size
    if curve.closed:
        w = p[(index + np.arange(-2, 3)) % n]
    else:
        if index < 2 or index > n - 3:
            raise ValueError("index needs two neighbours on each side")
        w = p[index - 2:index + 3]
    d1 = (w[0] - 8 * w[1] + 8 * w[3] - w[4]) / 12
    d2 = (-w[0] + 16 * w[1] - 30 * w[2] + 16 * w[3] - w[4]) / 12
    num = abs(d2.imag * d1.real - d2.real * d1.imag)
    return float(num / abs(d1) ** 3)
