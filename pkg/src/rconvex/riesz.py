"""Riesz measures on grids, weight pairs (psi, phi) and Blaschke-type integrals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import PreconditionError
from .geometry.sets import CompactSet
from .geometry.topology import omega_t_components
from .grid import GridField

FINITE, INFINITE, UNKNOWN = "Finite", "Infinite", "Unknown"
CONVERGENT, DIVERGENT = "Convergent", "Divergent"


# weights

@dataclass
class WeightPair:
    name: str
    q: float
    eps: float
    a: float            # phi(x) = x^a on (0, 1]
    b: float            # phi(x) = x^b on (1, inf)
    summability: str = UNKNOWN
    summability_value: float | None = None
    x_star: float = 0.0     # phi(x)/x increases on (0, x_star)

    def psi(self, t):
        return np.asarray(t, dtype=float) ** (-self.q)

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x <= 1, np.power(x, self.a), np.power(x, self.b))

    def phi1(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x <= 1, np.power(x, self.a - 1), np.power(x, self.b - 1))

    def dphi(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x <= 1, self.a * np.power(x, self.a - 1), self.b * np.power(x, self.b - 1))

    def dphi1(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x <= 1, (self.a - 1) * np.power(x, self.a - 2), (self.b - 1) * np.power(x, self.b - 2))

    __call__ = phi

    def to_json(self):
        return {"name": self.name, "q": self.q, "eps": self.eps, "near_exponent": self.a, "far_exponent": self.b,
                "summability": self.summability, "summability_value": self.summability_value, "x_star": self.x_star}


def _x_star(a, b):
    if a <= 1:
        return 0.0
    return math.inf if b > 1 else 1.0


def piecewise_power(name: str, a: float, b: float, q: float, eps: float = 0.0, check_summability=True) -> WeightPair:
    if not (a > 0 and b > 0):
        raise ValueError("exponents must be positive (phi(0) = 0, phi increasing)")
    w = WeightPair(name, float(q), float(eps), float(a), float(b), x_star=_x_star(a, b))
    if check_summability:
        w.summability, w.summability_value = summability_integral(w)
    return w


def weight_dpow_summable(q: float, eps: float) -> WeightPair:
    """psi = t^-q; phi = x^(q+1+eps) near 0 and x^(q-eps) far out. eps = 0 is the borderline case."""
    if not q > 0:
        raise ValueError("q must be positive")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps >= q:
        raise ValueError("eps >= q makes the far-field exponent nonpositive")
    return piecewise_power("summable", q + 1 + eps, q - eps, q, eps)


def weight_finite_set(q: float, eps: float) -> WeightPair:
    """Finite-set weights phi = x^(q+eps) near 0, x^(q-eps) far out."""
    if not q > 0:
        raise ValueError("q must be positive")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps >= q:
        raise ValueError("eps >= q makes the far-field exponent nonpositive")
    if q + eps <= 1:
        raise ValueError("phi(x)/x must increase up to x = 1: need q + eps > 1")
    return piecewise_power("finite_set", q + eps, q - eps, q, eps)


def weight_power(p: float, q: float = 0.0) -> WeightPair:
    return piecewise_power(f"power{p:g}", p, p, q if q > 0 else p, 0.0, check_summability=q > 0)


def weight_from_config(d: dict) -> WeightPair:
    name = d["name"]
    if name == "summable":
        return weight_dpow_summable(d["q"], d.get("eps", 0.0))
    if name == "finite_set":
        return weight_finite_set(d["q"], d.get("eps", 0.0))
    if name == "power":
        return weight_power(d["p"], d.get("q", 0.0))
    if name == "piecewise":
        return piecewise_power("piecewise", d["near"], d["far"], d.get("q", 1.0))
    raise ValueError(f"unknown weight {name!r}")


def _tail_sum(pieces):
    """Extrapolate a series of decade pieces assuming geometric decay."""
    p = np.asarray(pieces, dtype=float)
    if p[-1] == 0:
        return 0.0, 0.0
    rho = p[-1] / p[-2] if p[-2] != 0 else math.inf
    return p.sum(), rho


def summability_integral(w: WeightPair, decades: int = 8, rel=0.10):
    """int_0^1 phi1'(t) psi(t/5) dt + int_1^inf phi'(t) psi(t/3) dt.

    Each integral is accumulated over decades (quad per decade, up to 10^3 at
    the far end) and the remainder extrapolated from the ratio of the last two
    decade contributions. Unknown when extrapolations from the last two
    refinement levels disagree by more than rel.
    """
    def f1(t):
        return float(w.dphi1(t)) * float(w.psi(t / 5))

    def f2(t):
        return float(w.dphi(t)) * float(w.psi(t / 3))

    def decade(f, lo, hi):
        # log substitution keeps quad happy on wide ranges
        return integrate.quad(lambda u: f(math.exp(u)) * math.exp(u), math.log(lo), math.log(hi),
                              limit=200, epsabs=0, epsrel=1e-11)[0]

    near = [decade(f1, 10.0 ** -(k + 1), 10.0 ** -k) for k in range(decades)]
    far = [decade(f2, 10.0 ** k, 10.0 ** (k + 1)) for k in range(3)]
    total = 0.0
    for pieces in (near, far):
        p = np.abs(pieces)
        s, rho = _tail_sum(p)
        if rho >= 1 - 1e-6:
            return INFINITE, None
        est_a = s + p[-1] * rho / (1 - rho)
        # same extrapolation one level earlier
        s0, rho0 = _tail_sum(p[:-1])
        if rho0 >= 1 - 1e-6:
            return UNKNOWN, None
        est_b = s0 + p[-2] * rho0 / (1 - rho0)
        if abs(est_a - est_b) > rel * abs(est_a):
            return UNKNOWN, None
        total += float(np.sum(pieces) + np.sign(pieces[-1]) * p[-1] * rho / (1 - rho))
    return FINITE, total


# measures

@dataclass
class RieszMeasureGrid:
    density: GridField          # (1/2pi) Laplacian per unit area; NaN on masked cells
    mask: np.ndarray            # True = excluded from all integrals
    band: float = 0.0           # exclusion distance around E used when building
    atoms: np.ndarray = field(default_factory=lambda: np.empty(0, complex))
    atom_mass: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def h(self):
        return self.density.h

    def cell_mass(self) -> np.ndarray:
        v = np.where(self.mask, 0.0, np.nan_to_num(self.density.values, nan=0.0))
        return v * self.h ** 2

    @property
    def total_mass_truncated(self) -> float:
        return _fsum(self.cell_mass()) + float(np.sum(self.atom_mass))

    def support(self):
        """(points, masses) of every unmasked cell with nonzero mass, then atoms."""
        m = self.cell_mass()
        keep = ~self.mask & (m != 0)
        return (np.concatenate([self.density.points()[keep], self.atoms]),
                np.concatenate([m[keep], self.atom_mass]))


def atomic_measure(points, masses=None) -> RieszMeasureGrid:
    pts = np.asarray(points, dtype=complex).ravel()
    m = np.ones(pts.size) if masses is None else np.asarray(masses, dtype=float).ravel()
    g = GridField(0j, 1 + 1j, 2, 2, np.zeros((2, 2)))
    return RieszMeasureGrid(g, np.ones((2, 2), bool), 0.0, pts, m)


def _fsum(a) -> float:
    a = np.asarray(a, dtype=float).ravel()
    return math.fsum(a) if a.size > 1_000_000 else float(np.sum(a))


def discrete_riesz(v: GridField, exclusion: np.ndarray | None = None, band: float = 0.0) -> RieszMeasureGrid:
    """Five-point Laplacian / 2pi; border, excluded and non-finite cells (and their stencils) are masked."""
    f = np.asarray(v.values, dtype=float)
    h = v.h
    bad = ~np.isfinite(f)
    if exclusion is not None:
        bad = bad | np.asarray(exclusion, bool)
    fz = np.where(np.isfinite(f), f, 0.0)
    lap = np.full(f.shape, np.nan)
    lap[1:-1, 1:-1] = (fz[2:, 1:-1] + fz[:-2, 1:-1] + fz[1:-1, 2:] + fz[1:-1, :-2] - 4 * fz[1:-1, 1:-1]) / h ** 2
    mask = v.frame() | bad
    nf = ~np.isfinite(f)
    touch = np.zeros_like(nf)
    touch[1:-1, 1:-1] = nf[2:, 1:-1] | nf[:-2, 1:-1] | nf[1:-1, 2:] | nf[1:-1, :-2]
    mask |= touch
    dens = np.where(mask, np.nan, lap / (2 * math.pi))
    return RieszMeasureGrid(v.with_values(dens), mask, band)


def riesz_density_segment(z):
    """(1/2pi) Laplacian of d^-2(z, [0, 1]): 6 y^-4 over the strip, 4|z|^-4 left, 4|z-1|^-4 right."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    if np.any((y == 0) & (x >= 0) & (x <= 1)):
        raise PreconditionError("z on the segment")
    with np.errstate(divide="ignore"):
        out = np.where(x < 0, 4 / np.abs(z) ** 4,
                       np.where(x > 1, 4 / np.abs(z - 1) ** 4, 6 / np.where(y == 0, np.inf, y) ** 4))
    out = out / (2 * math.pi)
    return float(out) if out.ndim == 0 else out


def dpow_measure(E: CompactSet, q: float, grid: GridField, band_cells: float = 5.0,
                 extra_exclusion: np.ndarray | None = None) -> RieszMeasureGrid:
    """Discrete Riesz measure of d^-q(z, E) with a band of band_cells*h around E removed."""
    d = E.distance(grid.points())
    with np.errstate(divide="ignore"):
        v = np.where(d > 0, d ** (-float(q)), np.inf)
    band = band_cells * grid.h
    excl = d <= band
    if extra_exclusion is not None:
        excl |= extra_exclusion
    return discrete_riesz(grid.with_values(v), excl, band)


def nested_grids(center: complex, near_half: float, far_half: float, n_near: int, n_far: int):
    """A fine grid whose interior cells tile a square of far-grid cells exactly.

    Returns (near, far, owned) where owned(z) says whether the fine grid owns a far cell centre.
    """
    if n_far % 2:
        n_far += 1
    H = 2 * far_half / n_far
    far = GridField.from_spacing(center - complex(far_half - H / 2, far_half - H / 2), H, n_far, n_far)
    K = max(1, int(round(near_half / H)))
    W = K * H
    m = n_near - 2
    h = 2 * W / m
    near = GridField.from_spacing(center - complex(W + h / 2, W + h / 2), h, n_near, n_near)
    c = complex(center)

    def owned(z):
        return (np.abs(z.real - c.real) < W) & (np.abs(z.imag - c.imag) < W)

    return near, far, owned


def nested_dpow_measures(E: CompactSet, q: float, center: complex, near_half: float, far_half: float,
                         n_near: int = 1024, n_far: int = 1024, band_cells: float = 5.0):
    near, far, owned = nested_grids(center, near_half, far_half, n_near, n_far)
    mu_n = dpow_measure(E, q, near, band_cells)
    mu_f = dpow_measure(E, q, far, band_cells, extra_exclusion=owned(far.points()))
    # the far band must lie inside the fine grid; then only the fine band is missing
    lo, hi = E.bbox()
    W = 0.5 * ((near.hi - near.lo).real - near.h)
    c = complex(center)
    reach = max(abs(lo.real - c.real), abs(hi.real - c.real), abs(lo.imag - c.imag), abs(hi.imag - c.imag))
    if W - reach <= mu_f.band:
        raise PreconditionError("fine grid too small to cover the coarse exclusion band")
    mu_f.band = mu_n.band
    return [mu_n, mu_f]


def _as_list(mu) -> list:
    return list(mu) if isinstance(mu, (list, tuple)) else [mu]


# integrals

def _cut_weight(d, inner, outer, h, n_cells):
    """Indicator of inner < d < outer, ramped linearly over one cell so that
    cuts falling on grid rows do not count a whole row twice or not at all."""
    hard = ((d > inner) & (d < outer)).astype(float)
    if h <= 0:
        return hard
    w = np.clip((d - inner) / h + 0.5, 0, 1) * np.clip((outer - d) / h + 0.5, 0, 1)
    hard[:n_cells] = w[:n_cells]
    return hard


@dataclass
class BlaschkeResult:
    value: float
    inner_cut: float
    outer_cut: float
    mass_inside: float      # unmasked mass with d <= inner_cut
    mass_outside: float     # unmasked mass with d >= outer_cut
    n_cells: int


def blaschke_integral(mu, E: CompactSet, w, inner_cut: float, outer_cut: float) -> BlaschkeResult:
    """sum of phi(d) * mass over cells with inner_cut < d < outer_cut."""
    if not 0 < inner_cut < outer_cut:
        raise ValueError("need 0 < inner_cut < outer_cut")
    phi = w.phi if isinstance(w, WeightPair) else w
    parts, m_in, m_out, n = [], 0.0, 0.0, 0
    mus = _as_list(mu)
    if max(m.band for m in mus) > inner_cut * (1 + 1e-9):
        raise PreconditionError("inner cut inside the exclusion band")
    big = max(mus, key=lambda m: (m.density.hi - m.density.lo).real)
    lo, hi = E.bbox()
    if math.isfinite(outer_cut) and not big.density.contains(lo, hi, outer_cut):
        raise PreconditionError("grid does not cover the region d < outer_cut")
    for m in mus:
        z, mass = m.support()
        d = E.distance(z)
        wt = _cut_weight(d, inner_cut, outer_cut, m.h if m.density.nx > 2 else 0.0, z.size - m.atoms.size)
        sel = wt > 0
        parts.append(phi(d[sel]) * mass[sel] * wt[sel])
        m_in += _fsum(mass[d <= inner_cut])
        m_out += _fsum(mass[d >= outer_cut])
        n += int(sel.sum())
    if n == 0:
        raise PreconditionError("empty integration region")
    return BlaschkeResult(_fsum(np.concatenate(parts)), inner_cut, outer_cut, m_in, m_out, n)


@dataclass
class LayerCake:
    direct: float
    layer_cake: float
    gap: float      # relative


def layer_cake_check(mu, E: CompactSet, w, t_grid=None, n_levels: int = 2000) -> LayerCake:
    """Compare sum phi(d) dmu with phi(t0) H(t0) + sum_k [phi(t_k+1) - phi(t_k)] H(mid_k), H(t) = mu{d > t}.

    The first term is the phi(0+)*mass convention for weights with phi(0) != 0.
    """
    phi = w.phi if isinstance(w, WeightPair) else w
    z, mass = [], []
    for m in _as_list(mu):
        a, b = m.support()
        z.append(a)
        mass.append(b)
    z, mass = np.concatenate(z), np.concatenate(mass)
    d = E.distance(z)
    pos = d > 0
    d, mass = d[pos], mass[pos]
    direct = _fsum(np.asarray(phi(d), dtype=float) * mass)
    if t_grid is None:
        t_grid = np.linspace(0.0, d.max(), n_levels + 1)
    t = np.sort(np.asarray(t_grid, dtype=float))
    if t[-1] < d.max():
        t = np.append(t, d.max())
    order = np.argsort(d)
    ds, cm = d[order], np.cumsum(mass[order][::-1])[::-1]

    def H(s):
        i = np.searchsorted(ds, s, side="right")
        return np.where(i < ds.size, cm[np.minimum(i, ds.size - 1)], 0.0)

    ph = np.asarray(phi(np.maximum(t, 1e-300)), dtype=float)
    if t[0] == 0:
        ph[0] = float(np.asarray(phi(np.array([0.0]))).ravel()[0]) if np.isfinite(phi(np.array([0.0]))).all() else 0.0
    mid = 0.5 * (t[1:] + t[:-1])
    lc = ph[0] * float(H(np.array([t[0]]))[0]) + _fsum(np.diff(ph) * H(mid))
    gap = abs(direct - lc) / max(abs(direct), 1e-300)
    return LayerCake(direct, lc, gap)


@dataclass
class GreenMass:
    value: float
    residual: float
    warning: str | None = None
    n_cells: int = 0


def green_mass(E: CompactSet, t: float, mu, green) -> GreenMass:
    """int over Omega_t (its unbounded component for outer-only estimates) of G_t(z, inf) dmu."""
    parts, n = [], 0
    for m in _as_list(mu):
        z, mass = m.support()
        d = E.distance(z)
        sel = d > t
        if getattr(green, "outer_only", False) and m.density.nx > 2:
            comps = omega_t_components(E, t, m.density)
            i, j = m.density.index_of(z)
            sel &= comps.labels.values[i, j] == comps.unbounded_label
        g = green.evaluate(z[sel])
        parts.append(g * mass[sel])
        n += int(sel.sum())
    res = float(green.boundary_residual)
    warn = f"green residual {res:.3g} > 1e-3" if res > 1e-3 else None
    return GreenMass(_fsum(np.concatenate(parts)) if parts else 0.0, res, warn, n)


def exterior_log_moment(mu, t: float, center: complex = 0j) -> float:
    """int_{|z - c| > t} log(|z - c|/t) dmu."""
    parts = []
    for m in _as_list(mu):
        z, mass = m.support()
        r = np.abs(z - center)
        sel = r > t
        parts.append(np.log(r[sel] / t) * mass[sel])
    return _fsum(np.concatenate(parts))


@dataclass
class Probe:
    kind: str               # Convergent / Divergent
    rate: str | None        # "log" or "power" for divergent sequences
    ratio: float            # geometric mean ratio of successive differences
    exponent: float | None = None   # growth exponent in 1/cut (near) or cut (far) for power rates

    @property
    def label(self):
        return self.kind if self.rate is None else f"{self.kind}({self.rate})"


def divergence_probe(cuts: Sequence[float], values: Sequence[float], lo: float = 0.85, hi: float = 1.15) -> Probe:
    """Classify truncated integrals by how their successive differences evolve.

    Geometric decay of the differences (ratio < lo) means the integral converges; a
    ratio near 1 is logarithmic growth; a ratio above hi is power growth.
    """
    v = np.asarray(values, dtype=float)
    c = np.asarray(cuts, dtype=float)
    if v.size < 4:
        raise ValueError("need at least 4 refinement levels")
    dv = np.abs(np.diff(v))
    if np.all(dv[-2:] == 0):
        return Probe(CONVERGENT, None, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = dv[1:] / dv[:-1]
    r = r[-2:]
    if np.any(~np.isfinite(r)):
        return Probe(DIVERGENT, "power", math.inf)
    rho = float(np.exp(np.mean(np.log(np.maximum(r, 1e-300)))))
    step = float(np.exp(np.mean(np.abs(np.diff(np.log(c))))))
    if rho < lo:
        return Probe(CONVERGENT, None, rho)
    if rho <= hi:
        return Probe(DIVERGENT, "log", rho)
    return Probe(DIVERGENT, "power", rho, math.log(rho) / math.log(step))


def truncation_sequence(mu, E: CompactSet, w, cuts: Sequence[float], fixed: float, which: str):
    """Blaschke integrals with one cut varying: which='inner' (cuts -> 0) or 'outer' (cuts -> inf)."""
    vals = []
    for c in cuts:
        r = blaschke_integral(mu, E, w, c, fixed) if which == "inner" else blaschke_integral(mu, E, w, fixed, c)
        vals.append(r.value)
    return np.asarray(vals)
