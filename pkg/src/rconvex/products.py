"""Weierstrass prime factors and products with prescribed zeros off a compact set."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .geometry.sets import CompactSet, compact_set_from_json
from .grid import GridField

# |u| below this: log W(u, p) via its power series (no cancellation near f = 1)
_SERIES_R = 0.5
_SERIES_TERMS = 64


def choose_p(q: float) -> int:
    """Integer p with q - 1 <= p < q."""
    if not q >= 1:
        raise ValueError("q must be >= 1")
    return int(math.ceil(q)) - 1


def weierstrass_factor(z, p: int):
    """W(z, p) = (1 - z) exp(z + z^2/2 + ... + z^p/p)."""
    if p < 0:
        raise ValueError("p must be >= 0")
    z = np.asarray(z, dtype=complex)
    s = np.zeros_like(z)
    zk = np.ones_like(z)
    for k in range(1, p + 1):
        zk = zk * z
        s = s + zk / k
    out = (1 - z) * np.exp(s)
    return complex(out) if out.ndim == 0 else out


def log_weierstrass(u, p: int):
    """Principal-free log W(u, p): the series -sum_{k>p} u^k/k for small |u|, direct otherwise.

    Only the real part (log|W|) is branch independent; the imaginary part is
    exact mod 2pi, which is all exp() needs.
    """
    u = np.asarray(u, dtype=complex)
    out = np.empty_like(u)
    small = np.abs(u) <= _SERIES_R
    us = u[small]
    acc = np.zeros_like(us)
    uk = us ** (p + 1)
    for k in range(p + 1, p + 1 + _SERIES_TERMS):
        acc -= uk / k
        uk = uk * us
    out[small] = acc
    ub = u[~small]
    with np.errstate(divide="ignore"):
        lb = np.log(1 - ub + 0j)
    zk = np.ones_like(ub)
    for k in range(1, p + 1):
        zk = zk * ub
        lb = lb + zk / k
    out[~small] = lb
    return out


def factor_bound_Ap(p: int) -> float:
    """A_p = 3e(2 + log(p + 1)): log|W(z, p)| <= A_p |z|^p for |z| >= 1/3."""
    if p < 0:
        raise ValueError("p must be >= 0")
    return 3 * math.e * (2 + math.log(p + 1))


@dataclass
class ZeroData:
    zeros: np.ndarray
    anchors: np.ndarray
    q: float
    p: int
    K: float
    K_tail: float | None = None     # bound on the omitted tail, when an analytic tail is known

    @classmethod
    def from_zeros(cls, zeros, E: CompactSet, q: float, K_tail=None) -> "ZeroData":
        z = np.atleast_1d(np.asarray(zeros, dtype=complex)).ravel()
        if z.size == 0:
            raise ValueError("no zeros")
        d, foot = E.nearest(z)
        scale = max(E.diameter_bound(), 1.0)
        if np.any(d <= 1e-12 * scale):
            raise PreconditionError("zeros must lie off E")
        K = float(np.sum(d ** q))
        if not math.isfinite(K):
            raise PreconditionError("K is not finite")
        return cls(z, foot, float(q), choose_p(q), K, K_tail)

    def check_anchors(self, E: CompactSet, tol: float = 1e-9) -> bool:
        d = E.distance(self.zeros)
        return bool(np.all(np.abs(np.abs(self.zeros - self.anchors) - d) <= tol * np.maximum(1, d)))

    def to_json(self):
        return {"zeros": [[z.real, z.imag] for z in self.zeros],
                "anchors": [[z.real, z.imag] for z in self.anchors],
                "q": self.q, "p": self.p, "K": self.K, "K_tail": self.K_tail}

    @classmethod
    def from_json(cls, d):
        c = lambda a: np.array([complex(x, y) for x, y in a], dtype=complex)
        return cls(c(d["zeros"]), c(d["anchors"]), float(d["q"]), int(d["p"]), float(d["K"]), d.get("K_tail"))


@dataclass
class WeierstrassProduct:
    data: ZeroData
    E: CompactSet

    @property
    def p(self):
        return self.data.p

    def _u(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        zn, en = self.data.zeros, self.data.anchors
        diff = z[:, None] - en[None, :]
        if np.any(diff == 0):
            raise PreconditionError("z coincides with an anchor e_n (pole of u_n)")
        scale = max(self.E.diameter_bound(), 1.0)
        if np.any(self.E.distance(z) <= 1e-12 * scale):
            raise PreconditionError("z lies in E")
        # complex division does not return exactly 1 for a/a
        u = np.where(z[:, None] == zn[None, :], 1 + 0j, (zn - en)[None, :] / diff)
        return z, u

    def _split(self, z):
        """log W summed over |u_n| <= 1 and multiplied directly over |u_n| > 1."""
        z, u = self._u(z)
        near = np.abs(u) > 1     # z close to the anchor: few factors, direct product
        logs = np.where(near, 0, log_weierstrass(np.where(near, 0, u), self.p))
        direct = np.where(near, weierstrass_factor(np.where(near, u, 0), self.p), 1)
        return logs.sum(axis=1), np.prod(direct, axis=1)

    def __call__(self, z):
        s, d = self._split(z)
        out = np.exp(s) * d
        return complex(out[0]) if np.ndim(z) == 0 else out

    def log_abs(self, z):
        s, d = self._split(z)
        with np.errstate(divide="ignore"):
            out = s.real + np.log(np.abs(d))
        return float(out[0]) if np.ndim(z) == 0 else out

    def sample(self, grid: GridField) -> GridField:
        """log|f| on the grid; NaN on E and on anchors, -inf at zeros."""
        Z = grid.points().ravel()
        scale = max(self.E.diameter_bound(), 1.0)
        ok = (self.E.distance(Z) > 1e-12 * scale)
        out = np.full(Z.shape, np.nan)
        out[ok] = self.log_abs(Z[ok])
        return grid.with_values(out.reshape(grid.shape))


def build_product(Z: ZeroData, E: CompactSet) -> WeierstrassProduct:
    if not Z.check_anchors(E):
        raise PreconditionError("anchors are not nearest points of E")
    return WeierstrassProduct(Z, E)


@dataclass
class GrowthCheck:
    ratio: float           # max of log|f| d^q / K over the grid
    bound: float           # 1 + A_p
    argmax: complex

    @property
    def passed(self):
        return self.ratio <= self.bound


def growth_check(f: WeierstrassProduct, grid: GridField) -> GrowthCheck:
    L = f.sample(grid).values.ravel()
    Z = grid.points().ravel()
    d = f.E.distance(Z)
    with np.errstate(invalid="ignore"):
        R = np.where(np.isfinite(L), L * d ** f.data.q / f.data.K, -np.inf)
    i = int(np.argmax(R))
    return GrowthCheck(float(R[i]), 1 + factor_bound_Ap(f.p), complex(Z[i]))


def zero_data_from_json(d: dict) -> tuple[ZeroData, CompactSet]:
    E = compact_set_from_json(d["set"])
    z = np.array([complex(x, y) for x, y in d["zeros"]], dtype=complex)
    return ZeroData.from_zeros(z, E, float(d["q"]), d.get("K_tail")), E
