"""Finite-matrix perturbation experiments: Schatten norms, resolvent profiles,
regularized perturbation determinants and distance sums of perturbed spectra."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from .errors import NumericalError, PreconditionError
from .geometry.sets import CompactSet, SampledCurve, arc_curve

SELF_ADJOINT, NORMAL, UNITARY, GENERAL = "SelfAdjoint", "Normal", "Unitary", "General"
TAGS = (SELF_ADJOINT, NORMAL, UNITARY, GENERAL)


def _opnorm(a):
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


@dataclass
class MatrixOperator:
    entries: np.ndarray
    tag: str = GENERAL

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.entries, dtype=complex))
        if a.shape[0] != a.shape[1]:
            raise ValueError("matrix must be square")
        self.entries = a
        if self.tag not in TAGS:
            raise ValueError(f"unknown tag {self.tag!r}")
        nrm = _opnorm(a)
        ah = a.conj().T
        if self.tag == SELF_ADJOINT and _opnorm(a - ah) > 1e-12 * max(nrm, 1e-300):
            raise ValueError("matrix is not self-adjoint")
        if self.tag == NORMAL and _opnorm(a @ ah - ah @ a) > 1e-10 * max(nrm ** 2, 1e-300):
            raise ValueError("matrix is not normal")
        if self.tag == UNITARY and _opnorm(ah @ a - np.eye(a.shape[0])) > 1e-10:
            raise ValueError("matrix is not unitary")

    @classmethod
    def infer(cls, entries) -> "MatrixOperator":
        for tag in (SELF_ADJOINT, UNITARY, NORMAL):
            try:
                return cls(entries, tag)
            except ValueError:
                pass
        return cls(entries, GENERAL)

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def is_normal(self):
        return self.tag in (SELF_ADJOINT, NORMAL, UNITARY)

    def norm(self):
        return _opnorm(self.entries)

    def eigvals(self) -> np.ndarray:
        try:
            if self.tag == SELF_ADJOINT:
                return linalg.eigvalsh(self.entries).astype(complex)
            return linalg.eigvals(self.entries)
        except (linalg.LinAlgError, ValueError) as e:
            c = np.linalg.cond(self.entries)
            raise NumericalError(f"eigensolver failed ({e}); condition number {c:.3g}") from e


def _op(a) -> MatrixOperator:
    return a if isinstance(a, MatrixOperator) else MatrixOperator.infer(a)


def schatten_power(B, q: float) -> float:
    """sum of s_n^q (no root taken, so ratios against it stay exact)."""
    if not q >= 1:
        raise ValueError("q must be >= 1")
    return math.fsum(linalg.svdvals(_op(B).entries) ** q)


def schatten_norm(B, q: float) -> float:
    if not q >= 1:
        raise ValueError("q must be >= 1")
    s = linalg.svdvals(_op(B).entries)
    if math.isinf(q):
        return float(s.max(initial=0.0))
    return float(np.sum(s ** q) ** (1 / q))


# resolvent profiles

NORMAL_EXACT, POWER_LAW, EXP_LAW, EMPIRICAL = "NormalExact", "PowerLaw", "ExpLaw", "Empirical"


@dataclass
class ResolventProfile:
    kind: str
    params: tuple = ()
    table: np.ndarray | None = None     # rows (x, Psi(x)) for Empirical profiles
    notes: list = field(default_factory=list)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == NORMAL_EXACT:
            out = 1 / x
        elif self.kind == POWER_LAW:
            out = x ** (-self.params[0])
        elif self.kind == EXP_LAW:
            c1, c2 = self.params
            out = c1 / x * np.exp(c2 / x ** 2)
        else:
            xs, ps = self.table[:, 0], self.table[:, 1]
            # log-log interpolation of the sampled (decreasing) profile
            out = np.exp(np.interp(np.log(x), np.log(xs), np.log(ps)))
        return float(out) if out.ndim == 0 else out

    def inverse(self, a: float) -> float:
        """x with Psi(x) = a (Psi is decreasing)."""
        if self.kind == NORMAL_EXACT:
            return 1 / a
        if self.kind == POWER_LAW:
            return a ** (-1 / self.params[0])
        from scipy.optimize import brentq
        lo, hi = 1e-12, 1.0
        while self(hi) > a:
            hi *= 2
        while self(lo) < a:
            lo /= 2
        return brentq(lambda x: self(x) - a, lo, hi, xtol=1e-14)


def _level_points(sigma, x, n_per_circle):
    """Points with d(lambda, sigma) = x: circles of radius x around each eigenvalue, filtered."""
    th = np.exp(2j * np.pi * (np.arange(n_per_circle) + 0.5) / n_per_circle)
    P = (sigma[:, None] + x * th[None, :]).ravel()
    d = np.min(np.abs(P[:, None] - sigma[None, :]), axis=1)
    return P[d >= x * (1 - 1e-12)]


def resolvent_norm(A0, lam) -> float:
    a = _op(A0).entries
    m = a - lam * np.eye(a.shape[0])
    s = linalg.svdvals(m)
    return math.inf if s[-1] == 0 else float(1 / s[-1])


def resolvent_profile(A0, samples: Sequence[float], n_per_circle: int = 256, eig_tol: float = 1e-12,
                      check_normal: bool = True) -> ResolventProfile:
    """Psi(x) = sup{||R(lambda, A0)|| : d(lambda) >= x}; the sup sits on {d = x} (maximum principle)."""
    A0 = _op(A0)
    sigma = A0.eigvals()
    rows, notes = [], []
    scale = max(A0.norm(), 1.0)
    for x in samples:
        if x <= eig_tol * scale:
            notes.append(f"x={x:g} skipped: within eigenvalue tolerance")
            continue
        P = _level_points(sigma, x, n_per_circle)
        rows.append((x, max(resolvent_norm(A0, p) for p in P)))
    table = np.array(rows, dtype=float).reshape(-1, 2)
    if A0.is_normal:
        if check_normal and table.size:
            err = np.max(np.abs(table[:, 1] * table[:, 0] - 1))
            if err > 1e-8:
                raise NumericalError(f"normal profile deviates from 1/x by {err:.3g}")
        return ResolventProfile(NORMAL_EXACT, (), table, notes)
    return ResolventProfile(EMPIRICAL, (), table, notes)


def power_law_exponent(profile: ResolventProfile) -> float:
    t = profile.table
    return float(-np.polyfit(np.log(t[:, 0]), np.log(t[:, 1]), 1)[0])


# perturbed spectra

def weight_x_power(q):
    return (f"x^{q:g}", lambda x: np.asarray(x, dtype=float) ** q)


def weight_split_power(eps: float = 0.5):
    """x^(3+eps) near 0, x^(2-eps) beyond 1."""
    def phi(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 1, x ** (3 + eps), x ** (2 - eps))
    return (f"piecewise(3+{eps:g},2-{eps:g})", phi)


@dataclass
class SpectralReport:
    sigma0: np.ndarray
    sigmaA: np.ndarray
    distances: np.ndarray           # d(lambda) for lambda in sigma(A) with d > atom_tol
    schatten: dict                  # q -> ||B||_{S_q}
    sums: dict                      # weight name -> sum Phi(d)
    atom_tol: float
    schatten_pow: dict = field(default_factory=dict)   # q -> sum s_n^q
    sums_outer: dict | None = None  # restricted to lambda outside a closed spectral curve
    flag: str | None = None

    def ratio(self, name: str, q: float) -> float:
        s = self.schatten_pow.get(q, self.schatten[q] ** q)
        if s == 0:
            return 0.0 if self.sums[name] == 0 else math.inf
        return self.sums[name] / s

    def ratios(self):
        return {(n, q): self.ratio(n, q) for n in self.sums for q in self.schatten}

    def to_json(self):
        c = lambda a: [[float(z.real), float(z.imag)] for z in a]
        return {"sigma0": c(self.sigma0), "sigmaA": c(self.sigmaA), "distances": self.distances.tolist(),
                "schatten": {str(k): v for k, v in self.schatten.items()}, "sums": self.sums,
                "ratios": {f"{n}|q={q:g}": r for (n, q), r in self.ratios().items()},
                "atom_tol": self.atom_tol, "sums_outer": self.sums_outer, "flag": self.flag}

    def csv_rows(self, seed=None):
        rows = [("seed", "weight", "q", "sum", "schatten_q", "ratio")]
        for (n, q), r in self.ratios().items():
            rows.append((seed, n, q, self.sums[n], self.schatten[q], r))
        return rows


def _inside_polygon(z, poly):
    """Winding-number test against a closed polygon."""
    a = poly[None, :] - z[:, None]
    b = np.roll(poly, -1)[None, :] - z[:, None]
    w = np.angle(b / a).sum(axis=1) / (2 * np.pi)
    return np.abs(w) > 0.5


def perturb_and_measure(A0, B, weights: Sequence[tuple[str, Callable]], q_list: Sequence[float],
                        atom_tol: float | None = None, spectrum_set: CompactSet | None = None,
                        outer_curve: SampledCurve | None = None) -> SpectralReport:
    """Eigenvalues of A = A0 + B, distances to sigma(A0) (or to spectrum_set when given) and weighted sums."""
    A0, B = _op(A0), _op(B)
    if A0.n != B.n:
        raise ValueError("dimension mismatch")
    for name, phi in weights:
        if float(np.asarray(phi(np.array([0.0])))[0]) != 0:
            raise PreconditionError(f"weight {name} must vanish at 0")
    s0 = A0.eigvals()
    A = MatrixOperator(A0.entries + B.entries,
                       SELF_ADJOINT if A0.tag == SELF_ADJOINT and B.tag == SELF_ADJOINT else GENERAL)
    sA = A.eigvals()
    if spectrum_set is not None:
        d = spectrum_set.distance(sA)
    else:
        d = np.min(np.abs(sA[:, None] - s0[None, :]), axis=1)
    tol = 1e-8 * max(A0.norm(), 1e-300) if atom_tol is None else atom_tol
    keep = d > tol
    dk = d[keep]
    sums = {name: math.fsum(np.asarray(phi(dk), dtype=float)) for name, phi in weights}
    sch = {q: schatten_norm(B, q) for q in q_list}
    outer, flag = None, None
    if outer_curve is not None:
        out = ~_inside_polygon(sA[keep], outer_curve.points)
        outer = {name: math.fsum(np.asarray(phi(dk[out]), dtype=float)) for name, phi in weights}
        if any(abs(outer[k] - sums[k]) > 1e-12 * max(abs(sums[k]), 1e-300) for k in sums):
            flag = "eigenvalues inside the spectral curve: full and outer sums differ"
    pw = {q: schatten_power(B, q) for q in q_list}
    return SpectralReport(s0, sA, dk, sch, sums, tol, pw, outer, flag)


# perturbation determinants

def _resolvent(A0: MatrixOperator, lam, tol):
    s0 = A0.eigvals()
    if np.min(np.abs(s0 - lam)) <= tol:
        raise PreconditionError("lambda within tolerance of sigma(A0)")
    return linalg.inv(A0.entries - lam * np.eye(A0.n))


def perturbation_determinant(A0, B, lam, q: float, tol: float | None = None) -> complex:
    """det_m(I + T), T = B (A0 - lambda)^-1, m = ceil(q)."""
    A0, B = _op(A0), _op(B)
    tol = 1e-10 * max(A0.norm(), 1.0) if tol is None else tol
    R = _resolvent(A0, complex(lam), tol)
    T = B.entries @ R
    m = int(math.ceil(q))
    g = linalg.det(np.eye(A0.n) + T)
    if m > 1:
        acc, Tk = 0j, np.eye(A0.n, dtype=complex)
        for k in range(1, m):
            Tk = Tk @ (-T)
            acc += np.trace(Tk) / k
        g = g * np.exp(acc)
    return complex(g)


def _log_derivative(A0: MatrixOperator, B: MatrixOperator, lam, m):
    I = np.eye(A0.n)
    R = linalg.inv(A0.entries - lam * I)
    T = B.entries @ R
    dT = T @ R          # d/dlambda (A0 - lambda)^-1 = R^2
    with warnings.catch_warnings():
        # I + T is nearly singular close to a zero; Newton only needs the trace
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        L = np.trace(linalg.solve(I + T, dT))
    Tk = I
    for k in range(1, m):
        L += (-1) ** k * np.trace(Tk @ dT)
        Tk = Tk @ T
    return complex(L)


def determinant_zeros(A0, B, q: float, starts, tol: float = 1e-13, max_iter: int = 100) -> np.ndarray:
    """Newton on log g_q from the given starting points."""
    A0, B = _op(A0), _op(B)
    m = int(math.ceil(q))
    out = []
    for lam in np.asarray(starts, dtype=complex):
        for _ in range(max_iter):
            with np.errstate(divide="ignore", invalid="ignore"):
                L = _log_derivative(A0, B, lam, m)
            if not np.isfinite(L):      # I + T singular: landed on the zero
                break
            if L == 0:
                raise NumericalError(f"Newton stalled at lambda={lam:.6g}")
            step = 1 / L
            lam = lam - step
            if abs(step) <= tol * max(1.0, abs(lam)):
                break
        else:
            raise NumericalError("Newton did not converge")
        out.append(lam)
    return np.array(out)


@dataclass
class GrowthSup:
    sup: float
    argmax: complex
    n_samples: int


def determinant_growth_check(A0, B, q: float, lambda_samples) -> GrowthSup:
    """sup of log|g_q| / (||B||_{S_q}^q ||R(lambda, A0)||^q) over samples."""
    A0, B = _op(A0), _op(B)
    sq = schatten_power(B, q)
    best, arg = -math.inf, None
    for lam in np.asarray(lambda_samples, dtype=complex):
        g = perturbation_determinant(A0, B, lam, q)
        if sq == 0:
            val = 0.0
        else:
            val = math.log(abs(g)) / (sq * resolvent_norm(A0, lam) ** q) if g != 0 else -math.inf
        if val > best:
            best, arg = val, lam
    return GrowthSup(best, arg, len(lambda_samples))


def annulus_samples(sigma, radii, n_per_circle):
    pts = [_level_points(np.asarray(sigma, dtype=complex), r, n_per_circle) for r in radii]
    return np.concatenate(pts)


# Cayley transform

@dataclass
class CayleyPair:
    W: np.ndarray
    U: MatrixOperator
    B: MatrixOperator
    identity_error: float


def cayley_pair(V, zeta: complex, tol: float = 1e-10) -> CayleyPair:
    """W = i(zeta + V)(zeta - V)^-1, U = zeta (W_R + i)^-1 (W_R - i), B = V - U."""
    V = _op(V).entries
    zeta = complex(zeta)
    if abs(abs(zeta) - 1) > 1e-12:
        raise ValueError("zeta must be unimodular")
    n = V.shape[0]
    I = np.eye(n)
    if np.min(np.abs(linalg.eigvals(V) - zeta)) <= 1e-12:
        raise PreconditionError("zeta in sigma(V)")
    Zm = linalg.inv(zeta * I - V)
    W = 1j * (zeta * I + V) @ Zm
    WR = (W + W.conj().T) / 2
    WI = (W - W.conj().T) / 2j
    rhs = linalg.inv(np.conj(zeta) * I - V.conj().T) @ (I - V.conj().T @ V) @ Zm
    err = _opnorm(WI - rhs) / max(_opnorm(W), 1.0)
    if err > tol:
        raise NumericalError(f"imaginary-part identity off by {err:.3g}")
    U = zeta * linalg.solve(WR + 1j * I, WR - 1j * I)
    Uop = MatrixOperator(U, UNITARY)
    return CayleyPair(W, Uop, MatrixOperator.infer(V - U), float(err))


# fixtures

def random_hermitian(n: int, rng) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2


def random_unitary(n: int, rng) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def kato_pair(seed: int, n: int, s2: float = 0.1):
    """Seeded Hermitian A0 and Hermitian B scaled to ||B||_{S_2} = s2."""
    rng = np.random.default_rng(seed)
    A0 = random_hermitian(n, rng)
    B = random_hermitian(n, rng)
    B *= s2 / np.linalg.norm(B)
    return MatrixOperator(A0, SELF_ADJOINT), MatrixOperator(B, SELF_ADJOINT)


def commuting_pair(eps: float = 0.125):
    """diag(0, 1) and diag(eps, -eps): the distance sum equals ||B||^q_{S_q}."""
    return (MatrixOperator(np.diag([0.0, 1.0]), SELF_ADJOINT),
            MatrixOperator(np.diag([eps, -eps]), SELF_ADJOINT))


def jordan_block(n: int, lam: complex = 0) -> np.ndarray:
    return lam * np.eye(n, dtype=complex) + np.eye(n, k=1)


def jordan_sum(blocks: Sequence[tuple[int, complex]]) -> MatrixOperator:
    return MatrixOperator(linalg.block_diag(*[jordan_block(k, lam) for k, lam in blocks]), GENERAL)


def quarter_arc(x):
    return np.exp(0.5j * np.pi * np.asarray(x, dtype=float))


def arc_integral_operator(a0: Callable, K: Callable, n: int):
    """Midpoint discretisation of multiplication by a0 plus the integral operator with kernel K."""
    x = (np.arange(n) + 0.5) / n
    A0 = MatrixOperator(np.diag(a0(x)).astype(complex), NORMAL)
    B = np.asarray(K(x[:, None], x[None, :]), dtype=complex) * np.ones((n, n)) / n
    return A0, MatrixOperator.infer(B)


def smooth_kernel(x, y):
    return 0.5 * (1 + x * y)


def quarter_arc_report(n: int, eps: float = 0.5, kernel: Callable = smooth_kernel) -> SpectralReport:
    """Quarter-circle-arc symbol; distances measured to the arc (the limit spectrum of A0)."""
    A0, B = arc_integral_operator(quarter_arc, kernel, n)
    arc = arc_curve(1.0, 0.0, math.pi / 2, 4097)
    return perturb_and_measure(A0, B, [weight_split_power(eps)], [2.0], spectrum_set=arc)
