"""Rectangular grid carrier for scalar fields.

values[i, j] lives at x = lo.real + i*h, y = lo.imag + j*h ('ij' indexing).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridField:
    lo: complex
    hi: complex
    nx: int
    ny: int
    values: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        lo, hi = complex(self.lo), complex(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 nodes per axis")
        w, ht = hi.real - lo.real, hi.imag - lo.imag
        if w <= 0 or ht <= 0:
            raise ValueError("empty bbox")
        hx, hy = w / (self.nx - 1), ht / (self.ny - 1)
        if abs(hx - hy) > 1e-12 * max(hx, hy):
            raise ValueError(f"non-square cells: hx={hx!r}, hy={hy!r}")
        if self.values is not None and self.values.shape[:2] != (self.nx, self.ny):
            raise ValueError(f"values shape {self.values.shape} != ({self.nx}, {self.ny})")

    @classmethod
    def from_spacing(cls, lo: complex, h: float, nx: int, ny: int, values=None):
        lo = complex(lo)
        return cls(lo, lo + complex((nx - 1) * h, (ny - 1) * h), nx, ny, values)

    @classmethod
    def square(cls, center: complex, half_width: float, n: int, values=None):
        c = complex(center)
        return cls(c - complex(half_width, half_width), c + complex(half_width, half_width), n, n, values)

    @classmethod
    def covering(cls, lo: complex, hi: complex, h: float, values=None):
        """Smallest grid with spacing h whose bbox contains [lo, hi], centred on it."""
        lo, hi = complex(lo), complex(hi)
        nx = int(math.ceil((hi.real - lo.real) / h - 1e-9)) + 1
        ny = int(math.ceil((hi.imag - lo.imag) / h - 1e-9)) + 1
        c = (lo + hi) / 2
        start = c - complex((nx - 1) * h, (ny - 1) * h) / 2
        return cls.from_spacing(start, h, nx, ny, values)

    @property
    def h(self) -> float:
        return (self.hi.real - self.lo.real) / (self.nx - 1)

    @property
    def x(self):
        return self.lo.real + self.h * np.arange(self.nx)

    @property
    def y(self):
        return self.lo.imag + self.h * np.arange(self.ny)

    @property
    def shape(self):
        return (self.nx, self.ny)

    def points(self) -> np.ndarray:
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        return X + 1j * Y

    def with_values(self, values) -> "GridField":
        return GridField(self.lo, self.hi, self.nx, self.ny, np.asarray(values))

    def contains(self, lo: complex, hi: complex, margin: float = 0.0) -> bool:
        tol = 1e-9 * max(1.0, abs(self.hi - self.lo))
        return (lo.real - margin >= self.lo.real - tol and lo.imag - margin >= self.lo.imag - tol
                and hi.real + margin <= self.hi.real + tol and hi.imag + margin <= self.hi.imag + tol)

    def margin_to(self, lo: complex, hi: complex) -> float:
        return min(lo.real - self.lo.real, lo.imag - self.lo.imag,
                   self.hi.real - hi.real, self.hi.imag - hi.imag)

    def index_of(self, z):
        z = np.asarray(z, dtype=complex)
        i = np.rint((z.real - self.lo.real) / self.h).astype(int)
        j = np.rint((z.imag - self.lo.imag) / self.h).astype(int)
        return np.clip(i, 0, self.nx - 1), np.clip(j, 0, self.ny - 1)

    def frame(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
        return m

    def to_json(self) -> dict:
        out = {"bbox": [[self.lo.real, self.lo.imag], [self.hi.real, self.hi.imag]],
               "nx": self.nx, "ny": self.ny}
        if self.values is not None:
            out["values"] = np.asarray(self.values).astype(float).tolist()
        return out

    @classmethod
    def from_json(cls, d: dict) -> "GridField":
        (x0, y0), (x1, y1) = d["bbox"]
        vals = d.get("values")
        if vals is not None:
            vals = np.asarray(vals)
        return cls(complex(x0, y0), complex(x1, y1), int(d["nx"]), int(d["ny"]), vals)

    # export

    def pgm_bytes(self, comments=()) -> bytes:
        v = np.asarray(self.values)
        if v.dtype == bool:
            img = np.where(v, 255, 0).astype(np.uint8)
        else:
            v = v.astype(float)
            ok = np.isfinite(v)
            lo, hi = (v[ok].min(), v[ok].max()) if ok.any() else (0.0, 1.0)
            s = (v - lo) / (hi - lo) if hi > lo else np.zeros_like(v)
            img = np.where(ok, np.rint(255 * np.clip(s, 0, 1)), 0).astype(np.uint8)
        # image rows run top to bottom, i.e. decreasing y
        img = img.T[::-1]
        head = "P5\n" + "".join(f"# {c}\n" for c in comments) + f"{self.nx} {self.ny}\n255\n"
        return head.encode() + img.tobytes()

    def csv_rows(self):
        v = np.asarray(self.values)
        Z = self.points()
        for i in range(self.nx):
            for j in range(self.ny):
                val = v[i, j].item() if v.dtype == bool else float(v[i, j])
                yield (repr(float(Z[i, j].real)), repr(float(Z[i, j].imag)), str(val))


def read_pgm(data: bytes) -> np.ndarray:
    """Inverse of GridField.pgm_bytes for the pixel block (returns (nx, ny) uint8)."""
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    pos += 1
    if tokens[0] != b"P5":
        raise ValueError("not a binary PGM")
    nx, ny = int(tokens[1]), int(tokens[2])
    img = np.frombuffer(data[pos:pos + nx * ny], dtype=np.uint8).reshape(ny, nx)
    return img[::-1].T.copy()
