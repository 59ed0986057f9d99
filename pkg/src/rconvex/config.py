"""Typed experiment configs for the command line, with every default spelled out.

Configs arrive as JSON, are schema-checked in cli.validate, then converted here;
dataclasses.asdict of the result is what gets recorded next to the outputs.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import Any, Optional

Point = list  # [x, y]


@dataclass
class GridSpec:
    bbox: list
    n: int


@dataclass
class T0Config:
    t_max: float
    r: Optional[float] = None


@dataclass
class GeometryConfig:
    set: dict
    grid: GridSpec
    r_range: Optional[list] = None
    hull_radii: list = field(default_factory=list)
    t_values: list = field(default_factory=list)
    t0: Optional[T0Config] = None
    curvature: bool = False
    seed: int = 0


@dataclass
class RatioConfig:
    t_values: Optional[list] = None     # None: the green t
    samples: int = 200                  # doubled once for the stability row
    radius: float = 3.0


@dataclass
class GreenConfig:
    set: dict
    t: float
    queries: list = field(default_factory=list)
    n_sources: Optional[int] = None     # None: chosen from the boundary length
    outer_only: bool = False
    grid: Optional[GridSpec] = None
    ratio: Optional[RatioConfig] = None
    seed: int = 0


@dataclass
class NearConfig:
    grid: GridSpec
    band_cells: float = 5.0


@dataclass
class NestedConfig:
    center: Optional[Point] = None      # None: centre of the bounding box of E
    near_half: float = 3.5
    far_half: float = 256.0
    n_near: int = 1024
    n_far: int = 1024


@dataclass
class ProbeConfig:
    weight: dict
    cut: str
    cuts: list
    fixed: float
    label: Optional[str] = None


@dataclass
class GreenMassConfig:
    t_values: list = field(default_factory=lambda: [0.5, 1.0, 2.0])


@dataclass
class LogMomentConfig:
    t_values: list = field(default_factory=lambda: [2.0, 3.0])
    S: float = 1.0


@dataclass
class ProductConfig:
    zeros: list
    q: float
    grid: Optional[GridSpec] = None


@dataclass
class BlaschkeConfig:
    set: dict
    q: float = 2.0
    near: Optional[NearConfig] = None
    nested: Optional[NestedConfig] = None
    probes: list = field(default_factory=list)          # of ProbeConfig
    green_mass: Optional[GreenMassConfig] = None
    log_moment: Optional[LogMomentConfig] = None
    product: Optional[ProductConfig] = None
    seed: int = 0


@dataclass
class KatoConfig:
    count: int = 200
    n_min: int = 5
    n_max: int = 50
    q_list: Optional[list] = None       # None: the suite-wide q_list
    s2: float = 0.1


@dataclass
class CommutingConfig:
    eps: float = 0.125
    q_list: Optional[list] = None


@dataclass
class QuarterArcConfig:
    n_values: list = field(default_factory=lambda: [50, 100, 200])
    eps: float = 0.5


@dataclass
class SpectraConfig:
    q_list: list = field(default_factory=lambda: [1.0, 2.0, 3.0])
    kato: Optional[KatoConfig] = None
    commuting: Optional[CommutingConfig] = None
    quarter_arc: Optional[QuarterArcConfig] = None
    seed: int = 0


# nested blocks and the type each one converts to
_NESTED = {
    GeometryConfig: {"grid": GridSpec, "t0": T0Config},
    GreenConfig: {"grid": GridSpec, "ratio": RatioConfig},
    NearConfig: {"grid": GridSpec},
    ProductConfig: {"grid": GridSpec},
    BlaschkeConfig: {"near": NearConfig, "nested": NestedConfig, "green_mass": GreenMassConfig,
                     "log_moment": LogMomentConfig, "product": ProductConfig},
    SpectraConfig: {"kato": KatoConfig, "commuting": CommutingConfig, "quarter_arc": QuarterArcConfig},
}

COMMAND_CONFIGS = {"geometry": GeometryConfig, "green": GreenConfig, "blaschke": BlaschkeConfig,
                   "spectra": SpectraConfig}


def _build(cls, d: dict):
    known = {f.name for f in fields(cls)}
    kw: dict[str, Any] = {}
    for k, v in d.items():
        if k not in known:
            continue        # unknown keys are tolerated (schemas allow annotations)
        sub = _NESTED.get(cls, {}).get(k)
        kw[k] = _build(sub, v) if sub is not None and v is not None else v
    if cls is BlaschkeConfig and "probes" in kw:
        kw["probes"] = [_build(ProbeConfig, p) for p in kw["probes"]]
    return cls(**kw)


def from_dict(command: str, d: dict):
    return _build(COMMAND_CONFIGS[command], d)


def to_dict(cfg) -> dict:
    assert is_dataclass(cfg)
    return asdict(cfg)
