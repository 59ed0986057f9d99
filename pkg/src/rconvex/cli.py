"""Batch command line: geometry, green, blaschke, spectra.

Exit codes: 0 success, 2 config error, 3 precondition failure, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .config import from_dict, to_dict
from .errors import NumericalError, PreconditionError

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# schemas

_PT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_SET = {
    "type": "object",
    "required": ["type"],
    "properties": {"type": {"enum": ["finite", "segment", "curve", "disks", "mask", "circle_points", "circle", "arc"]}},
}
_GRID = {
    "type": "object",
    "required": ["bbox", "n"],
    "properties": {"bbox": {"type": "array", "items": _PT, "minItems": 2, "maxItems": 2},
                   "n": {"type": "integer", "minimum": 8}},
}
_POS = {"type": "number", "exclusiveMinimum": 0}
_Q = {"type": "number", "minimum": 1}

SCHEMAS = {
    "geometry": {
        "type": "object",
        "required": ["set", "grid"],
        "properties": {
            "set": _SET, "grid": _GRID,
            "r_range": {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2},
            "hull_radii": {"type": "array", "items": _POS},
            "t_values": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "t0": {"type": "object", "properties": {"t_max": _POS, "r": _POS}, "required": ["t_max"]},
            "curvature": {"type": "boolean"},
        },
    },
    "green": {
        "type": "object",
        "required": ["set", "t"],
        "properties": {
            "set": _SET, "t": {"type": "number", "minimum": 0},
            "queries": {"type": "array", "items": _PT},
            "n_sources": {"type": "integer", "minimum": 4},
            "outer_only": {"type": "boolean"},
            "grid": _GRID,
            "ratio": {"type": "object", "properties": {
                "t_values": {"type": "array", "items": _POS},
                "samples": {"type": "integer", "minimum": 4},
                "radius": _POS}},
        },
    },
    "blaschke": {
        "type": "object",
        "required": ["set"],
        "properties": {
            "set": _SET,
            "q": _POS,
            "near": {"type": "object", "required": ["grid"], "properties": {"grid": _GRID, "band_cells": _POS}},
            "nested": {"type": "object", "properties": {"center": _PT, "near_half": _POS, "far_half": _POS,
                                                        "n_near": {"type": "integer", "minimum": 8},
                                                        "n_far": {"type": "integer", "minimum": 8}}},
            "probes": {"type": "array", "items": {
                "type": "object", "required": ["weight", "cut", "cuts", "fixed"],
                "properties": {"weight": {"type": "object", "required": ["name"]},
                               "cut": {"enum": ["inner", "outer"]},
                               "cuts": {"type": "array", "items": _POS, "minItems": 4},
                               "fixed": _POS, "label": {"type": "string"}}}},
            "green_mass": {"type": "object", "properties": {"t_values": {"type": "array", "items": _POS}}},
            "log_moment": {"type": "object", "properties": {"t_values": {"type": "array", "items": _POS},
                                                            "S": _POS}},
            "product": {"type": "object", "required": ["zeros", "q"], "properties": {
                "zeros": {"type": "array", "items": _PT, "minItems": 1}, "q": _Q, "grid": _GRID}},
        },
    },
    "spectra": {
        "type": "object",
        "properties": {
            "kato": {"type": "object", "properties": {
                "count": {"type": "integer", "minimum": 1}, "n_min": {"type": "integer", "minimum": 2},
                "n_max": {"type": "integer", "minimum": 2}, "q_list": {"type": "array", "items": _Q},
                "s2": _POS}},
            "commuting": {"type": "object", "properties": {"eps": _POS, "q_list": {"type": "array", "items": _Q}}},
            "quarter_arc": {"type": "object", "properties": {
                "n_values": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "eps": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}}},
            "q_list": {"type": "array", "items": _Q},
        },
    },
}


def validate(command: str, cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {e.message}") from None


# output helpers

class Output:
    def __init__(self, out_dir: Path, config: dict, command: str, stamp: bool):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
        self.meta = {"command": command, "config_sha256": hashlib.sha256(blob).hexdigest(),
                     "versions": {"rconvex": __version__, "numpy": np.__version__, "scipy": scipy.__version__}}
        if stamp:
            self.meta["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        self.written: list[str] = []

    def _atomic(self, name: str, data: bytes):
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=f".{name}.")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(data)
            os.replace(tmp, self.dir / name)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.written.append(name)

    def header_lines(self):
        lines = [f"config_sha256={self.meta['config_sha256']}"]
        lines.append("versions=" + ",".join(f"{k}:{v}" for k, v in self.meta["versions"].items()))
        if "timestamp" in self.meta:
            lines.append(f"timestamp={self.meta['timestamp']}")
        return lines

    def json(self, name, obj):
        doc = {"meta": self.meta, **obj}
        self._atomic(name, (json.dumps(doc, indent=2, default=_jsonable) + "\n").encode())

    def csv(self, name, rows):
        buf = io.StringIO()
        for line in self.header_lines():
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        for r in rows:
            w.writerow([_fmt(x) for x in r])
        self._atomic(name, buf.getvalue().encode())

    def pgm(self, name, field):
        self._atomic(name, field.pgm_bytes(self.header_lines()))


def _fmt(x):
    if isinstance(x, float) or isinstance(x, np.floating):
        return repr(float(x))
    if isinstance(x, (complex, np.complexfloating)):
        return f"{x.real!r}{x.imag:+}j"
    return x


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serialisable: {type(o)}")


def _jfloat(x):
    return None if x is None or (isinstance(x, float) and math.isinf(x)) else float(x)


def _grid(spec):
    from .grid import GridField
    (x0, y0), (x1, y1) = spec.bbox
    if not (x1 > x0 and y1 > y0):
        raise ConfigError("grid.bbox must be [[xmin, ymin], [xmax, ymax]] with positive extent")
    h = max(x1 - x0, y1 - y0) / (spec.n - 1)
    return GridField.covering(complex(x0, y0), complex(x1, y1), h)


def _set(spec):
    from .geometry.sets import compact_set_from_json
    try:
        return compact_set_from_json(spec)
    except (KeyError, TypeError) as e:
        raise ConfigError(f"set: malformed ({e})") from None


# commands

def cmd_geometry(cfg, out: Output, seed: int):
    from .geometry import (FinitePoints, Triangle, circumradius, global_curvature_radius,
                           omega_t_components, r_convex_hull, radius_of_convexity, t0_estimate)
    E, grid = _set(cfg.set), _grid(cfg.grid)
    res = {"set": E.to_json() if E.kind != "mask" else {"type": "mask"}, "grid_h": grid.h}
    if cfg.r_range is not None:
        lo, hi = cfg.r_range
        r0 = radius_of_convexity(E, grid, lo, hi)
        res["r0"] = {"value": r0.value, "bracket": [r0.lo, _jfloat(r0.hi)], "unbounded": r0.unbounded,
                     "marker": f"r0: {r0.marker()}"}
    if cfg.curvature and isinstance(E, FinitePoints) and E.points.size >= 3:
        rg, tri = global_curvature_radius(E)
        res["r_g"] = _jfloat(rg)
        if E.points.size == 3:
            res["circumradius"] = _jfloat(circumradius(Triangle(*E.points)))
    for r in cfg.hull_radii:
        h = r_convex_hull(E, r, grid)
        out.pgm(f"hull_r{r:g}.pgm", h.mask)
        res.setdefault("hulls", []).append({"r": r, "hausdorff_excess": h.hausdorff_excess,
                                            "probe_hits": h.probe_hits})
    if cfg.t_values:
        rows = [("t", "components", "connected", "t_effective")]
        for t in cfg.t_values:
            c = omega_t_components(E, t, grid)
            rows.append((t, c.count, int(c.connected), c.t_effective))
        out.csv("connectivity.csv", rows)
    if cfg.t0 is not None:
        t0 = t0_estimate(E, grid, cfg.t0.t_max, cfg.t0.r)
        res["t0"] = {"value": t0.value, "method": t0.method, "quarter_r_bound": t0.quarter_r_bound}
    out.json("geometry.json", res)


def cmd_green(cfg, out: Output, seed: int):
    from .geometry import DiskUnion, FinitePoints
    from .potential import green_collocation, green_distance_ratio, omega_samples, vt_lower_bound
    E, t = _set(cfg.set), float(cfg.t)
    q = np.array([complex(*p) for p in cfg.queries], dtype=complex)
    kw = {"outer_only": cfg.outer_only}
    if cfg.n_sources is not None:
        kw["n_sources"] = cfg.n_sources
    if cfg.grid is not None:
        kw["grid"] = _grid(cfg.grid)
    g = green_collocation(E, t, q, **kw)
    out.json("green.json", g.to_json())
    header = ["x", "y", "G"]
    cols = [q.real, q.imag, g.values]
    if isinstance(E, FinitePoints) and q.size and t > 0:
        v = vt_lower_bound(E, t, q)
        header += ["v_t", "G_minus_v_t", "ok"]
        cols += [v, g.values - v, (g.values - v >= -(g.boundary_residual + 1e-6)).astype(int)]
    if isinstance(E, DiskUnion) and len(E.disks) == 1 and t == 0 and q.size:
        dk = E.disks[0]
        exact = np.log(np.abs(q - dk.center) / dk.radius)
        header += ["exact", "abs_error"]
        cols += [exact, np.abs(g.values - exact)]
    rows = [tuple(header)] + [tuple(c[i] for c in cols) for i in range(q.size)]
    out.csv("queries.csv", rows)
    if cfg.ratio is not None:
        lm = cfg.ratio
        rows = [("t", "samples", "infimum", "argmin_x", "argmin_y", "residual")]
        for tt in (lm.t_values if lm.t_values is not None else [t]):
            for n in (lm.samples, 2 * lm.samples):
                z = omega_samples(E, tt, n, lm.radius, seed=seed)
                r = green_distance_ratio(E, tt, z)
                rows.append((tt, n, r.infimum, r.argmin.real, r.argmin.imag, r.green.boundary_residual))
        out.csv("green_distance_ratio.csv", rows)


def cmd_blaschke(cfg, out: Output, seed: int):
    from .potential import green_collocation
    from .products import ZeroData, build_product, growth_check
    from .riesz import (blaschke_integral, divergence_probe, dpow_measure, exterior_log_moment,
                        green_mass, nested_dpow_measures, weight_from_config)
    E = _set(cfg.set)
    q = float(cfg.q)
    near = far = None
    if cfg.near is not None:
        near = dpow_measure(E, q, _grid(cfg.near.grid), cfg.near.band_cells)
    if cfg.nested is not None:
        n = cfg.nested
        lo, hi = E.bbox()
        c = complex(*n.center) if n.center is not None else 0.5 * (lo + hi)
        far = nested_dpow_measures(E, q, c, n.near_half, n.far_half, n.n_near, n.n_far)
    res = {}
    if cfg.probes:
        rows = [("label", "weight", "cut_kind", "cut", "fixed", "value", "classification", "ratio")]
        summary = []
        for p in cfg.probes:
            w = weight_from_config(p.weight)
            mu = near if p.cut == "inner" else far
            if mu is None:
                raise ConfigError(f"probe with {p.cut} cuts needs the "
                                  f"{'near' if p.cut == 'inner' else 'nested'} measure block")
            vals = []
            for cut in p.cuts:
                a, b = (cut, p.fixed) if p.cut == "inner" else (p.fixed, cut)
                vals.append(blaschke_integral(mu, E, w, a, b).value)
            pr = divergence_probe(p.cuts, vals)
            label = p.label or w.name
            for cut, v in zip(p.cuts, vals):
                rows.append((label, w.name, p.cut, cut, p.fixed, v, pr.label, pr.ratio))
            summary.append({"label": label, "classification": pr.label, "ratio": pr.ratio,
                            "exponent": pr.exponent, "summability": w.summability,
                            "summability_value": w.summability_value})
        out.csv("probes.csv", rows)
        res["probes"] = summary
    if cfg.green_mass is not None:
        if far is None:
            raise ConfigError("green_mass needs the nested measure block")
        rows = [("t", "green_mass", "t^-q", "relative_gap", "residual")]
        for t in cfg.green_mass.t_values:
            gm = green_mass(E, t, far, green_collocation(E, t))
            rows.append((t, gm.value, t ** -q, gm.value * t ** q - 1, gm.residual))
        out.csv("green_mass.csv", rows)
    if cfg.log_moment is not None:
        if far is None:
            raise ConfigError("log_moment needs the nested measure block")
        S = cfg.log_moment.S
        rows = [("t", "lower", "log_moment", "upper", "holds_within_5pct")]
        for t in cfg.log_moment.t_values:
            m = exterior_log_moment(far, t)
            lo_b, hi_b = (t + S) ** -q, (t - S) ** -q
            rows.append((t, lo_b, m, hi_b, int(lo_b * 0.95 <= m <= hi_b * 1.05)))
        out.csv("log_moment.csv", rows)
    if cfg.product is not None:
        pc = cfg.product
        Z = ZeroData.from_zeros([complex(*z) for z in pc.zeros], E, pc.q)
        f = build_product(Z, E)
        doc = {"zero_data": Z.to_json(), "f_at_1e6": f(1e6), "max_abs_f_at_zeros": float(np.max(np.abs(f(Z.zeros))))}
        if pc.grid is not None:
            gc = growth_check(f, _grid(pc.grid))
            doc["growth"] = {"ratio": gc.ratio, "bound": gc.bound, "argmax": gc.argmax, "passed": gc.passed}
        out.json("product.json", doc)
    out.json("blaschke.json", res)


def cmd_spectra(cfg, out: Output, seed: int):
    from .spectra import commuting_pair, quarter_arc_report, kato_pair, perturb_and_measure, weight_x_power
    res = {}
    if cfg.kato is not None:
        k = cfg.kato
        qs = k.q_list or cfg.q_list
        n_min, n_max = k.n_min, k.n_max
        if n_min > n_max:
            raise ConfigError("kato.n_min > kato.n_max")
        rows = [("seed", "n", "q", "sum", "schatten_q", "ratio")]
        worst = 0.0
        for i in range(k.count):
            s = seed + i
            n = n_min + i % (n_max - n_min + 1)
            A0, B = kato_pair(s, n, k.s2)
            r = perturb_and_measure(A0, B, [weight_x_power(q) for q in qs], qs)
            for q in qs:
                name = weight_x_power(q)[0]
                rows.append((s, n, q, r.sums[name], r.schatten[q], r.ratio(name, q)))
                worst = max(worst, r.ratio(name, q))
        rows.append(("max", "", "", "", "", worst))
        out.csv("kato.csv", rows)
        res["kato_max_ratio"] = worst
    if cfg.commuting is not None:
        c = cfg.commuting
        A0, B = commuting_pair(c.eps)
        qs = c.q_list or cfg.q_list
        r = perturb_and_measure(A0, B, [weight_x_power(q) for q in qs], qs)
        res["commuting_ratios"] = {f"{q:g}": r.ratio(weight_x_power(q)[0], q) for q in qs}
    if cfg.quarter_arc is not None:
        e = cfg.quarter_arc
        rows = [("n", "sum_phi", "hs_norm_sq", "ratio", "max_distance")]
        ratios = []
        for n in e.n_values:
            r = quarter_arc_report(n, e.eps)
            name = next(iter(r.sums))
            ratios.append(r.ratio(name, 2.0))
            rows.append((n, r.sums[name], r.schatten_pow[2.0], ratios[-1], float(r.distances.max(initial=0))))
        out.csv("quarter_arc.csv", rows)
        res["quarter_arc_ratio_spread"] = (max(ratios) - min(ratios)) / max(ratios) if ratios else None
    out.json("spectra.json", res)


COMMANDS = {"geometry": cmd_geometry, "green": cmd_green, "blaschke": cmd_blaschke, "spectra": cmd_spectra}


def build_parser():
    p = argparse.ArgumentParser(prog="rconvex", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--out", type=Path, default=Path("out"))
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--stamp", action="store_true", help="add a timestamp to output headers")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config: {e}") from None
        validate(args.command, cfg)
        typed = from_dict(args.command, cfg)
        if args.seed is not None:
            typed.seed = args.seed
        resolved = to_dict(typed)       # every default spelled out, hashed into each header
        out = Output(args.out, resolved, args.command, args.stamp)
        out.json("config.resolved.json", {"config": resolved})
        COMMANDS[args.command](typed, out, typed.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as e:
        print(f"precondition failed: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as e:
        # invalid parameter combinations surfaced by the modules
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
