"""Batch front end.

Loads a JSON run configuration, builds the requested space, executes the
selected check suites over seeded (or explicitly listed) sample points and
writes a machine-readable report.  Reports are deterministic for a fixed
(config, seed) pair: reals are serialized with 17 significant digits, keys
keep a fixed order, the sampled points are embedded, and only the wall-time
entry varies between runs.
"""

from __future__ import annotations

import argparse
import json
import math
import numbers
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, is_dataclass

import numpy as np

from .diff_engine import JetPoint, check_grad
from .em_field import (
    bianchi_residuals,
    deflection_identity_residuals,
    deflection_set,
    em_tensors,
    maxwell_residuals,
)
from .errors import ConfigError, JetlagError, ParseError
from .geometry import (
    ChristoffelOfPhi,
    DirectMetric,
    FromLagrangian,
    cartan_connection,
    curvature_antisymmetry_residuals,
    curvature_set,
    kronecker_regularity_check,
    metricity_residuals,
    nlc_torsion_free_check,
    ricci_and_scalars,
    sample_points,
    spatial_nlc,
    temporal_christoffel_and_M,
    torsion_set,
)
from .gravity import (
    conservation_residuals,
    einstein_blocks,
    natural_form_checks,
    stress_energy_extract,
)
from .spaces import build_space, space_names

__all__ = ["RunConfig", "RunReport", "load_config", "run_report", "main"]

SCHEMA = "jetlag-report/1"

CHECK_NAMES = (
    "metricity",
    "antisymmetry",
    "torsion",
    "curvature",
    "maxwell",
    "einstein",
    "conservation",
    "natural-form",
    "regularity",
    "grad-check",
)

DEFAULT_TOL = {
    "metricity": 1e-8,
    "antisymmetry": 1e-9,
    "torsion": 1e-9,
    "curvature": 1e-9,
    "maxwell": 1e-7,
    "einstein": 1e-9,
    "conservation": 1e-6,
    "natural-form": 1e-8,
    "regularity": 1e-9,
    "grad-check": 1e-5,
}

DUMP_FAMILIES = ("nlc", "connection", "torsion", "curvature", "ricci",
                 "em", "einstein")

PARAM_SCHEMAS = {
    "flat": {"p": "int >= 1", "n": "int >= 1", "K": "float, optional"},
    "quadratic": {
        "h": "p x p expression texts in t",
        "g": "n x n expression texts in t, x",
        "U": "n x p expression texts in t, x (optional, geometry-inert)",
        "F": "expression text in t, x (optional, geometry-inert)",
        "K": "float, optional",
    },
    "conformal": {
        "h": "p x p expression texts in t",
        "phi": "n x n expression texts in x",
        "variant": "'i' | 'ii' | 'iii'",
        "U": "n x p texts in t, x (variant i)",
        "A": "n texts in x (variant ii)",
        "X": "p texts in t (variant iii)",
        "K": "float, optional",
    },
    "optic": {
        "h": "p x p expression texts in t",
        "phi": "n x n expression texts in x",
        "n": "refraction-index expression text, range [1, oo)",
        "X": "p expression texts in t",
        "K": "float, optional",
    },
    "custom": {
        "h": "p x p expression texts in t",
        "g": "n x n expression texts (exclusive with 'lagrangian')",
        "lagrangian": "expression text (exclusive with 'g')",
        "nlc": "{'kind': 'quadratic' | 'christoffel' | 'user', ...}",
        "K": "float, optional",
    },
}


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration."""

    p: int
    n: int
    space_name: str
    space_params: dict
    seed: int
    count: int
    box: dict
    explicit: tuple   # JetPoints listed verbatim in the config
    checks: tuple
    tolerances: dict
    dump: tuple
    output: str | None
    echo: dict        # normalized config as embedded in the report


@dataclass(frozen=True)
class RunReport:
    """Everything one run produced; see to_json for the serialized layout."""

    config: dict
    space: dict
    rng: dict
    points: list
    checks: dict
    dumps: dict | None
    summary: dict
    wall_time_s: float

    def to_json(self) -> str:
        doc = {
            "schema": SCHEMA,
            "config": self.config,
            "space": self.space,
            "rng": self.rng,
            "points": self.points,
            "checks": self.checks,
            "dumps": self.dumps,
            "summary": self.summary,
            "wall_time_s": self.wall_time_s,
        }
        return _emit(_jsonable(doc), 0) + "\n"


def _err(loc: str, msg: str) -> ConfigError:
    return ConfigError(f"config.{loc}: {msg}")


def _get_int(cfg, key, loc, minimum=None):
    v = cfg.get(key)
    if isinstance(v, bool) or not isinstance(v, numbers.Integral):
        raise _err(loc, f"must be an integer, got {v!r}")
    v = int(v)
    if minimum is not None and v < minimum:
        raise _err(loc, f"must be >= {minimum}, got {v}")
    return v


def _box_pair(v, loc):
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(e, numbers.Real) for e in v)
            or not float(v[0]) < float(v[1])):
        raise _err(loc, f"must be [lo, hi] with lo < hi, got {v!r}")
    return (float(v[0]), float(v[1]))


def load_config(path: str) -> RunConfig:
    """Read and fully validate a run configuration file."""
    try:
        with open(path, "rb") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path!r} must be a JSON object")
    allowed = {"p", "n", "space", "points", "checks", "tolerances",
               "dump", "output"}
    extra = sorted(set(raw) - allowed)
    if extra:
        raise ConfigError(
            f"config: unknown keys {extra}; allowed {sorted(allowed)}"
        )
    for key in ("p", "n", "space", "checks", "points"):
        if key not in raw:
            raise ConfigError(f"config: missing required key {key!r}")

    p = _get_int(raw, "p", "p", minimum=1)
    n = _get_int(raw, "n", "n", minimum=1)

    space = raw["space"]
    if isinstance(space, str):
        name, params = space, {}
    elif isinstance(space, dict):
        if "name" not in space:
            raise _err("space", "map form needs a 'name' key")
        stray = sorted(set(space) - {"name", "params"})
        if stray:
            raise _err("space", f"unknown keys {stray}")
        name = space["name"]
        params = space.get("params", {})
        if not isinstance(params, dict):
            raise _err("space.params", "must be a map")
    else:
        raise _err("space", f"must be a name or a map, got {type(space).__name__}")
    if name not in space_names():
        raise _err("space", f"unknown space {name!r}; available {space_names()}")
    if name == "flat" and not params:
        params = {"p": p, "n": n}

    pts_cfg = raw["points"]
    if not isinstance(pts_cfg, dict):
        raise _err("points", "must be a map")
    stray = sorted(set(pts_cfg) - {"seed", "count", "box", "explicit"})
    if stray:
        raise _err("points", f"unknown keys {stray}")
    seed = _get_int(pts_cfg, "seed", "points.seed", minimum=0) \
        if "seed" in pts_cfg else 0
    count = _get_int(pts_cfg, "count", "points.count", minimum=0) \
        if "count" in pts_cfg else 0
    box_cfg = pts_cfg.get("box", {})
    if not isinstance(box_cfg, dict):
        raise _err("points.box", "must be a map")
    stray = sorted(set(box_cfg) - {"t", "x", "xs"})
    if stray:
        raise _err("points.box", f"unknown keys {stray}")
    box = {
        key: _box_pair(box_cfg[key], f"points.box.{key}")
        if key in box_cfg else (-1.0, 1.0)
        for key in ("t", "x", "xs")
    }
    explicit = []
    for k, entry in enumerate(pts_cfg.get("explicit", [])):
        loc = f"points.explicit[{k}]"
        if not isinstance(entry, dict) or set(entry) != {"t", "x", "xs"}:
            raise _err(loc, "must be a map with exactly the keys t, x, xs")
        try:
            pt = JetPoint.of(entry["t"], entry["x"], entry["xs"])
        except (ValueError, TypeError) as exc:
            raise _err(loc, str(exc)) from None
        if pt.dims != (p, n):
            raise _err(loc, f"dims {pt.dims} do not match (p, n) = ({p}, {n})")
        explicit.append(pt)
    if count == 0 and not explicit:
        raise _err("points", "at least one point is required "
                             "(count >= 1 or a non-empty explicit list)")

    checks_cfg = raw["checks"]
    if not isinstance(checks_cfg, list):
        raise _err("checks", "must be a list")
    seen = set()
    checks = []
    for c in checks_cfg:
        if c not in CHECK_NAMES:
            raise _err("checks", f"unknown check {c!r}; available {list(CHECK_NAMES)}")
        if c in seen:
            raise _err("checks", f"check {c!r} listed twice")
        seen.add(c)
        checks.append(c)
    if "natural-form" in seen and (p <= 2 or n <= 2):
        raise _err("checks", "the natural-form suite needs p > 2 and n > 2, "
                             f"got p={p}, n={n}")

    tol_cfg = raw.get("tolerances", {})
    if not isinstance(tol_cfg, dict):
        raise _err("tolerances", "must be a map")
    tolerances = dict(DEFAULT_TOL)
    for key, v in tol_cfg.items():
        if key not in CHECK_NAMES:
            raise _err("tolerances", f"unknown check {key!r}")
        if isinstance(v, bool) or not isinstance(v, numbers.Real) \
                or not float(v) > 0.0:
            raise _err(f"tolerances.{key}", f"must be a positive real, got {v!r}")
        tolerances[key] = float(v)

    dump_cfg = raw.get("dump", [])
    if not isinstance(dump_cfg, list):
        raise _err("dump", "must be a list")
    for fam in dump_cfg:
        if fam not in DUMP_FAMILIES:
            raise _err("dump", f"unknown family {fam!r}; "
                               f"available {list(DUMP_FAMILIES)}")

    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise _err("output", "must be a path string")

    # building the space realizes every expression field, so parse and
    # dependency errors surface here, named
    ctx = build_space(name, params)
    if (ctx.p, ctx.n) != (p, n):
        raise _err("space", f"space dims ({ctx.p}, {ctx.n}) do not match the "
                            f"declared (p, n) = ({p}, {n})")

    echo = {
        "p": p,
        "n": n,
        "space": {"name": name, "params": params},
        "points": {
            "seed": seed,
            "count": count,
            "box": {k: list(box[k]) for k in ("t", "x", "xs")},
            "explicit": [_point_doc(pt) for pt in explicit],
        },
        "checks": list(checks),
        "tolerances": {c: tolerances[c] for c in checks},
        "dump": list(dump_cfg),
    }
    return RunConfig(
        p=p, n=n, space_name=name, space_params=params, seed=seed,
        count=count, box=box, explicit=tuple(explicit), checks=tuple(checks),
        tolerances=tolerances, dump=tuple(dump_cfg), output=output, echo=echo,
    )


# --------------------------------------------------------------------------
# serialization: 17-significant-digit JSON with a fixed key order
# --------------------------------------------------------------------------

def _jsonable(obj):
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, numbers.Integral):
        return int(obj)
    if isinstance(obj, numbers.Real):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if is_dataclass(obj):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return str(obj)


def _fmt_float(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return f"{v:.17g}"


def _emit(obj, level: int) -> str:
    pad = "  " * level
    inner = "  " * (level + 1)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [
            f"{inner}{json.dumps(str(k), ensure_ascii=True)}: {_emit(v, level + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(rows) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        flat = all(isinstance(v, (int, float)) for v in obj)
        if flat:
            return "[" + ", ".join(_emit(v, 0) for v in obj) + "]"
        rows = [f"{inner}{_emit(v, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(rows) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _point_doc(pt: JetPoint) -> dict:
    return {"t": pt.t.tolist(), "x": pt.x.tolist(), "xs": pt.xs.tolist()}


def _witness_doc(obj):
    if obj is None:
        return None
    if isinstance(obj, JetPoint):
        return _point_doc(obj)
    if isinstance(obj, tuple) and obj and isinstance(obj[0], JetPoint):
        doc = _point_doc(obj[0])
        doc["where"] = _jsonable(list(obj[1:]))
        return doc
    if hasattr(obj, "t") and hasattr(obj, "x") and hasattr(obj, "xs"):
        def val(e):
            return float(getattr(e, "value", e))

        try:
            return {
                "t": [val(e) for e in obj.t],
                "x": [val(e) for e in obj.x],
                "xs": [[val(e) for e in row] for row in obj.xs],
            }
        except Exception:
            pass
    return str(obj)


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".jetlag-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# --------------------------------------------------------------------------
# check runners
# --------------------------------------------------------------------------

@dataclass
class CheckOutcome:
    status: str               # pass | fail | flagged
    max_abs: float | None
    mean_abs: float | None
    measure: str
    detail: dict
    witness: object = None
    error: str | None = None

    def doc(self, tol: float) -> dict:
        return {
            "status": self.status,
            "tolerance": tol,
            "measure": self.measure,
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "detail": self.detail,
            "witness": _witness_doc(self.witness),
            "error": self.error,
        }


def _map_points(pool, fn, pts):
    if pool is None:
        return [fn(pt) for pt in pts]
    return list(pool.map(fn, pts))


def _from_per_point(pts, per_point, tol, measure="max_abs"):
    """Fold per-point {name: residual} maps into one outcome."""
    names = list(per_point[0])
    agg = {nm: max(d[nm] for d in per_point) for nm in names}
    point_max = [max(d.values()) for d in per_point]
    worst = int(np.argmax(point_max))
    max_abs = float(point_max[worst])
    mean_abs = float(np.mean(point_max))
    status = "pass" if max_abs <= tol else "fail"
    return CheckOutcome(
        status=status, max_abs=max_abs, mean_abs=mean_abs, measure=measure,
        detail=agg, witness=pts[worst] if status == "fail" else None,
    )


def _run_metricity(ctx, pts, tol, pool):
    per = _map_points(pool, lambda pt: metricity_residuals(ctx, pt), pts)
    return _from_per_point(pts, per, tol)


def _run_antisymmetry(ctx, pts, tol, pool):
    per = _map_points(pool, lambda pt: curvature_antisymmetry_residuals(ctx, pt), pts)
    return _from_per_point(pts, per, tol)


def _run_curvature(ctx, pts, tol, pool):
    def at(pt):
        out = {}
        for k, v in deflection_identity_residuals(ctx, pt).items():
            out[f"deflection_{k}"] = v
        for k, v in bianchi_residuals(ctx, pt).items():
            out[f"bracket_{k}"] = v
        return out

    return _from_per_point(pts, _map_points(pool, at, pts), tol)


def _run_torsion(ctx, pts, tol, pool):
    verdict = nlc_torsion_free_check(ctx, pts)
    v = float(verdict.max_violation)
    status = "pass" if v <= tol else "fail"
    return CheckOutcome(
        status=status, max_abs=v, mean_abs=v, measure="max_abs",
        detail={"max_violation": v, "torsion_free": bool(verdict.torsion_free)},
        witness=verdict.witness if status == "fail" else None,
    )


def _run_maxwell(ctx, pts, tol, pool):
    rep = maxwell_residuals(ctx, pts)
    detail = {
        nm: {"max_abs": st.max_abs, "mean_abs": st.mean_abs,
             "max_rel": st.max_rel}
        for nm, st in rep.equations.items()
    }
    worst_rel = max(st.max_rel for st in rep.equations.values())
    max_abs = max(st.max_abs for st in rep.equations.values())
    mean_abs = float(np.mean([st.mean_abs for st in rep.equations.values()]))
    status = "pass" if worst_rel <= tol else "fail"
    witness = None
    if status == "fail":
        # aggregation hides the point; rerun pointwise to name it
        per = [max(st.max_rel
                   for st in maxwell_residuals(ctx, [pt]).equations.values())
               for pt in pts]
        witness = pts[int(np.argmax(per))]
    return CheckOutcome(status=status, max_abs=max_abs, mean_abs=mean_abs,
                        measure="max_rel", detail=detail, witness=witness)


def _run_einstein(ctx, pts, tol, pool):
    k = ctx.K

    def at(pt):
        eb = einstein_blocks(ctx, pt)
        out = {
            "tt_symmetry": float(np.max(np.abs(eb.tt - eb.tt.T))),
            "ss_symmetry": float(np.max(np.abs(eb.ss - eb.ss.T))),
            "vv_symmetry": float(np.max(np.abs(
                eb.vv - np.transpose(eb.vv, (2, 3, 0, 1))))),
            "declared_zero_blocks": float(max(np.max(np.abs(eb.zero_ts)),
                                              np.max(np.abs(eb.zero_tv)))),
        }
        if k != 0.0:
            ts = stress_energy_extract(ctx, pt)
            out["extraction_roundtrip"] = float(max(
                np.max(np.abs(k * getattr(ts, f"T_{b}") - getattr(eb, b)))
                for b in ("tt", "ss", "vv", "st", "vt", "sv", "vs")
            ))
        return out

    return _from_per_point(pts, _map_points(pool, at, pts), tol)


def _run_conservation(ctx, pts, tol, pool):
    per = _map_points(pool, lambda pt: conservation_residuals(ctx, [pt], tol), pts)
    detail = {}
    worst = 0.0
    for nm in per[0].LAW_NAMES:
        max_abs = max(r.laws[nm].max_abs for r in per)
        max_rel = max(r.laws[nm].max_rel for r in per)
        worst = max(worst, max_rel)
        detail[nm] = {
            "max_abs": max_abs,
            "mean_abs": float(np.mean([r.laws[nm].mean_abs for r in per])),
            "max_rel": max_rel,
            "status": "pass" if max_rel < tol else "flagged",
        }
    detail["direction_independent"] = all(r.direction_independent for r in per)
    status = "pass" if worst < tol else "flagged"
    max_abs = max(d["max_abs"] for nm, d in detail.items()
                  if isinstance(d, dict))
    mean_abs = float(np.mean([d["mean_abs"] for nm, d in detail.items()
                              if isinstance(d, dict)]))
    return CheckOutcome(status=status, max_abs=max_abs, mean_abs=mean_abs,
                        measure="max_rel", detail=detail)


def _run_natural_form(ctx, pts, tol, pool):
    rep = natural_form_checks(ctx, pts)
    construction = {
        "rewritten_equation": rep.e1prime_residual,
        "trace_recovery": rep.trace_residual,
        "roundtrip": rep.roundtrip_residual,
    }
    hard = [v for v in construction.values() if v is not None]
    detail = {"construction": construction}
    if rep.new_law_residuals:
        detail["rewritten_laws"] = {
            nm: {"max_abs": st.max_abs, "max_rel": st.max_rel}
            for nm, st in rep.new_law_residuals.items()
        }
        hard += [st.max_rel for st in rep.new_law_residuals.values()]
    stated_worst = 0.0
    if rep.identity_residuals:
        detail["identities_stated"] = {
            nm: {"max_abs": st.max_abs, "max_rel": st.max_rel}
            for nm, st in rep.identity_residuals.items()
        }
        stated_worst = max(st.max_rel for st in rep.identity_residuals.values())
    if rep.identity_residuals_derived:
        detail["identities_contracted_cyclic"] = {
            nm: {"max_abs": st.max_abs, "max_rel": st.max_rel}
            for nm, st in rep.identity_residuals_derived.items()
        }
        hard += [st.max_rel
                 for st in rep.identity_residuals_derived.values()]
    worst_hard = max(hard) if hard else 0.0
    if worst_hard > tol:
        status = "fail"
    elif stated_worst > tol:
        # the stated spatial/vertical identity forms carry a defect on
        # direction-dependent metrics; the contracted-cyclic forms above
        # are the ones that must close
        status = "flagged"
    else:
        status = "pass"
    return CheckOutcome(
        status=status, max_abs=float(max(worst_hard, stated_worst)),
        mean_abs=float(np.mean(hard)) if hard else 0.0, measure="max_rel",
        detail=detail, witness=pts[0] if status == "fail" else None,
    )


def _run_regularity(ctx, pts, tol, pool):
    lag = getattr(ctx, "lagrangian", None)
    verdict = kronecker_regularity_check(ctx, pts, lagrangian=lag, tol=tol)
    v = float(verdict.max_deviation)
    status = "pass" if verdict.regular else "fail"
    return CheckOutcome(
        status=status, max_abs=v, mean_abs=v, measure="max_rel",
        detail={"max_deviation": v, "regular": bool(verdict.regular)},
        witness=verdict.witness,
    )


def _grad_fields(ctx):
    out = []
    for idx in np.ndindex(ctx.h.shape):
        out.append((f"h[{idx[0] + 1}][{idx[1] + 1}]", ctx.h[idx]))
    if isinstance(ctx.g_source, DirectMetric):
        for idx in np.ndindex(ctx.g_source.entries.shape):
            out.append((f"g[{idx[0] + 1}][{idx[1] + 1}]",
                        ctx.g_source.entries[idx]))
    elif isinstance(ctx.g_source, FromLagrangian):
        out.append(("L", ctx.g_source.L))
    if isinstance(ctx.nlc, ChristoffelOfPhi):
        for idx in np.ndindex(ctx.nlc.phi.shape):
            out.append((f"phi[{idx[0] + 1}][{idx[1] + 1}]", ctx.nlc.phi[idx]))
    return out


def _run_grad_check(ctx, pts, tol, pool):
    detail = {}
    worst = 0.0
    witness = None
    flagged_nans = []
    named = _grad_fields(ctx)
    reports = _map_points(
        pool, lambda nf: (nf[0], check_grad(nf[1], pts, ctx.diff)), named
    )
    for name, rep in reports:
        detail[name] = rep.max_rel_dev
        if rep.nan_flags:
            flagged_nans.append(name)
        if rep.max_rel_dev > worst:
            worst = rep.max_rel_dev
            witness = pts[rep.worst_point] if rep.worst_point >= 0 else None
    mean_abs = float(np.mean(list(detail.values()))) if detail else 0.0
    status = "pass" if worst <= tol else "fail"
    note = None
    if flagged_nans:
        note = "non-finite finite-difference probes on: " + ", ".join(flagged_nans)
    return CheckOutcome(
        status=status, max_abs=float(worst), mean_abs=mean_abs,
        measure="max_rel", detail=detail,
        witness=witness if status == "fail" else None, error=note,
    )


_RUNNERS = {
    "metricity": _run_metricity,
    "antisymmetry": _run_antisymmetry,
    "torsion": _run_torsion,
    "curvature": _run_curvature,
    "maxwell": _run_maxwell,
    "einstein": _run_einstein,
    "conservation": _run_conservation,
    "natural-form": _run_natural_form,
    "regularity": _run_regularity,
    "grad-check": _run_grad_check,
}


def _dump_families(ctx, pt, families) -> dict:
    out = {"point": _point_doc(pt)}
    blocks = {}
    for fam in families:
        if fam == "nlc":
            Htc, M = temporal_christoffel_and_M(ctx, pt)
            blocks[fam] = {"M": M, "N": spatial_nlc(ctx, pt)}
        elif fam == "connection":
            blocks[fam] = cartan_connection(ctx, pt)
        elif fam == "torsion":
            blocks[fam] = torsion_set(ctx, pt)
        elif fam == "curvature":
            blocks[fam] = curvature_set(ctx, pt)
        elif fam == "ricci":
            ric, sc = ricci_and_scalars(ctx, pt)
            blocks[fam] = {"ricci": ric, "scalars": sc}
        elif fam == "em":
            blocks[fam] = {"deflections": deflection_set(ctx, pt),
                           "em": em_tensors(ctx, pt)}
        elif fam == "einstein":
            blocks[fam] = einstein_blocks(ctx, pt)
    out["families"] = blocks
    return out


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

def run_report(cfg: RunConfig, jobs: int = 1, out_path: str | None = None,
               dump: tuple | None = None):
    """Execute a validated config; returns (RunReport, exit_code).

    Writes the serialized report to ``out_path`` (or the config's output
    path) atomically.  ``jobs`` parallelizes point evaluation without
    touching the numerical content or ordering of the report.
    """
    start = time.perf_counter()
    ctx = build_space(cfg.space_name, cfg.space_params)
    pts = list(cfg.explicit)
    if cfg.count:
        pts += sample_points(ctx, cfg.count, cfg.seed, box_t=cfg.box["t"],
                             box_x=cfg.box["x"], box_xs=cfg.box["xs"])
    families = cfg.dump if dump is None else tuple(dump)
    for fam in families:
        if fam not in DUMP_FAMILIES:
            raise ConfigError(f"unknown dump family {fam!r}; "
                              f"available {list(DUMP_FAMILIES)}")

    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    checks = {}
    try:
        for name in cfg.checks:
            tol = cfg.tolerances[name]
            try:
                outcome = _RUNNERS[name](ctx, pts, tol, pool)
            except JetlagError as exc:
                outcome = CheckOutcome(
                    status="fail", max_abs=None, mean_abs=None,
                    measure="error", detail={},
                    witness=getattr(exc, "witness", None), error=str(exc),
                )
            checks[name] = outcome.doc(tol)
    finally:
        if pool is not None:
            pool.shutdown()

    dumps = _dump_families(ctx, pts[0], families) if families else None
    statuses = [c["status"] for c in checks.values()]
    summary = {
        "n_checks": len(statuses),
        "n_pass": statuses.count("pass"),
        "n_fail": statuses.count("fail"),
        "n_flagged": statuses.count("flagged"),
    }
    report = RunReport(
        config=cfg.echo,
        space={"name": cfg.space_name, "p": ctx.p, "n": ctx.n, "K": ctx.K},
        rng={
            "algorithm": "PCG64",
            "procedure": "numpy.random.default_rng(seed); coordinates drawn "
                         "uniformly per axis over the configured box; points "
                         "with metric condition number above 1e8 rejected",
            "seed": cfg.seed,
        },
        points=[_point_doc(pt) for pt in pts],
        checks=checks,
        dumps=dumps,
        summary=summary,
        wall_time_s=time.perf_counter() - start,
    )
    target = out_path or cfg.output
    if target:
        _atomic_write(target, report.to_json())
    return report, (1 if summary["n_fail"] else 0)


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        echo = dict(cfg.echo)
        echo["points"] = dict(echo["points"], seed=args.seed)
        cfg = RunConfig(**{**cfg.__dict__, "seed": args.seed, "echo": echo})
    dump = tuple(args.dump.split(",")) if args.dump else None
    report, code = run_report(cfg, jobs=args.jobs, out_path=args.out, dump=dump)
    for name, doc in report.checks.items():
        res = doc["max_abs"]
        shown = "n/a" if res is None else f"{res:.3e}"
        print(f"{name}: {doc['status']} (max {shown}, tol {doc['tolerance']:.1e})")
    target = args.out or cfg.output
    if target:
        print(f"report written to {target}")
    return code


def _cmd_validate(args) -> int:
    load_config(args.config)
    print(f"{args.config}: valid")
    return 0


def _cmd_spaces(args) -> int:
    doc = {name: PARAM_SCHEMAS[name] for name in space_names()}
    print(_emit(_jsonable(doc), 0))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="jetlag",
        description="check suites and component dumps for multi-time "
                    "jet-bundle geometries",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a run configuration")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="report path "
                       "(overrides the config's output entry)")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config's point seed")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="worker threads for point evaluation")
    p_run.add_argument("--dump", default=None,
                       help="comma-separated component families to dump")
    p_run.set_defaults(fn=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a configuration file")
    p_val.add_argument("config")
    p_val.set_defaults(fn=_cmd_validate)

    p_sp = sub.add_parser("spaces", help="list built-in spaces and their "
                                         "parameter schemas")
    p_sp.set_defaults(fn=_cmd_spaces)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except JetlagError as exc:
        msg = str(exc)
        excerpt = getattr(exc, "excerpt", None)
        if excerpt is not None:
            msg += f" (offset {getattr(exc, 'offset', '?')} in {excerpt!r})"
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
