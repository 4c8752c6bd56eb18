"""Command-line driver: classification, integration, detours, holonomy,
linearization, portraits, pendulum windings, tree counts, and the catalog.

System arguments accept either a JSON file path or a ``catalog:`` URI such
as ``catalog:galerkin_symmetric?a=2``.  All reports are emitted as JSON with
every float printed to 17 significant digits, so identical invocations are
byte-identical; SVG output carries a timestamp comment unless
``--reproducible`` is passed.  Exit codes: 0 success, 2 validation error,
3 numerical failure.  Errors go to stderr as single-line JSON.
"""

from __future__ import annotations

import argparse
import cmath
import concurrent.futures
import datetime
import json
import math
import os
import sys
import urllib.parse
from pathlib import Path

from blowup.algebra import BivariatePolynomial, Chart, PlanarField, to_charts
from blowup.equilibria import (
    EquilibriumRecord,
    classify_spectrum,
    find_equilibria,
    small_divisor_scan,
)
from blowup.flow import (
    Arc,
    FlowError,
    IntegrationConfig,
    Line,
    Termination,
    TimePath,
    integrate_path,
)
from blowup.hamiltonian import PolynomialHamiltonian, hamiltonian_field, pendulum_loop_windings
from blowup.holonomy import (
    DetourError,
    approach_blowup,
    blowup_star,
    holonomy_multiplier,
    masuda_detour,
)
from blowup.normalform import NormalFormError, conjugacy_residual, poincare_linearize
from blowup.scenarios import catalog_get, catalog_names, tree_count

__all__ = ["main", "run_command", "parse_system_file", "sample_portrait"]


class CliValidationError(ValueError):
    """Bad input: exits with code 2."""


class ParseError(CliValidationError):
    pass


class DegreeZeroError(CliValidationError):
    pass


# ------------------------------------------------------------- serialization

def _fmt_float(x: float) -> str:
    if x != x:
        return "NaN"
    if x in (float("inf"), float("-inf")):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    if x == int(x) and abs(x) < 1e16:
        return format(x, ".1f")
    return format(x, ".17g")


def dump_json(value, indent: int = 0) -> str:
    """Deterministic JSON with floats at 17 significant digits."""
    pad = " " * indent
    if value is None:
        return "null"
    if value is True or value is False:
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _fmt_float(value)
    if isinstance(value, complex):
        return f"[{_fmt_float(value.real)}, {_fmt_float(value.imag)}]"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        items = [f'{json.dumps(str(k))}: {dump_json(v)}' for k, v in value.items()]
        return "{" + ", ".join(items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(dump_json(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)!r}")


def _complex_pair(val: complex) -> list[float]:
    return [float(val.real), float(val.imag)]


# ---------------------------------------------------------------- system I/O

def parse_system_file(path: str) -> PlanarField | PolynomialHamiltonian:
    """Load a planar field or polynomial Hamiltonian from a JSON spec file.

    Field files carry ``f`` and ``g`` coefficient tables of rows
    [j, k, re, im]; Hamiltonian files carry ``H`` (same rows) and an optional
    ``level`` pair.  Coefficients must be numeric; zero rows are pruned.
    """
    p = Path(path)
    if not p.exists():
        raise ParseError(f"no such file: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise ParseError(f"invalid JSON in {path}: {err}") from None
    if not isinstance(doc, dict):
        raise ParseError("system file must hold a JSON object")
    if "H" in doc:
        H = _poly_from_rows(doc["H"], "H")
        level = doc.get("level", [0.0, 0.0])
        if not (isinstance(level, list) and len(level) == 2):
            raise ParseError("level must be a [re, im] pair")
        if H.degree < 2:
            raise DegreeZeroError("Hamiltonian degree below 2")
        return PolynomialHamiltonian(H, complex(level[0], level[1]))
    if "f" not in doc or "g" not in doc:
        raise ParseError("system file needs either f and g, or H")
    params = doc.get("parameters", {})
    if any(not isinstance(v, (int, float)) for v in params.values()):
        raise ParseError("user files must carry fully numeric parameters")
    f = _poly_from_rows(doc["f"], "f")
    g = _poly_from_rows(doc["g"], "g")
    if f.is_zero and g.is_zero:
        raise DegreeZeroError("both components are zero")
    fld = PlanarField(f, g)
    if fld.degree_m < 1:
        raise DegreeZeroError("field degree is zero")
    return fld


def _poly_from_rows(rows, name: str) -> BivariatePolynomial:
    if not isinstance(rows, list):
        raise ParseError(f"{name} must be a list of [j, k, re, im] rows")
    entries = []
    for i, row in enumerate(rows):
        if not (isinstance(row, list) and len(row) == 4):
            raise ParseError(f"{name}[{i}] must be [j, k, re, im]")
        j, k, re, im = row
        if not (isinstance(j, int) and isinstance(k, int)) or j < 0 or k < 0:
            raise ParseError(f"{name}[{i}]: exponents must be nonnegative integers, got {j}, {k}")
        if not all(isinstance(v, (int, float)) for v in (re, im)):
            raise ParseError(f"{name}[{i}]: coefficients must be numeric")
        entries.append((j, k, complex(re, im)))
    return BivariatePolynomial.from_coeffs(entries)


def resolve_system(spec: str) -> tuple[PlanarField | PolynomialHamiltonian, dict]:
    """Resolve a `catalog:name?p=v` URI or a JSON file path."""
    if spec.startswith("catalog:"):
        rest = spec[len("catalog:"):]
        name, _, query = rest.partition("?")
        params = {}
        for key, vals in urllib.parse.parse_qs(query).items():
            try:
                params[key] = float(vals[-1]) if "." in vals[-1] or "e" in vals[-1].lower() else int(vals[-1])
            except ValueError:
                raise CliValidationError(f"parameter {key}={vals[-1]!r} is not numeric")
        try:
            entry = catalog_get(name, params)
        except KeyError as err:
            raise CliValidationError(str(err)) from None
        except ValueError as err:
            raise CliValidationError(str(err)) from None
        meta = {"source": "catalog", "name": name, "parameters": params,
                "suggested_start": entry.suggested_start}
        return entry.system, meta
    return parse_system_file(spec), {"source": "file", "path": spec}


def _as_field(system) -> PlanarField:
    if isinstance(system, PolynomialHamiltonian):
        return hamiltonian_field(system)
    return system


def load_path_file(path: str) -> TimePath:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ParseError(f"cannot read path file {path}: {err}") from None
    segs = []
    for i, seg in enumerate(doc.get("segments", [])):
        kind = seg.get("type")
        if kind == "line":
            segs.append(Line(_pair(seg["from"], f"segments[{i}].from"),
                             _pair(seg["to"], f"segments[{i}].to")))
        elif kind == "arc":
            segs.append(Arc(_pair(seg["center"], f"segments[{i}].center"),
                            float(seg["radius"]), float(seg["angle_from"]),
                            float(seg["angle_to"])))
        else:
            raise ParseError(f"segments[{i}]: type must be line or arc")
    if not segs:
        raise ParseError("path file has no segments")
    return TimePath(tuple(segs), int(doc.get("cycles", 1)))


def _pair(val, what: str) -> complex:
    if not (isinstance(val, list) and len(val) == 2):
        raise ParseError(f"{what} must be a [re, im] pair")
    return complex(val[0], val[1])


# ------------------------------------------------------------------ reports

def record_json(rec: EquilibriumRecord) -> dict:
    out = {
        "chart": rec.chart,
        "location": [_complex_pair(rec.location[0]), _complex_pair(rec.location[1])],
    }
    if rec.eigenvalues is not None:
        out["eigenvalues"] = [_complex_pair(rec.eigenvalues[0]), _complex_pair(rec.eigenvalues[1])]
        out["spectral_quotient"] = (
            _complex_pair(rec.spectral_quotient) if rec.spectral_quotient is not None else None
        )
        out["semisimple"] = rec.semisimple
        out["domain"] = rec.domain
        out["resonance"] = {"kind": rec.resonance.kind, "order": rec.resonance.order}
        out["rational_quotient"] = list(rec.rational_quotient) if rec.rational_quotient else None
        out["notes"] = list(rec.notes)
    return out


def classified_equilibria(system) -> tuple:
    fld = _as_field(system)
    csys = to_charts(fld)
    recs = find_equilibria(csys, "All")
    recs = [classify_spectrum(csys, r) for r in recs]
    recs.sort(key=lambda r: (r.chart, round(r.location[1].real, 9), round(r.location[1].imag, 9),
                             round(r.location[0].real, 9)))
    return csys, recs


def cmd_classify(args) -> int:
    system, meta = resolve_system(args.system)
    _, recs = classified_equilibria(system)
    rows = [record_json(r) for r in recs]
    if args.small_divisors:
        for rec, row in zip(recs, rows):
            if rec.eigenvalues is not None and rec.domain != "Degenerate":
                row["small_divisor_scan"] = small_divisor_scan(rec.eigenvalues, args.small_divisor_order)
    doc = {"system": meta_public(meta), "equilibria": rows}
    _emit(args, doc)
    return 0


def meta_public(meta: dict) -> dict:
    out = {k: v for k, v in meta.items() if k != "suggested_start"}
    return out


def cmd_integrate(args) -> int:
    system, meta = resolve_system(args.system)
    csys = to_charts(_as_field(system))
    path = load_path_file(args.path)
    start = _parse_start(args.start)
    cfg = _config_from(args)
    traj = integrate_path(csys, args.chart, start, path, cfg)
    lines = ["s,re_t,im_t,chart,re_c1,im_c1,re_c2,im_c2"]
    for smp in traj.samples:
        lines.append(",".join([
            format(smp.s, ".17g"),
            format(smp.t.real, ".17g"), format(smp.t.imag, ".17g"),
            smp.chart,
            format(smp.coords[0].real, ".17g"), format(smp.coords[0].imag, ".17g"),
            format(smp.coords[1].real, ".17g"), format(smp.coords[1].imag, ".17g"),
        ]))
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if traj.terminated_reason in (Termination.STEP_UNDERFLOW, Termination.DIVERGED):
        raise FlowError(f"integration terminated: {traj.terminated_reason.value}")
    return 0


def _parse_start(text: str) -> tuple[complex, complex]:
    bits = [float(v) for v in text.split(",")]
    if len(bits) == 2:
        return complex(bits[0], 0.0), complex(bits[1], 0.0)
    if len(bits) == 4:
        return complex(bits[0], bits[1]), complex(bits[2], bits[3])
    raise CliValidationError("--start needs 2 or 4 comma-separated reals")


def _config_from(args) -> IntegrationConfig:
    return IntegrationConfig(
        rel_tol=getattr(args, "rel_tol", 1e-10),
        abs_tol=getattr(args, "abs_tol", 1e-12),
        max_step=getattr(args, "max_step", 0.05),
        singularity_radius=getattr(args, "singularity_radius", 1e-4),
    )


def _select_equilibrium(system, index: int) -> tuple:
    sys, recs = classified_equilibria(system)
    if not (0 <= index < len(recs)):
        raise CliValidationError(f"--eq index {index} outside 0..{len(recs) - 1}")
    return sys, recs[index]


def cmd_holonomy(args) -> int:
    system, meta = resolve_system(args.system)
    csys, rec = _select_equilibrium(system, args.eq)
    est = holonomy_multiplier(csys, rec, base_radius=args.radius)
    doc = {
        "system": meta_public(meta),
        "equilibrium": record_json(rec),
        "multiplier": _complex_pair(est.multiplier),
        "fiber_radii": list(est.fiber_radii),
        "richardson_order": est.richardson_order,
        "predicted": _complex_pair(est.predicted) if est.predicted is not None else None,
        "deviation": est.deviation,
    }
    _emit(args, doc)
    return 0


def _auto_approach(csys, rec, meta, args):
    start = None
    if args.start:
        start = _parse_start(args.start)
    elif meta.get("suggested_start"):
        start = meta["suggested_start"]
    if start is None:
        raise CliValidationError("need --start for file-based systems")
    cfg = IntegrationConfig(
        rel_tol=getattr(args, "rel_tol", 1e-12),
        abs_tol=getattr(args, "abs_tol", 1e-14),
        singularity_radius=args.ball,
    )
    approach = approach_blowup(csys, start, rec, horizon=args.horizon, cfg=cfg)
    if approach.terminated_reason != Termination.ENTERED_SINGULARITY_BALL:
        raise DetourError(
            f"approach did not reach the singularity ball ({approach.terminated_reason.value}); "
            "adjust --start/--horizon/--ball"
        )
    return approach


def cmd_detour(args) -> int:
    system, meta = resolve_system(args.system)
    csys, rec = _select_equilibrium(system, args.eq)
    approach = _auto_approach(csys, rec, meta, args)
    radius = args.radius
    if radius is None:
        from blowup.holonomy import _fit_blowup_time
        T, _ = _fit_blowup_time(csys, approach, rec)
        radius = 0.5 * abs(approach.end.t - T)
    report = masuda_detour(csys, rec, approach, loop_radius=radius, cycles=args.cycles,
                           cfg=IntegrationConfig(rel_tol=1e-12, abs_tol=1e-14, max_step=0.02))
    doc = {
        "system": meta_public(meta),
        "equilibrium": record_json(rec),
        "cycles": report.cycles,
        "loop_radius": radius,
        "start_state": [_complex_pair(report.start_state[0]), _complex_pair(report.start_state[1])],
        "end_state": [_complex_pair(report.end_state[0]), _complex_pair(report.end_state[1])],
        "discrepancy": report.discrepancy,
        "relative_discrepancy": report.discrepancy / report.fiber_start_magnitude,
        "windings": report.windings,
        "closed": report.closed,
        "chart": report.chart,
        "T_estimate": _complex_pair(report.T_estimate),
        "t_fit_coefficient": _complex_pair(report.t_fit_coefficient),
        "a_u": _complex_pair(report.a_u),
        "closure_threshold": report.closure_threshold,
        "per_cycle_discrepancy": list(report.per_cycle_discrepancy),
    }
    if report.closed and args.star:
        doc["star"] = [
            {"direction": _complex_pair(b["direction"]), "kind": b["kind"]}
            for b in blowup_star(csys, rec, report)
        ]
    _emit(args, doc)
    return 0


def cmd_linearize(args) -> int:
    system, meta = resolve_system(args.system)
    csys, rec = _select_equilibrium(system, args.eq)
    tr = poincare_linearize(csys, rec, order_N=args.order)
    res = conjugacy_residual(csys, rec, tr, ball_radius=args.ball_radius)
    doc = {
        "system": meta_public(meta),
        "equilibrium": record_json(rec),
        "order_N": tr.order_N,
        "eigenvalues": [_complex_pair(tr.eigenvalues[0]), _complex_pair(tr.eigenvalues[1])],
        "forward": [_poly_rows(tr.components[0]), _poly_rows(tr.components[1])],
        "inverse": [_poly_rows(tr.inverse_components[0]), _poly_rows(tr.inverse_components[1])],
        "min_divisor": tr.min_divisor,
        "max_coefficient": tr.max_coefficient,
        "residual": {
            "radii": list(res["radii"]),
            "max_residuals": list(res["max_residuals"]),
            "fitted_order": res["fitted_order"],
        },
    }
    _emit(args, doc)
    return 0


def _poly_rows(p: BivariatePolynomial) -> list:
    return [[j, k, float(c.real), float(c.imag)] for (j, k), c in sorted(p.terms.items())]


def cmd_pendulum(args) -> int:
    coeffs = [float(v) for v in args.g.split(",")]
    rep = pendulum_loop_windings(coeffs, loop_radius=args.radius)
    doc = {
        "force_coefficients": coeffs,
        "w_t": rep["w_t"],
        "w_v": rep["w_v"],
        "w_w": rep["w_w"],
        "leaves": rep["leaves"],
        "stabilized_radius": rep["radius"],
    }
    _emit(args, doc)
    return 0


def cmd_trees(args) -> int:
    if args.max_m < 2:
        raise CliValidationError("--max-m must be at least 2")
    rows = [(m, tree_count(m)) for m in range(2, args.max_m + 1)]
    if args.json:
        _emit(args, {"counts": [{"m": m, "count": c} for m, c in rows]})
    else:
        for m, c in rows:
            print(f"{m:3d} {c}")
    return 0


def cmd_catalog(args) -> int:
    if args.action == "list":
        _emit(args, {"names": catalog_names()})
        return 0
    if not args.name:
        raise CliValidationError("catalog show needs a name")
    params = {}
    for kv in (args.params.split(",") if args.params else []):
        if not kv:
            continue
        key, _, val = kv.partition("=")
        params[key] = float(val) if ("." in val or "e" in val.lower()) else int(val)
    try:
        entry = catalog_get(args.name, params)
    except (KeyError, ValueError) as err:
        raise CliValidationError(str(err)) from None
    if isinstance(entry.system, PolynomialHamiltonian):
        system = {"H": _poly_rows(entry.system.H), "level": _complex_pair(entry.system.level_c)}
    else:
        system = {"f": _poly_rows(entry.system.f), "g": _poly_rows(entry.system.g)}
    doc = {
        "name": entry.name,
        "parameters": entry.parameters,
        "system": system,
        "expected": _jsonable(entry.expected),
        "citation": entry.citation,
    }
    _emit(args, doc)
    return 0


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, complex):
        return _complex_pair(value)
    if callable(value):
        return "<function>"
    if hasattr(value, "numerator") and hasattr(value, "denominator") and not isinstance(value, int):
        return [int(value.numerator), int(value.denominator)]
    return value


# ----------------------------------------------------------------- portraits

def load_portrait_spec(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ParseError(f"cannot read portrait spec {path}: {err}") from None
    for key in ("chart", "grid", "time_direction", "horizon"):
        if key not in doc:
            raise ParseError(f"portrait spec is missing {key!r}")
    if doc["horizon"] <= 0:
        raise ParseError("horizon must be positive")
    return doc


def _portrait_seeds(spec: dict) -> list[tuple[complex, complex]]:
    grid = spec["grid"]
    re0, re1, n_re = grid["re"]
    im0, im1, n_im = grid["im"]
    if n_re < 1 or n_im < 1:
        raise ParseError("grid counts must be at least 1")
    fixed = _pair(grid.get("fixed", [0.0, 0.0]), "grid.fixed")
    moving_index = 0 if grid.get("coordinate", "first") == "first" else 1
    seeds = []
    for i in range(int(n_re)):
        re = re0 if n_re == 1 else re0 + (re1 - re0) * i / (n_re - 1)
        for j in range(int(n_im)):
            im = im0 if n_im == 1 else im0 + (im1 - im0) * j / (n_im - 1)
            moving = complex(re, im)
            seeds.append((moving, fixed) if moving_index == 0 else (fixed, moving))
    return seeds


def _time_path(spec: dict) -> TimePath:
    direction = spec["time_direction"]
    horizon = float(spec["horizon"])
    if direction == "Real":
        end = complex(horizon, 0.0)
    elif direction == "Imaginary":
        end = complex(0.0, horizon)
    elif isinstance(direction, dict) and "Ray" in direction:
        end = horizon * cmath.exp(1j * float(direction["Ray"]))
    else:
        raise ParseError("time_direction must be Real, Imaginary, or {\"Ray\": angle}")
    return TimePath.from_points([0.0, end])


def sample_portrait(system, spec: dict, jobs: int = 1) -> tuple[list[dict], str]:
    """Integrate every grid seed; returns per-seed polylines and an SVG body.

    Results are assembled in seed order regardless of completion order, so
    the output is deterministic for any jobs count.  Per-seed integrator
    failures are recorded, not raised.
    """
    sys_charts = to_charts(_as_field(system))
    path = _time_path(spec)
    chart = spec["chart"]
    seeds = _portrait_seeds(spec)
    cfg = IntegrationConfig(
        rel_tol=float(spec.get("rel_tol", 1e-9)),
        abs_tol=float(spec.get("abs_tol", 1e-11)),
        max_step=float(spec.get("max_step", 0.05)),
    )

    def run(idx_seed):
        idx, seed = idx_seed
        try:
            traj = integrate_path(sys_charts, chart, seed, path, cfg)
            pts = [(smp.coords[0], smp.coords[1], smp.chart) for smp in traj.samples]
            return {"seed": idx, "status": traj.terminated_reason.value, "points": pts}
        except FlowError as err:
            return {"seed": idx, "status": f"failed: {err}", "points": []}

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, enumerate(seeds)))
    else:
        results = [run(pair) for pair in enumerate(seeds)]
    results.sort(key=lambda r: r["seed"])
    svg = _portrait_svg(results, spec)
    return results, svg


def _portrait_svg(results: list[dict], spec: dict) -> str:
    """Plain SVG: one polyline of the moving coordinate per seed, plus axes."""
    width, height = 640, 640
    xs, ys = [], []
    for res in results:
        for c1, c2, chart in res["points"]:
            if chart == spec["chart"]:
                xs.append(c1.real)
                ys.append(c1.imag)
    if not xs:
        xs, ys = [-1.0, 1.0], [-1.0, 1.0]
    lo_x, hi_x = min(xs), max(xs)
    lo_y, hi_y = min(ys), max(ys)
    span = max(hi_x - lo_x, hi_y - lo_y, 1e-9)
    pad = 0.05 * span

    def sx(v):
        return (v - lo_x + pad) / (span + 2 * pad) * width

    def sy(v):
        return height - (v - lo_y + pad) / (span + 2 * pad) * height

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">']
    parts.append(f'<line x1="{sx(lo_x - pad):.2f}" y1="{sy(0):.2f}" x2="{sx(hi_x + pad):.2f}" y2="{sy(0):.2f}" stroke="#888" stroke-width="1"/>')
    parts.append(f'<line x1="{sx(0):.2f}" y1="{sy(lo_y - pad):.2f}" x2="{sx(0):.2f}" y2="{sy(hi_y + pad):.2f}" stroke="#888" stroke-width="1"/>')
    color = spec.get("styling", {}).get("stroke", "#1f6fb2")
    for res in results:
        pts = [(c1, c2) for c1, c2, chart in res["points"] if chart == spec["chart"]]
        if len(pts) < 2:
            continue
        coords = " ".join(f"{sx(c1.real):.2f},{sy(c1.imag):.2f}" for c1, _ in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_portrait(args) -> int:
    system, meta = resolve_system(args.system)
    spec = load_portrait_spec(args.portrait)
    jobs = args.jobs or int(os.environ.get("BLOWUP_JOBS", "1"))
    results, svg = sample_portrait(system, spec, jobs=jobs)
    stem = Path(args.output or "portrait")
    svg_text = svg
    if not args.reproducible:
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        svg_text = f"<!-- generated {stamp} -->\n" + svg
    Path(f"{stem}.svg").write_text(svg_text)
    lines = ["seed,idx,chart,re_c1,im_c1,re_c2,im_c2"]
    for res in results:
        for i, (c1, c2, chart) in enumerate(res["points"]):
            lines.append(
                f'{res["seed"]},{i},{chart},'
                f'{format(c1.real, ".17g")},{format(c1.imag, ".17g")},'
                f'{format(c2.real, ".17g")},{format(c2.imag, ".17g")}'
            )
    Path(f"{stem}.csv").write_text("\n".join(lines) + "\n")
    statuses = {}
    for res in results:
        statuses[res["status"]] = statuses.get(res["status"], 0) + 1
    print(dump_json({"seeds": len(results), "statuses": statuses,
                     "svg": f"{stem}.svg", "csv": f"{stem}.csv"}))
    return 0


# --------------------------------------------------------------------- main

def _emit(args, doc) -> None:
    text = dump_json(doc) + "\n"
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blowup", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_system(p):
        p.add_argument("system", help="JSON spec file or catalog:name?p=v")
        p.add_argument("--output", help="write the report here instead of stdout")

    p = sub.add_parser("classify", help="locate and classify all equilibria")
    add_system(p)
    p.add_argument("--small-divisors", action="store_true", dest="small_divisors")
    p.add_argument("--small-divisor-order", type=int, default=50)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("integrate", help="follow a complex-time path")
    add_system(p)
    p.add_argument("--path", required=True, help="JSON path spec file")
    p.add_argument("--start", required=True, help="re,im,re,im (or re,re for real starts)")
    p.add_argument("--chart", default=Chart.XY, choices=list(Chart.ALL))
    p.add_argument("--rel-tol", type=float, default=1e-10, dest="rel_tol")
    p.add_argument("--abs-tol", type=float, default=1e-12, dest="abs_tol")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("holonomy", help="holonomy multiplier at an equilibrium")
    add_system(p)
    p.add_argument("--eq", type=int, required=True)
    p.add_argument("--radius", type=float, default=0.1)
    p.set_defaults(func=cmd_holonomy)

    p = sub.add_parser("detour", help="complex-time loop around a blow-up time")
    add_system(p)
    p.add_argument("--eq", type=int, required=True)
    p.add_argument("--cycles", type=int, required=True)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--start", default=None)
    p.add_argument("--horizon", type=float, default=2.0)
    p.add_argument("--ball", type=float, default=0.05)
    p.add_argument("--star", action="store_true", help="append the blow-up star when closed")
    p.set_defaults(func=cmd_detour)

    p = sub.add_parser("linearize", help="formal diagonalization at an equilibrium")
    add_system(p)
    p.add_argument("--eq", type=int, required=True)
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--ball-radius", type=float, default=0.1, dest="ball_radius")
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("portrait", help="grid of trajectories as SVG + CSV")
    add_system(p)
    p.add_argument("--portrait", required=True, help="JSON portrait spec")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--reproducible", action="store_true")
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("pendulum", help="blow-up loop windings of a pendulum force law")
    p.add_argument("--g", required=True, help="force coefficients, low to high, comma separated")
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--output")
    p.set_defaults(func=cmd_pendulum)

    p = sub.add_parser("trees", help="planar tree counts")
    p.add_argument("--max-m", type=int, required=True, dest="max_m")
    p.add_argument("--json", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("catalog", help="built-in reference systems")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?")
    p.add_argument("--params", default="")
    p.add_argument("--output")
    p.set_defaults(func=cmd_catalog)

    return ap


def run_command(argv: list[str]) -> int:
    """Entry point used by tests; returns the exit code."""
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as err:
        return 2 if err.code not in (0, None) else 0
    try:
        return args.func(args)
    except CliValidationError as err:
        print(dump_json({"error": "validation", "message": str(err)}), file=sys.stderr)
        return 2
    except (FlowError, DetourError, NormalFormError, ArithmeticError, ValueError, KeyError) as err:
        print(dump_json({"error": "numerical", "message": str(err)}), file=sys.stderr)
        return 3


def main() -> None:
    raise SystemExit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
