"""Scenario-driven command line front end.

A scenario is a single JSON object::

    {
      "n": 2,
      "mode": "regular" | "singular_order_m" | "infinite" | "bangbang"
              | "legendre_degeneracy" | "portrait",
      "data": {...},                     # shape depends on the mode, see below
      "initial_plane": [[...], ...],     # 2n x n, column-spanned plane
      "grid": {"t0": 0.0, "t1": 1.0, "steps": 200},
      "tolerances": {"rtol": 1e-12},     # optional overrides
      "seed": 0
    }

``data`` holds piecewise polynomial coefficients
(``{"breakpoints": [...], "b": [[c0, c1, ...], ...], "x": [[[...], ...], ...]}``,
one ``b`` row and one ``(2n) x (deg+1)`` coefficient block per interval), a
bang-bang list ``{"x_list": [[...2n...], ...]}``, or a portrait model
``{"c": 2.0, "u0": [...], "v0": [...]}``.  Unknown keys are rejected with
the offending field path.

Verbs: ``classify``, ``jump``, ``trace``, ``maslov``, ``bangbang``,
``portrait``.  Exit codes: 0 ok, 2 configuration, 3 mathematical failure,
4 i/o failure; every failure prints one structured JSON object on stderr.
Outputs are byte-stable: floats carry 17 significant digits and lines end
with a bare newline.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import (
    D_MAX,
    JacobiTrace,
    JumpEvent,
    PiecewiseAnalytic,
    bang_bang_sequence,
    infinite_order_curve,
    legendre_sequence,
    singular_jacobi_curve,
)
from .errors import ConfigError, JacobiflowError, MathError
from .flows import flow_plane, symplectic_inverse
from .grassmann import (
    ChartError,
    GrassmannCurve,
    canonicalize,
    horizontal_plane,
    plane_distance,
    to_chart,
    vertical_plane,
)
from .maslov import maslov_index, maslov_partial_sums
from .singular.classify import classify_frame, kneser_classify
from .singular.firstjet import first_jet_case, first_jet_continuation
from .singular.frame import NormalFormCoefficients, build_normal_frame
from .singular.jump import epsilon_family_oracle, jump_operator

__all__ = ["ScenarioConfig", "TraceOutput", "parse_scenario", "run", "emit", "main"]

MODES = (
    "regular",
    "singular_order_m",
    "infinite",
    "bangbang",
    "legendre_degeneracy",
    "portrait",
)
VERBS = ("classify", "jump", "trace", "maslov", "bangbang", "portrait")
FORMATS = ("csv", "json")
DEFAULT_TOLERANCES = {
    "rtol": 1e-12,
    "tol_thresh": 1e-6,
    "nterms": 40,
    "imax": 0,  # 0 means "derived from n"
    "eps_family": (1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
}
DEFAULT_U0 = (-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0)
DEFAULT_V0 = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)
PORTRAIT_MASK = 1e6
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MATH = 3
EXIT_IO = 4


@dataclass
class ScenarioConfig:
    """Validated scenario with defaults applied."""

    n: int
    mode: str
    data: dict
    initial_plane: np.ndarray | None
    grid: np.ndarray
    tolerances: dict
    seed: int


@dataclass
class TraceOutput:
    """Columnar trace rows plus a JSON-ready summary."""

    columns: list[str]
    rows: list[list]
    summary: dict
    trace: JacobiTrace | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# scenario parsing
# ---------------------------------------------------------------------------


def _need(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"{path}{key}: required field is missing")
    return obj[key]


def _check_keys(obj: dict, allowed: set[str], path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}{key}: unknown field")


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite")
    return value


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer")
    return value


def _float_list(value, path: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a nonempty array of numbers")
    return [_as_float(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _parse_piecewise(data: dict, n: int, path: str = "data.") -> PiecewiseAnalytic:
    _check_keys(data, {"breakpoints", "b", "x"}, path)
    bps = _float_list(_need(data, "breakpoints", path), path + "breakpoints")
    if len(bps) < 2 or any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
        raise ConfigError(f"{path}breakpoints: need a strictly increasing list of length >= 2")
    braw = _need(data, "b", path)
    xraw = _need(data, "x", path)
    if not isinstance(braw, list) or len(braw) != len(bps) - 1:
        raise ConfigError(f"{path}b: need one coefficient row per interval")
    if not isinstance(xraw, list) or len(xraw) != len(bps) - 1:
        raise ConfigError(f"{path}x: need one coefficient block per interval")
    b_pieces = []
    for i, row in enumerate(braw):
        coeffs = _float_list(row, f"{path}b[{i}]")
        if len(coeffs) > D_MAX + 1:
            raise ConfigError(f"{path}b[{i}]: series degree exceeds the cap {D_MAX}")
        b_pieces.append(np.array(coeffs))
    x_pieces = []
    for i, block in enumerate(xraw):
        if not isinstance(block, list) or len(block) != 2 * n:
            raise ConfigError(f"{path}x[{i}]: need 2n = {2 * n} component rows")
        rows = [_float_list(row, f"{path}x[{i}][{j}]") for j, row in enumerate(block)]
        width = max(len(r) for r in rows)
        if width > D_MAX + 1:
            raise ConfigError(f"{path}x[{i}]: series degree exceeds the cap {D_MAX}")
        mat = np.zeros((2 * n, width))
        for j, r in enumerate(rows):
            mat[j, : len(r)] = r
        x_pieces.append(mat)
    return PiecewiseAnalytic(breakpoints=np.array(bps), b_pieces=b_pieces, x_pieces=x_pieces)


def _parse_plane(raw, n: int, path: str = "initial_plane") -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != 2 * n:
        raise ConfigError(f"{path}: expected a 2n x n array with 2n = {2 * n} rows")
    rows = []
    for i, row in enumerate(raw):
        vals = _float_list(row, f"{path}[{i}]")
        if len(vals) != n:
            raise ConfigError(f"{path}[{i}]: expected {n} columns")
        rows.append(vals)
    plane = np.array(rows)
    if np.linalg.matrix_rank(plane) < n:
        raise ConfigError(f"{path}: columns must be linearly independent")
    return plane


def parse_scenario(path: str | Path) -> ScenarioConfig:
    """Load and validate one scenario file, applying defaults."""

    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario: file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("scenario: top level must be a JSON object")
    _check_keys(raw, {"n", "mode", "data", "initial_plane", "grid", "tolerances", "seed"}, "")

    n = _as_int(_need(raw, "n", ""), "n")
    if n < 1:
        raise ConfigError("n: must be a positive integer")
    mode = _need(raw, "mode", "")
    if mode not in MODES:
        raise ConfigError(f"mode: must be one of {', '.join(MODES)}")

    grid_raw = _need(raw, "grid", "")
    if not isinstance(grid_raw, dict):
        raise ConfigError("grid: expected an object with t0, t1, steps")
    _check_keys(grid_raw, {"t0", "t1", "steps"}, "grid.")
    t0 = _as_float(_need(grid_raw, "t0", "grid."), "grid.t0")
    t1 = _as_float(_need(grid_raw, "t1", "grid."), "grid.t1")
    steps = _as_int(_need(grid_raw, "steps", "grid."), "grid.steps")
    if steps < 1:
        raise ConfigError("grid.steps: must be >= 1")
    if steps > 1 and t1 <= t0:
        raise ConfigError("grid.t1: must exceed grid.t0")
    grid = np.linspace(t0, t1, steps)

    tolerances = dict(DEFAULT_TOLERANCES)
    tol_raw = raw.get("tolerances", {})
    if not isinstance(tol_raw, dict):
        raise ConfigError("tolerances: expected an object")
    _check_keys(tol_raw, set(DEFAULT_TOLERANCES), "tolerances.")
    for key, value in tol_raw.items():
        if key in ("nterms", "imax"):
            tolerances[key] = _as_int(value, f"tolerances.{key}")
        elif key == "eps_family":
            eps = _float_list(value, "tolerances.eps_family")
            if any(e <= 0 for e in eps):
                raise ConfigError("tolerances.eps_family: entries must be positive")
            tolerances[key] = tuple(eps)
        else:
            value = _as_float(value, f"tolerances.{key}")
            if value <= 0:
                raise ConfigError(f"tolerances.{key}: must be positive")
            tolerances[key] = value
    if tolerances["nterms"] < 4 or tolerances["nterms"] > D_MAX:
        raise ConfigError(f"tolerances.nterms: must lie in [4, {D_MAX}]")

    seed = _as_int(raw.get("seed", 0), "seed")

    data_raw = _need(raw, "data", "")
    if not isinstance(data_raw, dict):
        raise ConfigError("data: expected an object")

    plane = None
    if mode == "portrait":
        if "initial_plane" in raw:
            raise ConfigError("initial_plane: not used in portrait mode")
        if n != 1:
            raise ConfigError("n: portrait mode is one-dimensional")
        _check_keys(data_raw, {"c", "u0", "v0"}, "data.")
        data = {
            "c": _as_float(_need(data_raw, "c", "data."), "data.c"),
            "u0": _float_list(data_raw["u0"], "data.u0") if "u0" in data_raw else list(DEFAULT_U0),
            "v0": _float_list(data_raw["v0"], "data.v0") if "v0" in data_raw else list(DEFAULT_V0),
        }
        if grid[0] <= 0.0:
            raise ConfigError("grid.t0: portrait sampling must start after zero")
    elif mode == "bangbang":
        _check_keys(data_raw, {"x_list"}, "data.")
        xl = _need(data_raw, "x_list", "data.")
        if not isinstance(xl, list) or not xl:
            raise ConfigError("data.x_list: expected a nonempty array of vectors")
        vectors = []
        for i, vec in enumerate(xl):
            vals = _float_list(vec, f"data.x_list[{i}]")
            if len(vals) != 2 * n:
                raise ConfigError(f"data.x_list[{i}]: expected a vector of length 2n = {2 * n}")
            vectors.append(np.array(vals))
        data = {"x_list": vectors}
        plane = _parse_plane(_need(raw, "initial_plane", ""), n)
    else:
        data = {"piecewise": _parse_piecewise(data_raw, n)}
        plane = _parse_plane(_need(raw, "initial_plane", ""), n)
        if mode == "legendre_degeneracy":
            bps = data["piecewise"].breakpoints
            if not (bps[0] <= 0.0 < bps[-1]):
                raise ConfigError("data.breakpoints: the marked instant 0 must lie in the support")
            if grid[0] <= 0.0:
                raise ConfigError("grid.t0: continuation must start after the marked instant")

    return ScenarioConfig(
        n=n, mode=mode, data=data, initial_plane=plane,
        grid=grid, tolerances=tolerances, seed=seed,
    )


# ---------------------------------------------------------------------------
# pipeline execution
# ---------------------------------------------------------------------------


def _trace_columns(n: int) -> list[str]:
    cols = ["time"]
    cols += [f"frame_{i}_{j}" for i in range(2 * n) for j in range(n)]
    cols += [f"chart_{i}_{j}" for i in range(n) for j in range(n)]
    cols += ["maslov_partial", "event"]
    return cols


def _trace_rows(curve: GrassmannCurve, jumps: list[JumpEvent], n: int) -> list[list]:
    delta = horizontal_plane(n)
    pi_ref = vertical_plane(n)
    partial = maslov_partial_sums(curve, pi_ref)
    jump_times = [j.time for j in jumps]
    rows = []
    for t, plane, psum in zip(curve.times, curve.planes, partial):
        row: list = [float(t)]
        row += [float(v) for v in np.asarray(plane).ravel()]
        try:
            s = to_chart(plane, delta, pi_ref).s
            row += [float(v) for v in s.ravel()]
        except ChartError:
            row += [None] * (n * n)
        row.append(float(psum))
        hit = any(abs(t - jt) <= 1e-9 * max(1.0, abs(jt)) for jt in jump_times)
        row.append(1 if hit else 0)
        rows.append(row)
    return rows


def _event_summaries(jumps: list[JumpEvent]) -> list[dict]:
    out = []
    for j in sorted(jumps, key=lambda e: e.time):
        out.append(
            {
                "time": float(j.time),
                "pre_plane": np.asarray(j.pre_plane).tolist(),
                "post_plane": np.asarray(j.post_plane).tolist(),
                "inserted": np.asarray(j.inserted).tolist(),
            }
        )
    return out


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def _run_interval_mode(config: ScenarioConfig) -> TraceOutput:
    data = config.data["piecewise"]
    grid = config.grid
    interval = (float(grid[0]), float(grid[-1]))
    seq = legendre_sequence(data, interval, imax=config.tolerances["imax"] or 2 * config.n)
    if config.mode == "regular" and seq.first_nonzero != 0:
        raise ConfigError("mode: weight is degenerate on the window; not a regular scenario")
    if config.mode == "singular_order_m" and seq.first_nonzero == 0:
        raise ConfigError("mode: weight is nondegenerate on the window; use mode regular")
    if config.mode == "infinite":
        if seq.first_nonzero is not None:
            raise ConfigError("mode: sequence has a nonzero entry; the order is finite")
        trace = infinite_order_curve(data, config.initial_plane, interval)
    else:
        trace = singular_jacobi_curve(data, config.initial_plane, interval, grid)
    summary = {
        "mode": config.mode,
        "n": config.n,
        "seed": config.seed,
        "order_m": seq.first_nonzero,
        "events": _event_summaries(trace.jumps),
        "diagnostics": _jsonable(trace.diagnostics),
    }
    rows = _trace_rows(trace.curve, trace.jumps, config.n)
    return TraceOutput(_trace_columns(config.n), rows, summary, trace)


def _run_bangbang(config: ScenarioConfig) -> TraceOutput:
    x_list = config.data["x_list"]
    planes = bang_bang_sequence(config.initial_plane, x_list)
    times = np.arange(len(planes), dtype=float)
    jumps = []
    for i, x in enumerate(x_list):
        if plane_distance(planes[i], planes[i + 1]) > 1e-10:
            jumps.append(
                JumpEvent(
                    time=float(i + 1),
                    pre_plane=planes[i],
                    post_plane=planes[i + 1],
                    inserted=x,
                )
            )
    curve = GrassmannCurve(times=times, planes=planes)
    trace = JacobiTrace(curve=curve, jumps=jumps, diagnostics={"switches": len(x_list)})
    summary = {
        "mode": config.mode,
        "n": config.n,
        "seed": config.seed,
        "switches": len(x_list),
        "event_count": len(jumps),
        "events": _event_summaries(jumps),
    }
    rows = _trace_rows(curve, jumps, config.n)
    return TraceOutput(_trace_columns(config.n), rows, summary, trace)


def _degeneracy_stage(config: ScenarioConfig):
    """Shared head of the degenerate-instant pipeline: sequence, frame, report."""

    data = config.data["piecewise"]
    bps = data.breakpoints
    seq = legendre_sequence(
        data, (float(bps[0]), float(bps[-1])), imax=config.tolerances["imax"] or 2 * config.n
    )
    if seq.first_nonzero != 0:
        raise ConfigError(
            "data.b: weight is identically degenerate; this mode treats an isolated zero"
        )
    frame = build_normal_frame(data, 0.0, nterms=config.tolerances["nterms"])
    if frame.m == 0:
        raise ConfigError("data.b: weight does not vanish at the marked instant")
    report = classify_frame(frame, tol_thresh=config.tolerances["tol_thresh"])
    return data, frame, report


def _classification_summary(config: ScenarioConfig, frame, report) -> dict:
    return {
        "mode": config.mode,
        "n": config.n,
        "seed": config.seed,
        "verdict": report.verdict,
        "m": report.m,
        "delta": report.delta,
        "b_m": report.b_m,
        "sigma_xxdot": report.sigma_xxdot,
        "case": report.case,
        "k": report.k,
        "symplectic_residual": frame.symplectic_residual,
    }


def _run_degeneracy(config: ScenarioConfig, verb: str) -> TraceOutput:
    data, frame, report = _degeneracy_stage(config)
    columns = _trace_columns(config.n)
    summary = _classification_summary(config, frame, report)
    if verb == "classify":
        summary["events"] = []
        return TraceOutput(columns, [], summary, None)

    if frame.k != config.n:
        raise ConfigError(
            "n: continuation needs the degenerate block to fill the space "
            f"(block size {frame.k}, n = {config.n})"
        )
    x0 = data.x(0.0)
    jump = jump_operator(config.initial_plane, x0, report, time=0.0)
    summary["events"] = _event_summaries([jump])
    if verb == "jump":
        return TraceOutput(columns, [], summary, None)

    grid = config.grid
    rtol = config.tolerances["rtol"]
    m0 = frame.frame_at(0.0)
    l0_nf = canonicalize(symplectic_inverse(m0) @ np.asarray(config.initial_plane, dtype=float))
    if frame.m <= 2:
        case = first_jet_case(l0_nf)
        nf_trace = first_jet_continuation(
            frame.coeffs, case, grid, nterms=config.tolerances["nterms"], rtol=rtol
        )
        nf_planes = nf_trace.curve.planes
        summary["jet_case"] = case.case
        summary["series_start"] = nf_trace.diagnostics["series_start"]
        summary["equilibrium"] = _jsonable(nf_trace.diagnostics["equilibrium"])
    else:
        eps = [e for e in config.tolerances["eps_family"] if e < grid[0]]
        if not eps:
            raise ConfigError("tolerances.eps_family: no entry lies below grid.t0")
        family = epsilon_family_oracle(frame.coeffs, l0_nf, float(grid[0]), eps, rtol=rtol)
        dists = [float(plane_distance(a, b)) for a, b in zip(family, family[1:])]
        nf_curve = flow_plane(frame.coeffs.as_callable(), family[-1], grid, rtol=rtol)
        nf_planes = nf_curve.planes
        summary["eps_family"] = list(map(float, eps))
        summary["oracle_distances"] = dists
    planes = [canonicalize(frame.frame_at(float(t)) @ p) for t, p in zip(grid, nf_planes)]
    curve = GrassmannCurve(times=grid, planes=planes)
    trace = JacobiTrace(curve=curve, jumps=[jump], diagnostics={})
    rows = _trace_rows(curve, [jump], config.n)
    return TraceOutput(columns, rows, summary, trace)


def _run_portrait(config: ScenarioConfig) -> TraceOutput:
    c = config.data["c"]
    u0 = config.data["u0"]
    v0 = config.data["v0"]
    grid = config.grid
    coeffs = NormalFormCoefficients(
        k=1, m=2, b=np.array([0.0, 0.0, -1.0]), b11=np.zeros(1), c11=np.array([-c])
    )
    sys = coeffs.as_callable()
    rtol = config.tolerances["rtol"]
    t_first = float(grid[0])

    def frames(start: np.ndarray) -> list[np.ndarray]:
        return flow_plane(sys, start, grid, rtol=rtol).planes

    table: list[list] = [[float(t)] for t in grid]
    columns = ["time"]
    for idx, val in enumerate(u0):
        columns.append(f"u_{idx}")
        for row, p in zip(table, frames(np.array([[1.0], [-val]]))):
            den, num = float(p[0, 0]), float(p[1, 0])
            u = -num / den if abs(den) > 1e-12 else math.inf
            row.append(u if abs(u) <= PORTRAIT_MASK else None)
    for idx, val in enumerate(v0):
        columns.append(f"v_{idx}")
        for t, row, p in zip(grid, table, frames(np.array([[-val], [t_first]]))):
            num, den = float(p[0, 0]), float(p[1, 0])
            v = -float(t) * num / den if abs(den) > 1e-12 else math.inf
            row.append(v if abs(v) <= PORTRAIT_MASK else None)

    disc = 1.0 + 4.0 * c
    verdict = kneser_classify(np.array([[-1.0]]), np.array([[-c]]), 2, config.tolerances["tol_thresh"])
    if disc >= 0.0:
        root = math.sqrt(disc)
        if c != 0.0:
            equilibria = sorted([(1.0 - root) / (2.0 * c), (1.0 + root) / (2.0 * c)])
        else:
            equilibria = [-1.0]
    else:
        equilibria = []
    summary = {
        "mode": config.mode,
        "n": config.n,
        "seed": config.seed,
        "c": c,
        "verdict": verdict,
        "delta": root if disc >= 0.0 else None,
        "equilibria": equilibria,
        "events": [],
    }
    return TraceOutput(columns, table, summary, None)


def run(config: ScenarioConfig, verb: str = "trace") -> TraceOutput:
    """Execute the scenario pipeline selected by ``config.mode`` and ``verb``."""

    if verb not in VERBS:
        raise ConfigError(f"verb: must be one of {', '.join(VERBS)}")
    if verb == "bangbang" and config.mode != "bangbang":
        raise ConfigError("verb bangbang: scenario mode must be bangbang")
    if verb == "portrait" and config.mode != "portrait":
        raise ConfigError("verb portrait: scenario mode must be portrait")
    if verb in ("classify", "jump") and config.mode != "legendre_degeneracy":
        raise ConfigError(f"verb {verb}: scenario mode must be legendre_degeneracy")
    if verb == "maslov" and config.mode == "portrait":
        raise ConfigError("verb maslov: portrait scenarios carry no plane curve")

    if config.mode == "portrait":
        out = _run_portrait(config)
    elif config.mode == "bangbang":
        out = _run_bangbang(config)
    elif config.mode == "legendre_degeneracy":
        out = _run_degeneracy(config, verb)
    else:
        out = _run_interval_mode(config)

    if verb == "maslov":
        out.summary["maslov_index"] = maslov_index(out.trace.curve, vertical_plane(config.n))
    return out


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def emit(output: TraceOutput, out_path: str | Path, format: str = "csv") -> list[Path]:
    """Write the trace to disk; returns the list of files written.

    ``csv`` writes the rows, a ``.columns`` sidecar naming the columns, and
    a ``.summary.json`` sidecar; ``json`` writes one self-contained file.
    """

    if format not in FORMATS:
        raise ConfigError(f"format: must be one of {', '.join(FORMATS)}")
    out_path = Path(out_path)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    written = []
    summary = _jsonable(output.summary)
    if format == "csv":
        lines = [",".join(output.columns)]
        lines += [",".join(_format_cell(c) for c in row) for row in output.rows]
        out_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        written.append(out_path)
        manifest = out_path.with_name(out_path.name + ".columns")
        manifest.write_text("\n".join(output.columns) + "\n", encoding="utf-8", newline="\n")
        written.append(manifest)
        spath = out_path.with_name(out_path.name + ".summary.json")
        spath.write_text(
            json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n"
        )
        written.append(spath)
    else:
        blob = {
            "columns": output.columns,
            "rows": _jsonable(output.rows),
            "summary": summary,
        }
        out_path.write_text(
            json.dumps(blob, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n"
        )
        written.append(out_path)
    return written


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # keep every failure on the structured path
        raise ConfigError(f"arguments: {message}")


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("scenario", nargs="+", help="scenario JSON file(s)")
    common.add_argument("--out", help="output path (directory in batch runs)")
    common.add_argument("--format", choices=FORMATS, default="csv")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--tol-overrides", default=None, help="JSON object merged into tolerances")
    common.add_argument("--batch", action="store_true", help="process several scenarios concurrently")
    parser = _Parser(prog="jacobiflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        sub.add_parser(verb, parents=[common])
    return parser


def _error_object(exc: Exception, stage: str, scenario: str | None) -> tuple[dict, int]:
    if isinstance(exc, ConfigError):
        code = EXIT_CONFIG
    elif isinstance(exc, (MathError, JacobiflowError)):
        code = EXIT_MATH
    elif isinstance(exc, OSError):
        code = EXIT_IO
    else:
        raise exc
    obj = {
        "code": code,
        "stage": stage,
        "error": type(exc).__name__,
        "message": str(exc),
    }
    if scenario is not None:
        obj["scenario"] = scenario
    return obj, code


def _default_out(scenario: Path, fmt: str, directory: Path | None) -> Path:
    stem = scenario.name[: -len(scenario.suffix)] if scenario.suffix else scenario.name
    name = f"{stem}.out.{fmt}"
    return (directory / name) if directory is not None else scenario.with_name(name)


def _process_one(path_str: str, verb: str, fmt: str, out: Path | None,
                 seed: int | None, overrides: dict | None) -> tuple[dict | None, int]:
    stage = "parse"
    try:
        config = parse_scenario(path_str)
        if seed is not None:
            config.seed = seed
        if overrides:
            for key, value in overrides.items():
                if key not in DEFAULT_TOLERANCES:
                    raise ConfigError(f"tolerances.{key}: unknown field")
                if key in ("nterms", "imax"):
                    config.tolerances[key] = _as_int(value, f"tolerances.{key}")
                elif key == "eps_family":
                    config.tolerances[key] = tuple(_float_list(value, "tolerances.eps_family"))
                else:
                    config.tolerances[key] = _as_float(value, f"tolerances.{key}")
        stage = "run"
        result = run(config, verb)
        stage = "emit"
        target = out if out is not None else _default_out(Path(path_str), fmt, None)
        emit(result, target, fmt)
        return None, EXIT_OK
    except Exception as exc:  # noqa: BLE001 - routed through the taxonomy
        return _error_object(exc, stage, path_str)


def main(argv: list[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        overrides = None
        if args.tol_overrides:
            try:
                overrides = json.loads(args.tol_overrides)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"--tol-overrides: invalid JSON: {exc}") from exc
            if not isinstance(overrides, dict):
                raise ConfigError("--tol-overrides: expected a JSON object")
        if len(args.scenario) > 1 and not args.batch:
            raise ConfigError("arguments: several scenarios need --batch")
    except ConfigError as exc:
        obj, code = _error_object(exc, "parse", None)
        print(json.dumps(obj, sort_keys=True), file=sys.stderr)
        return code

    if args.batch:
        out_dir = Path(args.out) if args.out else None
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
        jobs = [
            (path, args.verb, args.format,
             _default_out(Path(path), args.format, out_dir) if out_dir else None,
             args.seed, overrides)
            for path in args.scenario
        ]
        with ThreadPoolExecutor(max_workers=min(8, len(jobs))) as pool:
            results = list(pool.map(lambda j: _process_one(*j), jobs))
        code = EXIT_OK
        for err, one_code in results:
            if err is not None:
                print(json.dumps(err, sort_keys=True), file=sys.stderr)
                if code == EXIT_OK:
                    code = one_code
        return code

    out = Path(args.out) if args.out else None
    err, code = _process_one(args.scenario[0], args.verb, args.format, out, args.seed, overrides)
    if err is not None:
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
