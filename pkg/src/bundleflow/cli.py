"""Command-line front end.

    bundleflow <command> --config <path> [--out <dir>] [--check <name>]

Commands: curvature, flow-ode, flow-be, flow-bundle, verify, plot.  The
configuration is a single JSON document validated strictly (unknown keys are
rejected) before any work starts.  Exit codes: 0 success, 2 configuration
error, 3 numeric failure, 4 verification failure.  BUNDLEFLOW_THREADS caps
the number of worker threads used for independent runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import bakry_emery as be
from . import kahler_einstein as ke
from .bundle import BundleState, blocks_to_chart, bundle_integrate, ricci_blocks_torus
from .catalog import (by_name, heisenberg_bundle_fields, heisenberg_pointwise_data,
                      sol3_pointwise_data)
from .diffgeo import ricci_with_defect
from .errors import BundleFlowError, ConfigError, EmptyInput
from .grids import MetricField, PeriodicChart, ScalarField
from .svgplot import render_phase_portrait
from .traces import FlowTrace, atomic_write_text, read_trace, reduced_flow_trace, write_trace
from .verify import CHECKS, run_check

COMMANDS = ("curvature", "flow-ode", "flow-be", "flow-bundle", "verify", "plot")

_SCHEMA = {
    "curvature": {"required": {"command", "geometry", "params"},
                  "optional": {"numerics", "outputs", "point"}},
    "flow-ode": {"required": {"command", "geometry", "params"},
                 "optional": {"numerics", "outputs"}},
    "flow-be": {"required": {"command", "params"},
                "optional": {"numerics", "outputs"}},
    "flow-bundle": {"required": {"command", "geometry", "params"},
                    "optional": {"numerics", "outputs"}},
    "verify": {"required": {"command"}, "optional": {"checks", "outputs"}},
    "plot": {"required": {"command", "inputs"}, "optional": {"style", "outputs"}},
}

_NUMERIC_KEYS = {"tol", "dt", "t_end", "resolution", "extent", "h", "record_every",
                 "extinction_ratio", "c_cfl"}


def _threads() -> int:
    raw = os.environ.get("BUNDLEFLOW_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"BUNDLEFLOW_THREADS must be an integer, got {raw!r}")


def parallel_map(fn, items):
    """Order-preserving map over independent work items."""
    workers = _threads()
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            cfg = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    command = cfg.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"config 'command' must be one of {COMMANDS}, got {command!r}")
    schema = _SCHEMA[command]
    keys = set(cfg)
    unknown = keys - schema["required"] - schema["optional"]
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    missing = schema["required"] - keys
    if missing:
        raise ConfigError(f"missing config keys for {command}: {sorted(missing)}")
    numerics = cfg.get("numerics", {})
    if not isinstance(numerics, dict):
        raise ConfigError("'numerics' must be an object")
    bad = set(numerics) - _NUMERIC_KEYS
    if bad:
        raise ConfigError(f"unknown numerics keys: {sorted(bad)}")
    return cfg


def _out_path(cfg: dict, out_dir: str | None, key: str, default: str) -> str:
    path = cfg.get("outputs", {}).get(key, default)
    if out_dir and not os.path.isabs(path):
        path = os.path.join(out_dir, path)
    return path


def _geometry_entry(cfg: dict):
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'params' must be an object")
    try:
        return by_name(cfg["geometry"], params)
    except BundleFlowError as exc:
        raise ConfigError(str(exc))


def cmd_flow_ode(cfg: dict, out_dir: str | None) -> int:
    entry = _geometry_entry(cfg)
    num = cfg.get("numerics", {})
    started = time.perf_counter()
    trace = ke.ke_integrate(entry.ke_state0, entry.ke_params,
                            t_end=float(num.get("t_end", 1.0)),
                            tol=float(num.get("tol", 1e-9)),
                            extinction_ratio=float(num.get("extinction_ratio", 1e-6)))
    meta = {"command": "flow-ode", "geometry": cfg["geometry"], "version": __version__,
            "config": json.dumps(cfg, sort_keys=True)}
    for key, value in sorted(cfg.get("params", {}).items()):
        meta[key] = format(value, "g") if isinstance(value, float) else str(value)
    flow = reduced_flow_trace(trace, meta)
    flow.meta["wall_time_s"] = f"{time.perf_counter() - started:.3f}"
    path = _out_path(cfg, out_dir, "trace", "trace.csv")
    write_trace(flow, path)
    print(f"flow-ode: {len(flow)} rows, stop={trace.stop_reason}, wrote {path}")
    return 0


def cmd_curvature(cfg: dict, out_dir: str | None) -> int:
    geometry = cfg["geometry"]
    params = cfg.get("params", {})
    num = cfg.get("numerics", {})
    h = float(num.get("h", 1e-3))
    entry = _geometry_entry(cfg)
    if entry.total_metric is None:
        raise ConfigError(f"geometry '{geometry}' has no total-space metric to check")
    if geometry == "heisenberg":
        n = int(params["n"])
        point = cfg.get("point", [0.3] * n + [-0.2] * n + [0.5])
        x = np.asarray(point[:n], dtype=float)
        alpha_at = np.concatenate([np.zeros(n), -x])[None, :]
        data = heisenberg_pointwise_data(n, float(params["c"]))
    elif geometry == "sol3":
        point = cfg.get("point", [1.3, 0.2, 0.1])
        a = float(params["a"])
        data = sol3_pointwise_data(a, float(params["c"]), float(point[0]))
        alpha_at = np.array([[0.0, a / float(point[0])]])
    else:
        raise ConfigError(f"curvature command supports heisenberg and sol3, not '{geometry}'")
    point = np.asarray(point, dtype=float)
    blocks = ricci_blocks_torus(data)
    expected = blocks_to_chart(blocks, alpha_at)
    oracle, defect = ricci_with_defect(entry.total_metric, point, step=h)
    max_err = float(np.max(np.abs(oracle - expected)))
    report = {
        "command": "curvature",
        "geometry": geometry,
        "params": {k: params[k] for k in sorted(params)},
        "point": point.tolist(),
        "h": h,
        "blocks": {"fiber": blocks.fiber.tolist(), "mixed": blocks.mixed.tolist(),
                   "base": blocks.base.tolist()},
        "chart_from_blocks": expected.tolist(),
        "chart_from_oracle": oracle.tolist(),
        "oracle_asymmetry_defect": float(defect),
        "max_abs_error": max_err,
        "version": __version__,
    }
    path = _out_path(cfg, out_dir, "report", "curvature.json")
    atomic_write_text(path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"curvature: max |oracle - blocks| = {max_err:.3e} at h={h:g}, wrote {path}")
    return 0


def cmd_flow_be(cfg: dict, out_dir: str | None) -> int:
    params = cfg.get("params", {})
    num = cfg.get("numerics", {})
    n_value = params.get("N", "inf")
    n_float = np.inf if n_value in ("inf", "Infinity", None) else float(n_value)
    res = int(num.get("resolution", 32))
    extent = float(num.get("extent", 2.0 * np.pi))
    amplitude = float(params.get("amplitude", 0.1))
    chart = PeriodicChart((extent, extent), (res, res))
    x = chart.grid_coords()[..., 0]
    f0 = ScalarField(chart, amplitude * np.sin(2.0 * np.pi * x / extent))
    g0 = MetricField(chart, np.broadcast_to(np.eye(2), chart.resolution + (2, 2)).copy())
    k_values = tuple(int(k) for k in params.get("k", (0, 1)))
    started = time.perf_counter()
    trace = be.be_integrate(be.BEState(g0, f0, n_float),
                            dt=float(num.get("dt", 1.0)),
                            t_end=float(num.get("t_end", 1.0)),
                            k_values=k_values,
                            c_cfl=float(num.get("c_cfl", 0.2)),
                            record_every=int(num.get("record_every", 1)))
    columns = {"t": trace.times}
    for k in k_values:
        columns[f"min_tildeS_{k}"] = np.array([m.min_tildeS[k] for m in trace.monitors])
    columns["max_grad_f_sq"] = np.array([m.max_grad_f_sq for m in trace.monitors])
    meta = {"command": "flow-be", "N": str(n_value), "amplitude": format(amplitude, "g"),
            "resolution": str(res), "stop_reason": trace.stop_reason,
            "version": __version__, "config": json.dumps(cfg, sort_keys=True),
            "wall_time_s": f"{time.perf_counter() - started:.3f}"}
    flow = FlowTrace(columns, meta)
    path = _out_path(cfg, out_dir, "trace", "trace_be.csv")
    write_trace(flow, path)
    print(f"flow-be: {len(flow)} rows, stop={trace.stop_reason}, wrote {path}")
    return 0


def cmd_flow_bundle(cfg: dict, out_dir: str | None) -> int:
    geometry = cfg["geometry"]
    params = cfg.get("params", {})
    num = cfg.get("numerics", {})
    if geometry != "heisenberg":
        raise ConfigError("flow-bundle currently drives the flat-base circle-bundle "
                          "configuration; use geometry 'heisenberg'")
    n = int(params.get("n", 1))
    if n != 1:
        raise ConfigError("flow-bundle uses a 2-dimensional base chart (n = 1)")
    g0, q0, a0 = heisenberg_bundle_fields(n, float(params.get("c", 1.0)),
                                          resolution=int(num.get("resolution", 16)))
    started = time.perf_counter()
    states, stop = bundle_integrate(BundleState(g0, q0, a0, 0.0),
                                    dt=float(num.get("dt", 5e-3)),
                                    t_end=float(num.get("t_end", 1.0)),
                                    record_every=int(num.get("record_every", 5)),
                                    c_cfl=float(num.get("c_cfl", 0.2)))
    columns = {
        "t": np.array([s.t for s in states]),
        "g_xx_origin": np.array([s.g.values[0, 0, 0, 0] for s in states]),
        "q_origin": np.array([s.Q.values[0, 0, 0, 0] for s in states]),
        "min_eig_g": np.array([float(np.min(np.linalg.eigvalsh(s.g.values))) for s in states]),
        "min_eig_q": np.array([float(np.min(np.linalg.eigvalsh(s.Q.values))) for s in states]),
    }
    meta = {"command": "flow-bundle", "geometry": geometry, "stop_reason": stop,
            "version": __version__, "config": json.dumps(cfg, sort_keys=True),
            "wall_time_s": f"{time.perf_counter() - started:.3f}"}
    flow = FlowTrace(columns, meta)
    path = _out_path(cfg, out_dir, "trace", "trace_bundle.csv")
    write_trace(flow, path)
    print(f"flow-bundle: {len(flow)} rows, stop={stop}, wrote {path}")
    return 0


def cmd_verify(cfg: dict, out_dir: str | None, only_check: str | None) -> int:
    names = list(CHECKS)
    if only_check is not None:
        if only_check not in CHECKS:
            raise ConfigError(f"unknown check '{only_check}'; choose from {names}")
        names = [only_check]
    elif "checks" in cfg:
        requested = cfg["checks"]
        bad = [c for c in requested if c not in CHECKS]
        if bad:
            raise ConfigError(f"unknown checks {bad}; choose from {names}")
        names = list(requested)
    results = parallel_map(run_check, names)
    for result in results:
        print(result.line())
    report = {
        "command": "verify",
        "version": __version__,
        "results": [{"name": r.name, "passed": r.passed, "detail": r.detail}
                    for r in results],
        "all_passed": all(r.passed for r in results),
    }
    path = _out_path(cfg, out_dir, "report", "verify.json")
    atomic_write_text(path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0 if report["all_passed"] else 4


def cmd_plot(cfg: dict, out_dir: str | None) -> int:
    inputs = cfg["inputs"]
    if isinstance(inputs, str):
        if not os.path.isdir(inputs):
            raise ConfigError(f"'inputs' directory {inputs!r} does not exist")
        paths = sorted(os.path.join(inputs, f) for f in os.listdir(inputs)
                       if f.endswith(".csv"))
    elif isinstance(inputs, list):
        paths = [str(p) for p in inputs]
    else:
        raise ConfigError("'inputs' must be a directory or a list of trace paths")
    if not paths:
        raise EmptyInput("no trace files to plot")
    traces = parallel_map(read_trace, paths)
    svg = render_phase_portrait(traces, cfg.get("style"))
    path = _out_path(cfg, out_dir, "plot", "portrait.svg")
    atomic_write_text(path, svg)
    print(f"plot: {len(traces)} traces, wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bundleflow",
        description="Ricci flow laboratory for invariant metrics on torus bundles")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--out", default=None, help="directory for relative output paths")
    parser.add_argument("--check", default=None,
                        help="run a single named verification check (verify command)")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg["command"] != args.command:
            raise ConfigError(
                f"config 'command' is {cfg['command']!r}, CLI asked for {args.command!r}")
        if args.out:
            os.makedirs(args.out, exist_ok=True)
        if args.command == "flow-ode":
            return cmd_flow_ode(cfg, args.out)
        if args.command == "curvature":
            return cmd_curvature(cfg, args.out)
        if args.command == "flow-be":
            return cmd_flow_be(cfg, args.out)
        if args.command == "flow-bundle":
            return cmd_flow_bundle(cfg, args.out)
        if args.command == "verify":
            return cmd_verify(cfg, args.out, args.check)
        return cmd_plot(cfg, args.out)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 2
    except (BundleFlowError, np.linalg.LinAlgError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
