"""Command-line front end: ``mixedstep simulate|compare|stability``.

Exit codes: 0 success, 2 validation error, 3 file I/O error,
4 Newton-Raphson non-convergence in the reference integrator.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .analysis import equivalence_residuals, stability_report
from .integrators import simulate
from .loading import (
    AnalyticSine,
    ForcingRecord,
    Interpretation,
    RecordError,
    parse_record,
    truncate,
)
from .model import (
    InitialConditions,
    InvalidParams,
    OscillatorParams,
    SimulationResult,
    TimeGrid,
    has_errors,
    validate_params,
)
from .postprocess import PlotKind, emit_plot, export_csv, hysteresis, read_csv
from .reference_newmark import NewmarkSettings, run_reference

log = logging.getLogger("mixedstep")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NONCONVERGENCE = 0, 2, 3, 4

METHODS = ("extended_hamilton", "newmark", "both")
FILE_STEM = {"extended-hamilton": "extended_hamilton", "newmark": "newmark"}


class ConfigError(ValueError):
    pass


class IOFailure(OSError):
    pass


DEFAULTS = {
    "model": {"mass": None, "damping": 0.0, "stiffness": None, "flexibility": None, "fy": None, "eta": None},
    "grid": {"dt": None, "analysis_time": None},
    "forcing": {"sine": None, "record": None, "scale": 1.0, "interpretation": "direct_force", "duration": None},
    "initial": {"u0": 0.0, "v0": 0.0, "i0": 0.0, "u1_0": 0.0},
    "method": "extended_hamilton",
    "output": {"dir": None, "plot": False},
}


@dataclass
class RunConfig:
    params: OscillatorParams
    grid: TimeGrid
    forcing: ForcingRecord
    initial: InitialConditions
    method: str
    out_dir: Optional[Path]
    plot: bool


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def load_config_file(path: Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IOFailure(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    rec = (data.get("forcing") or {}).get("record")
    if rec is not None and not Path(rec).is_absolute():
        data["forcing"]["record"] = str((Path(path).parent / rec).resolve())
    return data


def _flag_overrides(ns: argparse.Namespace) -> dict:
    over: dict = {}

    def put(section, key, value):
        if value is not None:
            over.setdefault(section, {})[key] = value

    put("model", "mass", ns.mass)
    put("model", "damping", ns.damping)
    if ns.stiffness is not None:
        put("model", "stiffness", ns.stiffness)
        over["model"]["flexibility"] = None
    if ns.flexibility is not None:
        put("model", "flexibility", ns.flexibility)
        over["model"]["stiffness"] = None
    put("model", "fy", ns.fy)
    put("model", "eta", ns.eta)
    put("grid", "dt", ns.dt)
    put("grid", "analysis_time", ns.analysis_time)
    if ns.sine is not None:
        amp, omega, dur = ns.sine
        over.setdefault("forcing", {}).update(sine={"amplitude": amp, "omega": omega, "duration": dur}, record=None)
    if ns.record is not None:
        over.setdefault("forcing", {}).update(record=str(Path(ns.record).resolve()), sine=None)
    put("forcing", "scale", ns.scale)
    put("forcing", "duration", ns.duration)
    if ns.as_ground_accel:
        put("forcing", "interpretation", "ground_acceleration")
    put("initial", "u0", ns.u0)
    put("initial", "v0", ns.v0)
    put("initial", "i0", ns.i0)
    if ns.method is not None:
        over["method"] = ns.method
    put("output", "dir", ns.out)
    if ns.plot:
        put("output", "plot", True)
    return over


def _num(section: dict, key: str, required: bool = False) -> Optional[float]:
    val = section.get(key)
    if val is None:
        if required:
            raise ConfigError(f"missing required value: {key}")
        return None
    try:
        out = float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be numeric, got {val!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{key} must be finite")
    return out


def build_config(raw: dict) -> RunConfig:
    model, grid, forcing = raw["model"], raw["grid"], raw["forcing"]
    m = _num(model, "mass", required=True)
    c = _num(model, "damping") or 0.0
    k, a = _num(model, "stiffness"), _num(model, "flexibility")
    if (k is None) == (a is None):
        raise ConfigError("give exactly one of stiffness or flexibility")
    if k is not None:
        if k <= 0:
            raise ConfigError(f"stiffness must be > 0 (got {k})")
        a = 1.0 / k
    params = OscillatorParams(m=m, c=c, a=a, fy=_num(model, "fy"), eta=_num(model, "eta"))

    h = _num(grid, "dt", required=True)
    total = _num(grid, "analysis_time", required=True)
    if not (h > 0) or total < 0:
        raise ConfigError("dt must be > 0 and analysis_time >= 0")
    n = int(round(total / h))
    if abs(n * h - total) > h:
        raise ConfigError("analysis_time is not compatible with dt")
    tgrid = TimeGrid(h=h, n_steps=n)

    sine, record = forcing.get("sine"), forcing.get("record")
    if sine is not None and record is not None:
        raise ConfigError("forcing: give either sine or record, not both")
    if sine is not None:
        kind = AnalyticSine(
            amplitude=_num(sine, "amplitude", required=True),
            angular_frequency=_num(sine, "omega", required=True),
            duration=_num(sine, "duration", required=True),
        )
        rec = ForcingRecord(kind)
    elif record is not None:
        try:
            text = Path(record).read_text()
        except OSError as exc:
            raise IOFailure(f"cannot read record {record}: {exc}") from exc
        try:
            rec = parse_record(text)
        except RecordError as exc:
            raise ConfigError(f"record {record}: {exc}") from exc
    else:
        rec = ForcingRecord(AnalyticSine(0.0, 0.0, 0.0))
    try:
        interp = Interpretation(forcing.get("interpretation", "direct_force"))
    except ValueError:
        raise ConfigError(f"unknown forcing interpretation {forcing.get('interpretation')!r}") from None
    rec = replace(rec, scale=_num(forcing, "scale") if forcing.get("scale") is not None else 1.0,
                  interpretation=interp)
    cutoff = _num(forcing, "duration")
    if cutoff is not None:
        try:
            rec = truncate(rec, cutoff)
        except RecordError as exc:
            raise ConfigError(str(exc)) from exc

    init = raw["initial"]
    ic = InitialConditions(
        u0=_num(init, "u0") or 0.0,
        v0=_num(init, "v0") or 0.0,
        i0=_num(init, "i0") or 0.0,
        u1_0=_num(init, "u1_0") or 0.0,
    )
    method = str(raw.get("method", "extended_hamilton")).replace("-", "_")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    out = raw["output"].get("dir")
    return RunConfig(params, tgrid, rec, ic, method, Path(out) if out else None, bool(raw["output"].get("plot")))


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    raw = copy.deepcopy(DEFAULTS)
    if ns.config:
        raw = _merge(raw, load_config_file(ns.config))
    raw = _merge(raw, _flag_overrides(ns))
    return build_config(raw)


def check_params(cfg: RunConfig) -> None:
    diags = validate_params(cfg.params, cfg.grid if cfg.grid.n_steps else None)
    for d in diags:
        print(str(d), file=sys.stderr)
    if has_errors(diags):
        raise ConfigError("parameter validation failed")
    try:
        cfg.initial.require_valid(cfg.params)
    except InvalidParams as exc:
        raise ConfigError(str(exc)) from exc


# -- runs ------------------------------------------------------------------

def run_methods(cfg: RunConfig) -> list[SimulationResult]:
    runs = []
    if cfg.method in ("extended_hamilton", "both"):
        runs.append(simulate(cfg.params, cfg.grid, cfg.forcing, cfg.initial))
    if cfg.method in ("newmark", "both"):
        runs.append(run_reference(cfg.params, cfg.grid, cfg.forcing, cfg.initial, NewmarkSettings()))
    return runs


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def summary_text(runs: list[SimulationResult]) -> str:
    lines = []
    for res in runs:
        fin = res.final
        lines.append(f"[{res.method}]")
        lines.append(f"  steps          : {res.grid.n_steps} (h = {res.grid.h:.6g})")
        lines.append(f"  u(t_N)         : {fin.u:.10e}  ({fin.u * 1e3:.4f} milli)")
        lines.append(f"  u1_hat(t_N)    : {fin.u1_hat:.10e}  ({fin.u1_hat * 1e3:.4f} milli)")
        lines.append(f"  p_hat(t_N)     : {fin.p_hat:.10e}  ({fin.p_hat * 1e3:.4f} milli)")
        lines.append(f"  max |u|        : {np.abs(res.column('u')).max():.10e}")
        n_plastic = sum(1 for b in res.branch_labels if b.value != "Elastic")
        lines.append(f"  plastic steps  : {n_plastic}")
        if res.nonconverged_steps:
            lines.append(f"  NON-CONVERGED  : {len(res.nonconverged_steps)} steps")
    if len(runs) == 2:
        lines.append(difference_text(difference_metrics(runs[0], runs[1])))
    return "\n".join(lines) + "\n"


def difference_metrics(res: SimulationResult, ref: SimulationResult) -> dict:
    """Displacement difference of ``res`` against ``ref``, normalized by ``ref``'s peak."""
    if res.grid.n_steps != ref.grid.n_steps or not math.isclose(res.grid.h, ref.grid.h, rel_tol=1e-9):
        raise ConfigError("runs are on different time grids")
    u, u_ref = res.column("u"), ref.column("u")
    d = u - u_ref
    peak = float(np.abs(u_ref).max())
    denom = peak if peak > 0 else 1.0
    return {
        "peak_displacement": peak,
        "max_difference": float(np.abs(d).max()),
        "rms_difference": float(np.sqrt(np.mean(d**2))),
        "max_difference_over_peak": float(np.abs(d).max() / denom),
        "rms_difference_over_peak": float(np.sqrt(np.mean(d**2)) / denom),
    }


def difference_text(metrics: dict) -> str:
    return (
        "[difference]\n"
        f"  peak |u| (reference)  : {metrics['peak_displacement']:.10e}\n"
        f"  max |du| / peak       : {metrics['max_difference_over_peak']:.6e}\n"
        f"  rms du / peak         : {metrics['rms_difference_over_peak']:.6e}"
    )


def write_outputs(cfg: RunConfig, runs: list[SimulationResult], out_dir: Path) -> None:
    for res in runs:
        _write(out_dir / f"{FILE_STEM[res.method]}.csv", export_csv(res, hysteresis(res) if res.grid.n_steps else None))
    _write(out_dir / "summary.txt", summary_text(runs))
    if cfg.plot and cfg.grid.n_steps:
        _write(out_dir / "history.svg", emit_plot(runs, kind=PlotKind.HISTORY))
        _write(out_dir / "hysteresis.svg", emit_plot(runs, kind=PlotKind.HYSTERESIS))


def _exit_for(runs: list[SimulationResult]) -> int:
    bad = [r for r in runs if r.nonconverged_steps]
    if bad:
        steps = ", ".join(str(s) for s in bad[0].nonconverged_steps[:10])
        print(f"error: Newton-Raphson failed to converge at steps {steps}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def _sweep_cases(cfg: RunConfig, spec: str) -> list[tuple[str, RunConfig]]:
    key, _, vals = spec.partition("=")
    try:
        values = [float(v) for v in vals.split(",") if v]
    except ValueError:
        raise ConfigError(f"bad sweep values in {spec!r}") from None
    if not values:
        raise ConfigError("sweep needs at least one value")
    cases = []
    for v in values:
        if key == "dt":
            total = cfg.grid.h * cfg.grid.n_steps
            case = replace(cfg, grid=TimeGrid.from_duration(v, total))
        elif key == "eta_c":
            case = replace(cfg, params=replace(cfg.params, eta=v, c=v))
        elif key in ("eta", "c"):
            case = replace(cfg, params=replace(cfg.params, **{key: v}))
        else:
            raise ConfigError(f"cannot sweep over {key!r} (use dt, eta, c or eta_c)")
        cases.append((f"{key}={v:g}", case))
    return cases


def _run_case(cfg: RunConfig) -> list[SimulationResult]:
    return run_methods(cfg)


def cmd_simulate(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns)
    cases = _sweep_cases(cfg, ns.sweep) if ns.sweep else [("", cfg)]
    for _, case in cases:
        check_params(case)
    if ns.jobs > 1 and len(cases) > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            all_runs = list(pool.map(_run_case, [c for _, c in cases]))
    else:
        all_runs = [_run_case(c) for _, c in cases]

    status = EXIT_OK
    for (name, case), runs in zip(cases, all_runs):
        if name:
            print(f"=== {name} ===")
        print(summary_text(runs), end="")
        if case.out_dir is not None:
            write_outputs(case, runs, case.out_dir / name if name else case.out_dir)
        status = max(status, _exit_for(runs))
    return status


def cmd_compare(ns: argparse.Namespace) -> int:
    if ns.csv:
        texts = []
        for path in ns.csv:
            try:
                texts.append(Path(path).read_text())
            except OSError as exc:
                raise IOFailure(f"cannot read {path}: {exc}") from exc
        try:
            res, ref = (read_csv(t, method=m) for t, m in zip(texts, ("extended-hamilton", "newmark")))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        metrics = difference_metrics(res, ref)
        out_dir = Path(ns.out) if ns.out else None
        runs = [res, ref]
        plot = ns.plot
    else:
        cfg = replace(resolve_config(ns), method="both")
        check_params(cfg)
        runs = run_methods(cfg)
        metrics = difference_metrics(runs[0], runs[1])
        out_dir = cfg.out_dir
        plot = True
    text = difference_text(metrics) + "\n"
    print(text, end="")
    if out_dir is not None:
        _write(out_dir / "compare.txt", text)
        _write(out_dir / "compare.json", json.dumps(metrics, indent=2, sort_keys=True) + "\n")
        if not ns.csv:
            for res in runs:
                _write(out_dir / f"{FILE_STEM[res.method]}.csv", export_csv(res))
        if plot and runs[0].grid.n_steps:
            _write(out_dir / "history_overlay.svg", emit_plot(runs, kind=PlotKind.HISTORY))
            _write(out_dir / "hysteresis_overlay.svg", emit_plot(runs, kind=PlotKind.HYSTERESIS))
    return _exit_for(runs)


def cmd_stability(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns)
    check_params(cfg)
    rep = stability_report(cfg.params, cfg.grid.h)
    doc = json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n"
    if ns.format in ("text", "both"):
        print(rep.to_text(), end="")
    if ns.format in ("json", "both"):
        print(doc, end="")
    if cfg.out_dir is not None:
        _write(cfg.out_dir / "stability.txt", rep.to_text())
        _write(cfg.out_dir / "stability.json", doc)
    return EXIT_OK


def cmd_residuals(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns)
    check_params(cfg)
    res = simulate(cfg.params, cfg.grid, cfg.forcing, cfg.initial)
    motion, velocity = equivalence_residuals(res, cfg.params)
    elastic = np.array([b.value == "Elastic" for b in res.branch_labels])
    print(f"max motion residual   : {motion.max() if motion.size else 0.0:.3e}")
    print(f"max velocity residual : {velocity.max() if velocity.size else 0.0:.3e}")
    print(f"elastic steps         : {int(elastic.sum())} / {elastic.size}")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", nargs="?", help="YAML run configuration")
    g = p.add_argument_group("model")
    g.add_argument("--mass", type=float)
    g.add_argument("--damping", type=float)
    kx = g.add_mutually_exclusive_group()
    kx.add_argument("--stiffness", type=float)
    kx.add_argument("--flexibility", type=float)
    g.add_argument("--fy", type=float, help="yield force")
    g.add_argument("--eta", type=float, help="regularizing viscosity")
    t = p.add_argument_group("time grid")
    t.add_argument("--dt", type=float)
    t.add_argument("--analysis-time", type=float, dest="analysis_time")
    f = p.add_argument_group("forcing")
    fx = f.add_mutually_exclusive_group()
    fx.add_argument("--sine", type=float, nargs=3, metavar=("A", "OMEGA", "DUR"))
    fx.add_argument("--record", metavar="PATH", help="two-column time/value file")
    f.add_argument("--scale", type=float)
    f.add_argument("--as-ground-accel", action="store_true", help="apply f = -m * scale * value")
    f.add_argument("--duration", type=float, help="zero the forcing after this time")
    i = p.add_argument_group("initial conditions")
    i.add_argument("--u0", type=float)
    i.add_argument("--v0", type=float)
    i.add_argument("--i0", type=float, help="impulse applied before t = 0")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--plot", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixedstep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one or both integrators")
    _add_common(sim)
    sim.add_argument("--sweep", metavar="KEY=V1,V2,...", help="repeat over dt, eta, c or eta_c")
    sim.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    sim.set_defaults(func=cmd_simulate)

    cmp_ = sub.add_parser("compare", help="mixed scheme against the Newmark reference")
    _add_common(cmp_)
    cmp_.add_argument("--csv", nargs=2, metavar=("RESULT", "REFERENCE"), help="compare two exported CSVs instead")
    cmp_.set_defaults(func=cmd_compare)

    stab = sub.add_parser("stability", help="spectral radii and damping bounds")
    _add_common(stab)
    stab.add_argument("--format", choices=("text", "json", "both"), default="both")
    stab.set_defaults(func=cmd_stability)

    resid = sub.add_parser("residuals", help="per-step identity residuals of the mixed scheme")
    _add_common(resid)
    resid.set_defaults(func=cmd_residuals)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return ns.func(ns)
    except IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, InvalidParams, RecordError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
