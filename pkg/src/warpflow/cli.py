"""Command-line front end.

Subcommands write their numeric output as CSV and a JSON report of verdicts
into ``--out-dir`` (default ./out).  Exit codes: 0 all checks pass, 1 a check
failed, 2 usage or config error, 3 numerical failure, 4 only inconclusive
checks besides passes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConstructionError, DomainError, MalformedProfile, NumericalFailure, PreconditionViolation
from .flows import FlowConfig, MODES, run_flow
from .profiles import build_profile, ode_residual, write_profile_table
from .surface import parse_surface_spec
from .verification import (
    FAIL, INCONCLUSIVE, Verdict, check_limit_G, check_minkowski, check_monotone_G, isoperimetric_sweep,
)
from .warped_space import parse_space_spec, space_spec_string, validate_assumptions

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_INCONCLUSIVE = 4


class UsageError(Exception):
    pass


# ------------------------------------------------------------ JSON output
def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return "null" if not math.isfinite(x) else format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + _encode(x, indent, level + 1) for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, 17 significant digits, NaN as null."""
    return _encode(obj, 2, 0) + "\n"


@dataclass
class Report:
    command: str
    config: dict
    verdicts: list
    outputs: dict = field(default_factory=dict)
    steps: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def exit_code(self) -> int:
        statuses = {v.status for v in self.verdicts}
        if FAIL in statuses:
            return EXIT_FAIL
        if INCONCLUSIVE in statuses:
            return EXIT_INCONCLUSIVE
        return EXIT_PASS

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "pass": self.passed,
            "outputs": self.outputs,
            "steps": self.steps,
        }


def emit_report(report: Report, path) -> None:
    if not report.verdicts:
        raise UsageError("a report must contain at least one check")
    names = [v.name for v in report.verdicts]
    if len(set(names)) != len(names):
        raise UsageError("check names in a report must be unique")
    Path(path).write_text(dumps(report.to_dict()))


def load_report(path) -> Report:
    data = json.loads(Path(path).read_text())
    return Report(
        command=data["command"],
        config=data.get("config", {}),
        verdicts=[Verdict.from_dict(v) for v in data["verdicts"]],
        outputs=data.get("outputs", {}),
        steps=data.get("steps", {}),
    )


# ----------------------------------------------------------- run configs
_CONFIG_KEYS = {
    "space": str,
    "initial": str,
    "mode": str,
    "grid": int,
    "t_end": float,
    "cadence": float,
    "c_cfl": float,
    "h_floor": float,
    "v_max": float,
    "q_bhw": bool,
    "profile_rows": int,
    "tol_monotone_G": float,
    "tol_limit_G": float,
    "tol_area_law": float,
    "out_dir": str,
}
_REQUIRED = ("space", "initial", "mode", "grid", "t_end", "cadence")


def _convert(key: str, value: str):
    kind = _CONFIG_KEYS[key]
    if kind is bool:
        lowered = value.lower()
        if lowered not in ("true", "false", "1", "0", "yes", "no"):
            raise UsageError(f"{key}: expected a boolean, got {value!r}")
        return lowered in ("true", "1", "yes")
    try:
        return kind(value)
    except ValueError:
        raise UsageError(f"{key}: cannot parse {value!r} as {kind.__name__}") from None


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise UsageError(f"line {number}: expected 'key = value'")
        if key not in _CONFIG_KEYS:
            raise UsageError(f"line {number}: unknown key {key!r}")
        if key in out:
            raise UsageError(f"line {number}: duplicate key {key!r}")
        out[key] = _convert(key, value)
    missing = [k for k in _REQUIRED if k not in out]
    if missing:
        raise UsageError(f"missing config keys: {', '.join(missing)}")
    if out["mode"] not in MODES:
        raise UsageError(f"mode must be one of {MODES}")
    grid = out["grid"]
    if grid < 65 or grid % 2 == 0:
        raise UsageError(f"grid must be odd and >= 65, got {grid}")
    if not out["t_end"] > 0:
        raise UsageError("t_end must be positive")
    if not 0 < out["cadence"] <= out["t_end"]:
        raise UsageError("cadence must lie in (0, t_end]")
    return out


# -------------------------------------------------------------- commands
def _verdict_validate(report) -> list[Verdict]:
    out = []
    for cond, margin in sorted(report.margins.items()):
        context = {"verdict": bool(report.verdicts[cond.split("_")[0]])}
        out.append(Verdict.judge(f"assumption_{cond}", margin, 1e-10, context))
    return out


def cmd_space_validate(args) -> Report:
    space = parse_space_spec(args.space)
    rep = validate_assumptions(space, args.rmax, args.samples)
    config = {"space": space_spec_string(space), "r_max": args.rmax, "samples": args.samples}
    verdicts = _verdict_validate(rep)
    steps = {"monotonicity_violations": rep.monotonicity_violations}
    return Report("space validate", config, verdicts, steps=steps)


def cmd_profile(args, out_dir: Path) -> Report:
    space = parse_space_spec(args.space)
    r_lo = space.a if args.r_lo is None else args.r_lo
    table = build_profile(space, r_lo, args.r_hi, args.samples, weight=args.weight)
    path = out_dir / "profile.csv"
    write_profile_table(table, path)
    config = {"space": space_spec_string(space), "r_lo": r_lo, "r_hi": args.r_hi, "samples": args.samples,
              "weight": args.weight}
    verdicts = []
    if len(table) >= 64:
        res = ode_residual(table)
        verdicts.append(Verdict.judge("profile_ode_residual", -res, 1e-6, {"rows": len(table)}))
    mono = float(np.min(np.diff(table.xi)))
    verdicts.append(Verdict.judge("profile_xi_increasing", mono, 0.0, {"rows": len(table)}))
    return Report("profile", config, verdicts, outputs={"profile": path.name})


def _flow_verdicts(trace, cfg: dict) -> list[Verdict]:
    t = trace["t"]
    if cfg["mode"] == "imcf":
        law = float(np.max(np.abs(np.log(trace["area"]) - t - math.log(trace["area"][0]))))
        verdicts = [
            Verdict.judge("area_law", -law, cfg.get("tol_area_law", 1e-4), {"samples": len(t)}),
            check_monotone_G(trace, cfg.get("tol_monotone_G", 1e-5)),
            check_limit_G(trace, cfg.get("tol_limit_G", 1e-4)),
        ]
        if cfg.get("q_bhw"):
            q = trace["Q_bhw"]
            rate = np.diff(q) / np.diff(t)
            verdicts.append(Verdict.judge("monotone_Q_bhw", -float(np.max(rate)), cfg.get("tol_monotone_G", 1e-5),
                                          {"Q0": float(q[0]), "Q_end": float(q[-1])}))
        return verdicts
    rise = float(np.max(np.diff(trace["area"]) / np.diff(t)))
    scale = float(trace["area"][0])
    return [
        Verdict.judge("gmcf_area_nonincreasing", -rise / scale, 1e-8, {"samples": len(t)}),
        Verdict.judge("gmcf_umbilicity_nonincreasing", -float(np.max(np.diff(trace["umb_dev_max"]))), 1e-8,
                      {"umb_dev_end": float(trace["umb_dev_max"][-1])}),
    ]


def cmd_flow(args, out_dir: Path) -> tuple[Report, dict]:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    cfg = parse_config(text)
    if "out_dir" in cfg and args.out_dir is None:
        out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    space = parse_space_spec(cfg["space"])
    surface = parse_surface_spec(space, cfg["initial"], cfg["grid"])
    flow_cfg = FlowConfig(
        space=space, initial=surface, mode=cfg["mode"], grid=cfg["grid"], t_end=cfg["t_end"],
        cadence=cfg["cadence"], c_cfl=cfg.get("c_cfl", 0.2), h_floor=cfg.get("h_floor", 1e-8),
        v_max=cfg.get("v_max", 1e6), q_bhw=cfg.get("q_bhw", False), profile_rows=cfg.get("profile_rows", 2048),
    )
    trace_path = out_dir / "trace.csv"
    meta_path = out_dir / "run_metadata.json"
    try:
        trace = run_flow(flow_cfg)
    except (NumericalFailure, DomainError) as exc:
        partial = getattr(exc, "trace", None)
        if partial is not None and len(partial):
            partial.write_csv(trace_path)
            meta_path.write_text(dumps(partial.metadata))
        raise
    trace.write_csv(trace_path)
    meta_path.write_text(dumps(trace.metadata))
    verdicts = _flow_verdicts(trace, cfg)
    steps = {k: trace.metadata[k] for k in ("steps_accepted", "steps_rejected", "termination")}
    report = Report("flow", {k: cfg[k] for k in sorted(cfg)}, verdicts,
                    outputs={"trace": trace_path.name, "metadata": meta_path.name}, steps=steps)
    return report, {"out_dir": out_dir}


def cmd_check_minkowski(args) -> Report:
    space = parse_space_spec(args.space)
    surface = parse_surface_spec(space, args.surface, args.grid)
    verdict = check_minkowski(surface)
    config = {"space": space_spec_string(space), "surface": args.surface, "grid": surface.count}
    return Report("check minkowski", config, [verdict])


def cmd_sweep(args) -> Report:
    space = parse_space_spec(args.space)
    verdicts = isoperimetric_sweep(space, args.family, args.count, jobs=args.jobs)
    named = [Verdict(f"{v.name}[{i}]", v.residual, v.tolerance, v.passed, v.context, v.status)
             for i, v in enumerate(verdicts)]
    config = {"space": space_spec_string(space), "family": args.family, "count": args.count}
    return Report("sweep isoperimetric", config, named)


def cmd_report_merge(args) -> Report:
    verdicts = []
    sources = []
    for path in args.reports:
        try:
            rep = load_report(path)
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"cannot read report {path}: {exc}") from None
        stem = Path(path).stem if len(args.reports) > 1 else ""
        for v in rep.verdicts:
            name = f"{stem}/{v.name}" if stem else v.name
            verdicts.append(Verdict(name, v.residual, v.tolerance, v.passed, v.context, v.status))
        sources.append(str(path))
    return Report("report merge", {"sources": sources}, verdicts)


# ----------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="warpflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    space = sub.add_parser("space", help="warped space utilities")
    space_sub = space.add_subparsers(dest="action", required=True)
    validate = space_sub.add_parser("validate", help="grid check of the warp conditions")
    validate.add_argument("--space", required=True)
    validate.add_argument("--rmax", type=float, required=True)
    validate.add_argument("--samples", type=int, default=10_000)
    validate.add_argument("--out-dir", default=None)

    profile = sub.add_parser("profile", help="tabulate the radial-sphere profiles")
    profile.add_argument("--space", required=True)
    profile.add_argument("--r-lo", type=float, default=None)
    profile.add_argument("--r-hi", type=float, required=True)
    profile.add_argument("--samples", type=int, default=512)
    profile.add_argument("--weight", default=None, choices=["one", "weighted_iso", "phi_prime"])
    profile.add_argument("--out-dir", default=None)

    flow = sub.add_parser("flow", help="run a flow from a config file")
    flow.add_argument("--config", required=True)
    flow.add_argument("--out-dir", default=None)

    check = sub.add_parser("check", help="inequality checks on a single surface")
    check_sub = check.add_subparsers(dest="action", required=True)
    mink = check_sub.add_parser("minkowski")
    mink.add_argument("--space", required=True)
    mink.add_argument("--surface", required=True)
    mink.add_argument("--grid", type=int, default=257)
    mink.add_argument("--out-dir", default=None)

    sweep = sub.add_parser("sweep", help="brute-force competitor sweeps")
    sweep_sub = sweep.add_subparsers(dest="action", required=True)
    iso = sweep_sub.add_parser("isoperimetric")
    iso.add_argument("--space", required=True)
    iso.add_argument("--family", default="cos_bump:")
    iso.add_argument("--count", type=int, default=50)
    iso.add_argument("--jobs", type=int, default=1)
    iso.add_argument("--out-dir", default=None)

    report = sub.add_parser("report", help="report utilities")
    report_sub = report.add_subparsers(dest="action", required=True)
    merge = report_sub.add_parser("merge")
    merge.add_argument("reports", nargs="+")
    merge.add_argument("--out", default=None)
    merge.add_argument("--out-dir", default=None)
    return parser


def _error(code: int, exc: BaseException) -> int:
    line = {"error": type(exc).__name__, "exit": code, "message": str(exc)}
    print(json.dumps(line, sort_keys=True), file=sys.stderr)
    return code


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out_dir = Path(args.out_dir) if getattr(args, "out_dir", None) else Path("out")
    start = time.perf_counter()
    try:
        extra = {}
        if args.command == "space":
            report = cmd_space_validate(args)
        elif args.command == "profile":
            out_dir.mkdir(parents=True, exist_ok=True)
            report = cmd_profile(args, out_dir)
        elif args.command == "flow":
            report, extra = cmd_flow(args, out_dir)
            out_dir = extra.get("out_dir", out_dir)
        elif args.command == "check":
            report = cmd_check_minkowski(args)
        elif args.command == "sweep":
            report = cmd_sweep(args)
        else:
            report = cmd_report_merge(args)
    except (UsageError, ConstructionError, MalformedProfile, PreconditionViolation) as exc:
        return _error(EXIT_USAGE, exc)
    except (NumericalFailure, DomainError, OSError) as exc:
        return _error(EXIT_NUMERICAL, exc)
    elapsed = time.perf_counter() - start
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        target = Path(args.out) if getattr(args, "out", None) else out_dir / "report.json"
        emit_report(report, target)
        # wall-clock lives apart from the report so reports stay byte-identical
        (out_dir / "timing.json").write_text(dumps({"command": report.command, "wall_clock_s": elapsed}))
    except UsageError as exc:
        return _error(EXIT_USAGE, exc)
    except OSError as exc:
        return _error(EXIT_NUMERICAL, exc)
    print(f"{report.command}: {'pass' if report.passed else 'fail'} "
          f"({len(report.verdicts)} checks) -> {target}", file=sys.stderr)
    return report.exit_code()


def main(argv=None) -> int:
    return run_command(argv)


if __name__ == "__main__":
    sys.exit(main())
