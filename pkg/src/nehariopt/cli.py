"""Command-line driver: solve, compare, sweep, and verify subcommands.

Configuration is JSON.  A minimal solve config names a scenario builder and
overrides whatever it needs::

    {
      "scenario": {"name": "example1", "g23": 6.0},
      "solver": {"algorithm": "rag", "alpha": 0.1}
    }

Command-line flags override config values.  Validation failures and a failed
line search exit nonzero; an honest out-of-iterations result exits zero with
``converged`` recorded as false.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, io, scenarios
from .errors import ConfigError, LineSearchFailed, NehariError
from .model import Problem
from .scenarios import NAMED_SCENARIOS, ScenarioSpec, build_problem, initial_field
from .solvers import ALGORITHMS, SolveResult, SolverOptions, run
from .verification import battery_report, run_battery

__all__ = ["RunConfig", "parse_config", "main"]

_SOLVER_KEYS = {f.name for f in dataclasses.fields(SolverOptions)}


@dataclasses.dataclass
class RunConfig:
    """Validated run description with all defaults filled in."""

    scenario: ScenarioSpec
    solver: SolverOptions
    subdivisions: int | None = None
    half_width: float | None = None
    out_dir: str = "out"
    write_history: bool = True
    write_fields: bool = True
    write_metadata: bool = True
    unscaled_interaction: bool = False
    sweep_parameter: str | None = None
    sweep_values: list[float] | None = None
    scenario_args: dict | None = None

    def effective(self) -> dict:
        """Full effective configuration for the metadata echo (no silent defaults)."""
        return {
            "scenario": self.scenario.to_config(),
            "solver": dataclasses.asdict(self.solver),
            "grid": {
                "half_width": self.half_width if self.half_width is not None
                else self.scenario.half_width,
                "subdivisions": self.subdivisions if self.subdivisions is not None
                else self.scenario.subdivisions,
            },
            "output": {
                "dir": self.out_dir,
                "history": self.write_history,
                "fields": self.write_fields,
                "metadata": self.write_metadata,
            },
            "compat": {"unscaled_interaction": self.unscaled_interaction},
            "sweep": (
                {"parameter": self.sweep_parameter, "values": self.sweep_values}
                if self.sweep_parameter else None
            ),
        }


def _scenario_from_section(section: dict) -> tuple[ScenarioSpec, dict]:
    if "inline" in section:
        try:
            return ScenarioSpec.from_config(section["inline"]), {}
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"scenario.inline: {exc}") from exc
    name = section.get("name")
    if name is None:
        raise ConfigError("scenario: provide either 'name' or 'inline'")
    if name not in NAMED_SCENARIOS:
        raise ConfigError(
            f"scenario.name: unknown scenario {name!r}; available: "
            + ", ".join(sorted(NAMED_SCENARIOS))
        )
    kwargs = {k: v for k, v in section.items() if k not in ("name", "initial", "seed")}
    try:
        spec = NAMED_SCENARIOS[name](**kwargs)
    except TypeError as exc:
        raise ConfigError(f"scenario {name!r}: {exc}") from exc
    if "initial" in section or "seed" in section:
        spec = dataclasses.replace(
            spec,
            initial=section.get("initial", spec.initial),
            seed=section.get("seed", spec.seed),
        )
    return spec, kwargs


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object")
    known = {"scenario", "solver", "grid", "output", "compat", "sweep"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown section {key!r}; expected one of {sorted(known)}")
    if "scenario" not in raw:
        raise ConfigError("missing required section 'scenario'")

    spec, scen_args = _scenario_from_section(raw["scenario"])

    solver_raw = dict(raw.get("solver", {}))
    for key in solver_raw:
        if key not in _SOLVER_KEYS:
            raise ConfigError(
                f"solver.{key}: unknown option; expected one of {sorted(_SOLVER_KEYS)}"
            )
    try:
        solver = SolverOptions(**solver_raw)
    except ConfigError as exc:
        raise ConfigError(f"solver: {exc}") from exc

    grid_raw = raw.get("grid", {})
    out_raw = raw.get("output", {})
    compat = raw.get("compat", {})
    sweep = raw.get("sweep") or {}
    cfg = RunConfig(
        scenario=spec,
        solver=solver,
        subdivisions=grid_raw.get("subdivisions"),
        half_width=grid_raw.get("half_width"),
        out_dir=out_raw.get("dir", "out"),
        write_history=out_raw.get("history", True),
        write_fields=out_raw.get("fields", True),
        write_metadata=out_raw.get("metadata", True),
        unscaled_interaction=bool(compat.get("unscaled_interaction", False)),
        sweep_parameter=sweep.get("parameter"),
        sweep_values=sweep.get("values"),
        scenario_args=scen_args,
    )
    if cfg.subdivisions is not None:
        if cfg.subdivisions % 2 or cfg.subdivisions < 4:
            raise ConfigError(f"grid.subdivisions: must be even and >= 4, got {cfg.subdivisions}")
    return cfg


def _load_config(args) -> RunConfig:
    if args.config:
        cfg = parse_config(Path(args.config).read_text())
    else:
        raise ConfigError("--config PATH is required")
    overrides = {}
    if getattr(args, "algorithm", None):
        overrides["algorithm"] = args.algorithm
    if getattr(args, "alpha", None) is not None:
        overrides["alpha"] = args.alpha
    if getattr(args, "max_iter", None) is not None:
        overrides["max_iter"] = args.max_iter
    if getattr(args, "seed", None) is not None:
        overrides["rng_seed"] = args.seed
        cfg.scenario = dataclasses.replace(cfg.scenario, seed=args.seed)
    if overrides:
        cfg.solver = dataclasses.replace(cfg.solver, **overrides)
    if getattr(args, "mesh", None) is not None:
        cfg.subdivisions = args.mesh
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    if getattr(args, "compat_unscaled_ih", False):
        cfg.unscaled_interaction = True
    return cfg


def _build(cfg: RunConfig) -> tuple[Problem, np.ndarray]:
    problem = build_problem(
        cfg.scenario,
        subdivisions=cfg.subdivisions,
        half_width=cfg.half_width,
        unscaled_interaction=cfg.unscaled_interaction,
    )
    u0 = initial_field(cfg.scenario, problem, seed=cfg.solver.rng_seed)
    return problem, u0


def _write_run_artifacts(cfg: RunConfig, problem: Problem, result: SolveResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if cfg.write_history:
        io.write_history(out / "history.csv", result.history)
    if cfg.write_fields:
        io.write_field(out, result.final, problem.grid)
    if cfg.write_metadata:
        io.write_run_meta(out / "run_meta.json", {
            "config": cfg.effective(),
            "package_version": __version__,
            "numpy_version": np.__version__,
            "converged": result.converged,
            "diverged": result.diverged,
            "iterations": result.iterations,
            "final_residual": result.history[-1].residual,
            "final_energy": result.history[-1].energy,
            "wall_time_seconds": result.wall_time,
        })


def _cmd_solve(args) -> int:
    cfg = _load_config(args)
    problem, u0 = _build(cfg)
    out = Path(cfg.out_dir)
    try:
        result = run(problem, u0, cfg.solver)
    except LineSearchFailed as exc:
        history = exc.diagnostics.get("history", [])
        out.mkdir(parents=True, exist_ok=True)
        if cfg.write_history and history:
            io.write_history(out / "history.csv", history)
        io.write_run_meta(out / "run_meta.json", {
            "config": cfg.effective(),
            "error": f"line search failed: {exc}",
            "iterations": exc.diagnostics.get("iterations"),
        })
        print(f"error: {exc}", file=sys.stderr)
        return 3
    _write_run_artifacts(cfg, problem, result, out)
    status = "converged" if result.converged else ("diverged" if result.diverged else "max-iter")
    print(
        f"{cfg.scenario.name} [{cfg.solver.algorithm}] {status}: "
        f"iterations={result.iterations} residual={result.history[-1].residual:.3e} "
        f"energy={result.history[-1].energy:.12g} wall={result.wall_time:.2f}s"
    )
    return 0


def _cmd_compare(args) -> int:
    cfg = _load_config(args)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    for algo in algorithms:
        if algo not in ALGORITHMS:
            print(f"error: unknown algorithm {algo!r}", file=sys.stderr)
            return 2
    problem, u0 = _build(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    histories = {}
    for algo in algorithms:
        opts = dataclasses.replace(cfg.solver, algorithm=algo)
        row = {"algorithm": algo}
        try:
            result = run(problem, u0, opts)
            sub = out / algo
            _write_run_artifacts(cfg, problem, result, sub)
            row.update(
                iterations=result.iterations,
                converged=result.converged,
                diverged=result.diverged,
                final_residual=result.history[-1].residual,
                wall_time=result.wall_time,
            )
            histories[algo] = result.residuals
        except NehariError as exc:
            row.update(error=str(exc))
        summary.append(row)
        print(row)
    # Aligned residual histories for plotting, NaN-padded to a common length.
    if histories:
        longest = max(len(v) for v in histories.values())
        cols = [np.full(longest, np.nan) for _ in histories]
        for col, vals in zip(cols, histories.values()):
            col[: len(vals)] = vals
        table = np.column_stack([np.arange(longest), *cols])
        header = "n," + ",".join(histories)
        lines = ["# " + header]
        for r in table:
            lines.append(",".join(
                (str(int(r[0])),) + tuple(format(v, ".17g") for v in r[1:])
            ))
        (out / "residuals.csv").write_text("\n".join(lines) + "\n")
    io.write_run_meta(out / "compare_meta.json", {
        "config": cfg.effective(), "summary": summary,
    })
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if not cfg.sweep_parameter or cfg.sweep_values is None:
        print("error: config needs a 'sweep' section with 'parameter' and 'values'",
              file=sys.stderr)
        return 2
    name = cfg.scenario.name
    if name not in NAMED_SCENARIOS:
        print(f"error: sweeps need a named scenario, got {name!r}", file=sys.stderr)
        return 2
    base_args = dict(cfg.scenario_args or {})
    param = cfg.sweep_parameter

    def builder(value: float) -> ScenarioSpec:
        return NAMED_SCENARIOS[name](**{**base_args, param: value})

    rows = scenarios.sweep_coupling(
        builder, cfg.sweep_values, cfg.solver,
        subdivisions=cfg.subdivisions,
        seed=cfg.solver.rng_seed if cfg.solver.rng_seed is not None else 0,
    )
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_sweep(out / "sweep.csv", rows)
    io.write_run_meta(out / "sweep_meta.json", {"config": cfg.effective()})
    for row in rows:
        print(row)
    return 0


def _cmd_verify(args) -> int:
    results = run_battery(unscaled_interaction=getattr(args, "compat_unscaled_ih", False))
    print(battery_report(results))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = [dataclasses.asdict(r) | {"status": r.status} for r in results]
        (out / "verify.json").write_text(json.dumps(payload, indent=2) + "\n")
    return 0 if all(r.passed for r in results) else 1


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to a JSON run configuration")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--algorithm", choices=ALGORITHMS, help="override solver.algorithm")
    p.add_argument("--alpha", type=float, help="override solver.alpha")
    p.add_argument("--max-iter", type=int, dest="max_iter", help="override solver.max_iter")
    p.add_argument("--seed", type=int, help="seed for randomized initial guesses")
    p.add_argument("--mesh", type=int, help="override grid subdivisions M")
    p.add_argument("--compat-unscaled-ih", action="store_true", dest="compat_unscaled_ih",
                   help="reproduce the unweighted quartic-sum variant")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="nehariopt",
        description="Ground states of coupled cubic elliptic systems by "
                    "Riemannian optimization on the Nehari manifold.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("solve", _cmd_solve), ("compare", _cmd_compare), ("sweep", _cmd_sweep)):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "compare":
            p.add_argument("--algorithms", default="rsd,rag,nmrag",
                           help="comma-separated list to compare")
        p.set_defaults(fn=fn)
    pv = sub.add_parser("verify")
    pv.add_argument("--out", help="directory for the JSON report")
    pv.add_argument("--compat-unscaled-ih", action="store_true", dest="compat_unscaled_ih")
    pv.set_defaults(fn=_cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NehariError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
