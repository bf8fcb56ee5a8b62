"""Command line entry point.

    sgd-volterra SUBCOMMAND [--config PATH] [--out DIR] [--seed N] [--threads N]

Exit status: 0 on success (numerical divergence is only logged), 1 if some
requested output failed, 2 on usage or config errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, parse_file
from .plots import PlotError, emit_plot_script
from .runner import Runner

__all__ = ["main", "cli_run", "SUBCOMMANDS"]

SUBCOMMANDS = ("run", "simulate", "solve-volterra", "closed-form", "criticality", "rate-sweep",
               "compare", "plot")
# subcommand -> Runner steps, in order
_STEPS = {
    "simulate": ("do_traces",),
    "solve-volterra": ("do_volterra",),
    "closed-form": ("do_closed_form",),
    "criticality": ("do_criticality",),
    "rate-sweep": ("do_rate_sweep",),
    "compare": ("do_compare",),
}
_OUTPUT_STEPS = (
    ({"sgd", "streaming", "sde", "sme"}, "do_traces"),
    ({"volterra"}, "do_volterra"),
    ({"closed_form"}, "do_closed_form"),
    ({"criticality"}, "do_criticality"),
)
_NEEDS_CONFIG = {"run", "simulate", "solve-volterra", "closed-form", "criticality", "rate-sweep"}

log = logging.getLogger("sgd_volterra.harness")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sgd-volterra", description="SGD versus Volterra experiments on random least squares.")
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--config", type=Path, help="flat key = value experiment config")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    p.add_argument("--seed", type=int, help="base seed, overrides the config")
    p.add_argument("--threads", type=int, default=1, help="worker threads across seeds")
    return p


def _setup_logging(out: Path) -> logging.Handler:
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log", mode="a")
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    log.propagate = False
    return handler


def _plot(out: Path) -> int:
    jobs = []
    vol = sorted(out.glob("volterra*.csv"))
    if vol:
        jobs.append((vol, "volterra", out / "volterra.gp"))
    if (out / "comparison_traces.csv").is_file():
        jobs.append(([out / "comparison_traces.csv"], "comparison", out / "comparison.gp"))
    if (out / "rate_sweep.csv").is_file():
        jobs.append(([out / "rate_sweep.csv"], "rate_sweep", out / "rate_sweep.gp"))
    if not jobs:
        raise PlotError(f"no CSVs to plot under {out}")
    for csvs, kind, dest in jobs:
        emit_plot_script(csvs, kind, dest)
        log.info("wrote %s", dest)
    return 0


def cli_run(command: str, cfg: ExperimentConfig | None, out: Path, threads: int = 1) -> int:
    """Execute one subcommand; returns the exit status."""
    if command == "plot":
        try:
            return _plot(out)
        except PlotError as exc:
            log.error("%s", exc)
            print(f"error: {exc}", file=sys.stderr)
            return 1
    runner = Runner(cfg if cfg is not None else ExperimentConfig(), out, threads)
    if command == "run":
        steps = [step for outs, step in _OUTPUT_STEPS if outs & set(runner.cfg.outputs)]
        if "do_traces" in steps and "do_volterra" in steps:
            steps.append("do_compare")
    else:
        steps = list(_STEPS[command])
    failed = 0
    for step in steps:
        try:
            getattr(runner, step)()
        except Exception as exc:  # one failed output should not sink the others
            failed += 1
            log.error("%s failed: %s: %s", step, type(exc).__name__, exc)
            print(f"error: {step}: {exc}", file=sys.stderr)
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = None
    try:
        if args.config is not None:
            cfg = parse_file(args.config)
        elif args.command in _NEEDS_CONFIG:
            raise ConfigError(f"{args.command} requires --config")
        if cfg is not None and args.seed is not None:
            cfg.set("seed", args.seed)
    except ConfigError as exc:
        print(f"sgd-volterra: config error: {exc}", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("sgd-volterra: --threads must be >= 1", file=sys.stderr)
        return 2
    handler = _setup_logging(args.out)
    try:
        log.info("command %s, out %s", args.command, args.out)
        return cli_run(args.command, cfg, args.out, args.threads)
    finally:
        log.removeHandler(handler)
        handler.close()


if __name__ == "__main__":
    sys.exit(main())
