"""Gnuplot scripts for the CSVs the harness writes.

The scripts reference CSVs by path relative to the script, so an output
directory can be moved as a whole and rendered with ``gnuplot <script>``.
"""
from __future__ import annotations

import csv
import os
from pathlib import Path

__all__ = ["PlotError", "emit_plot_script", "FIGURE_KINDS"]

FIGURE_KINDS = ("volterra", "comparison", "rate_sweep")


class PlotError(FileNotFoundError):
    pass


def _rel(p: Path, base: Path) -> str:
    return os.path.relpath(p, base)


def _header(out: Path, title: str) -> list[str]:
    return [
        f"# {title}",
        "set datafile separator ','",
        "set terminal pngcairo size 1200,800",
        f"set output '{out.with_suffix('.png').name}'",
        "set key outside",
    ]


def _volterra(csvs, out):
    base = out.parent
    lines = _header(out, "psi(t) from the Volterra solver")
    lines += ["set logscale y", "set xlabel 'epochs t'", "set ylabel 'psi(t)'"]
    plots = [f"'{_rel(p, base)}' every ::1 using 1:2 with lines title '{p.stem}'" for p in csvs]
    lines.append("plot " + ", \\\n     ".join(plots))
    return lines


def _comparison(csvs, out):
    # one panel per stepsize, one curve per model plus the Volterra reference
    base = out.parent
    gammas, models = [], []
    for p in csvs:
        with open(p, newline="") as fh:
            for row in csv.DictReader(fh):
                if row["gamma"] not in gammas:
                    gammas.append(row["gamma"])
                if row["model"] not in models:
                    models.append(row["model"])
    src = _rel(csvs[0], base)
    lines = _header(out, "mean traces versus the Volterra limit, one panel per stepsize")
    lines += ["set logscale y", "set xlabel 'epochs t'", "set ylabel 'f'",
              f"set multiplot layout 1,{max(1, len(gammas))}"]
    for g in gammas:
        lines.append(f"set title 'gamma = {float(g):.4g}'")
        curves = [f"'{src}' using 1:(strcol(2) eq '{g}' && strcol(3) eq '{m}' ? $4 : NaN) "
                  f"with lines title '{m}'" for m in models]
        curves.append(f"'{src}' using 1:(strcol(2) eq '{g}' && strcol(3) eq '{models[0]}' ? $6 : NaN) "
                      "with lines dt 2 lw 2 title 'volterra'")
        lines.append("plot " + ", \\\n     ".join(curves))
    lines.append("unset multiplot")
    return lines


def _rate_sweep(csvs, out):
    base = out.parent
    gstar = None
    with open(csvs[0]) as fh:
        first = fh.readline()
        if first.startswith("# gamma_star"):
            gstar = float(first.split("=", 1)[1])
    src = _rel(csvs[0], base)
    lines = _header(out, "asymptotic decay rate versus stepsize")
    lines += ["set xlabel 'gamma'", "set ylabel 'rate'"]
    if gstar is not None:
        lines.append(f"set arrow from {gstar!r}, graph 0 to {gstar!r}, graph 1 nohead dt 2")
        lines.append(f"set label 'gamma*' at {gstar!r}, graph 0.95 offset 0.5,0")
    lines.append(f"plot '{src}' every ::1 using 1:2 with points pt 7 title 'fitted', \\\n"
                 f"     '{src}' every ::1 using 1:3 with lines title 'predicted'")
    return lines


def emit_plot_script(csv_paths, kind: str, out_path) -> Path:
    """Write a gnuplot script of the given ``kind`` for ``csv_paths``."""
    if kind not in FIGURE_KINDS:
        raise ValueError(f"figure kind must be one of {FIGURE_KINDS}")
    csvs = [Path(p) for p in csv_paths]
    if not csvs:
        raise PlotError(f"no CSV given for a {kind} plot")
    missing = [str(p) for p in csvs if not p.is_file()]
    if missing:
        raise PlotError(f"missing CSV: {', '.join(missing)}")
    out = Path(out_path)
    lines = {"volterra": _volterra, "comparison": _comparison, "rate_sweep": _rate_sweep}[kind](csvs, out)
    out.write_text("\n".join(lines) + "\n")
    return out
