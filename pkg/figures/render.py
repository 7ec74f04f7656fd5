"""Render publication-style figures from a simulation run directory.

Strictly a downstream consumer: every plotted number is read from the CSV
and JSON files the simulation harness wrote; nothing is recomputed.  Five
figure kinds are supported:

* ``decay``: velocity fluctuation against its decay bound, log scale
* ``gamma``: position fluctuation with its running supremum (plateau)
* ``support``: support radius with the fitted growth envelope
* ``meanfield``: W1 gap to the reference cloud versus N, log-log
* ``flocking``: W1 distance to the aligned limit versus sqrt(Gf)

Usage: python3 render.py --run DIR --kind NAME --out PATH
"""

import argparse
import csv
import json
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("decay", "gamma", "support", "meanfield", "flocking")
FIGSIZE = (6.0, 4.0)
DPI = 120


class SchemaError(ValueError):
    """An input file is missing or lacks a required column."""


def read_series(path, columns):
    if not os.path.exists(path):
        raise SchemaError(f"missing input file: {path}")
    with open(path) as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in columns if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        rows = [[float(row[c]) for c in columns] for row in reader]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return [list(col) for col in zip(*rows)]


def read_report(path):
    if not os.path.exists(path):
        return {}
    with open(path) as fh:
        return json.load(fh)


def new_axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def render_decay(run, ax):
    t, gf, bound = read_series(os.path.join(run, "decay_series.csv"),
                               ["t", "Gf", "bound"])
    ax.semilogy(t, [max(v, 1e-300) for v in gf], label="observed Gf")
    ax.semilogy(t, [max(v, 1e-300) for v in bound], "--", label="decay bound")
    report = read_report(os.path.join(run, "decay_report.json"))
    rate = report.get("details", {}).get("cstar")
    if rate is not None:
        ax.set_title(f"velocity fluctuation, rate {rate:.3g}")


def render_gamma(run, ax):
    t, gamma, sup = read_series(os.path.join(run, "gamma_series.csv"),
                                ["t", "Gamma", "sup"])
    ax.plot(t, gamma, label="Gamma")
    ax.plot(t, sup, "--", label="running supremum")


def render_support(run, ax):
    t, radius, env = read_series(os.path.join(run, "support_series.csv"),
                                 ["t", "R", "envelope"])
    ax.plot(t, radius, label="support radius")
    ax.plot(t, env, "--", label="fitted envelope")
    report = read_report(os.path.join(run, "support_report.json"))
    c = report.get("details", {}).get("C")
    if c is not None:
        ax.set_title(f"support radius, fitted C = {c:.3g}")


def render_meanfield(run, ax):
    n, _, gap, _ = read_series(os.path.join(run, "meanfield_table.csv"),
                               ["N", "t", "w1_mean", "wall_seconds"])
    ax.loglog(n, gap, "o-", label="W1 to reference")
    ax.set_xticks(n)
    ax.get_xaxis().set_major_formatter(matplotlib.ticker.ScalarFormatter())


def render_flocking(run, ax):
    t, dist, sqrt_gf = read_series(os.path.join(run, "flocking_series.csv"),
                                   ["t", "w1_dirac", "sqrt_gf"])
    ax.semilogy(t, [max(v, 1e-300) for v in dist], label="W1 to aligned limit")
    ax.semilogy(t, [max(v, 1e-300) for v in sqrt_gf], "--", label="sqrt(Gf)")


RENDERERS = {
    "decay": (render_decay, "t", "Gf"),
    "gamma": (render_gamma, "t", "Gamma"),
    "support": (render_support, "t", "radius"),
    "meanfield": (render_meanfield, "N", "W1"),
    "flocking": (render_flocking, "t", "distance"),
}


def render(run, kind, out):
    if kind not in RENDERERS:
        raise SchemaError(f"unknown figure kind {kind!r}")
    fn, xlabel, ylabel = RENDERERS[kind]
    fig, ax = new_axes(kind, xlabel, ylabel)
    fn(run, ax)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, metadata={"Software": None})
    plt.close(fig)


def main(argv=None):
    parser = argparse.ArgumentParser()
    parser.add_argument("--run", required=True, help="run directory to read")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        render(args.run, args.kind, args.out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
