"""Command-line harness: simulate, w1, verify, check-assumptions.

Exit codes: 0 success (and all selected verdicts passing), 2 input or
validation error, 3 runtime failure during integration or solving.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import diagnostics as diag
from .config import ConfigError, RunConfig, derive_seed, load_config
from .dynamics import IntegrationError, integrate
from .io import (FormatError, load_measure_csv, load_snapshot, save_moments_csv,
                 save_series_csv, save_snapshot, write_manifest, write_report_json)
from .kinetic import sample_initial
from .model import ValidationError, check_assumptions, cstar
from .transport import DiscreteMeasure, GroundMetric, w1 as w1_solve

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3

SUITES = ("decay", "gamma", "support", "stability", "meanfield", "flocking", "all")


def _outdir(args, cfg_path: str) -> str:
    out = args.out or os.path.join("runs", os.path.splitext(os.path.basename(cfg_path))[0])
    os.makedirs(out, exist_ok=True)
    return out


def _write_resolved(outdir: str, config: RunConfig) -> None:
    with open(os.path.join(outdir, "config.resolved.json"), "w") as fh:
        fh.write(config.resolved_json())


def _simulate(config: RunConfig, outdir: str):
    state = sample_initial(config.initial)
    traj = integrate(state, config.model, config.integrator)
    save_moments_csv(os.path.join(outdir, "moments.csv"), traj)
    for idx in range(0, len(traj), config.snapshot_stride):
        s = traj.states[idx]
        save_snapshot(os.path.join(outdir, f"snapshot_{idx:06d}.csv"),
                      s, config.model, config.seed)
    if (len(traj) - 1) % config.snapshot_stride:
        save_snapshot(os.path.join(outdir, f"snapshot_{len(traj)-1:06d}.csv"),
                      traj.states[-1], config.model, config.seed)
    return traj


def cmd_simulate(args) -> int:
    config = load_config(args.config, args.seed)
    outdir = _outdir(args, args.config)
    _write_resolved(outdir, config)
    try:
        _simulate(config, outdir)
    except IntegrationError as exc:
        write_manifest(outdir, {"status": "failed", "error": str(exc)})
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    write_manifest(outdir, {"status": "ok"})
    return EXIT_OK


def _load_any_measure(path: str, metric_name: str):
    try:
        state, _ = load_snapshot(path)
        points = np.concatenate([state.positions, state.velocities], axis=1)
        mu = DiscreteMeasure(points, np.full(state.n, 1.0 / state.n))
        return mu, state.d
    except FormatError:
        mu = load_measure_csv(path)
        return mu, mu.points.shape[1] // 2


def cmd_w1(args) -> int:
    mu, d_a = _load_any_measure(args.file_a, args.metric)
    nu, d_b = _load_any_measure(args.file_b, args.metric)
    if mu.points.shape[1] != nu.points.shape[1]:
        print("dimension mismatch between input measures", file=sys.stderr)
        return EXIT_INPUT
    metric = (GroundMetric("euclidean") if args.metric == "euclidean"
              else GroundMetric("sum_of_norms", x_dim=d_a))
    value, _ = w1_solve(mu, nu, metric)
    print(f"{value:.12g}" if value else "0.000000000000")
    return EXIT_OK


def _assumption_gate(config: RunConfig) -> tuple[bool, object]:
    radius = 2.0 * max(getattr(config.initial, "radius_x", 1.0),
                       getattr(config.initial, "radius_v", 1.0),
                       getattr(config.initial, "truncation_x", 0.0),
                       getattr(config.initial, "truncation_v", 0.0), 1.0)
    report = check_assumptions(config.model, sample_budget=2000, radius=radius,
                               seed=derive_seed(config.seed, "assumptions"))
    return report.all_passed, report


def _run_decay(config, traj, outdir):
    verify = config.verify
    phi_eff = diag.effective_phi_star(config.model, traj)
    model_eff = config.model
    cs = (2.0 ** model_eff.alpha * phi_eff * model_eff.g_star
          - math.sqrt(2.0) * model_eff.f_star)
    env = diag.DecayEnvelope(alpha=model_eff.alpha, cstar=cs, g0=traj.moments[0].Gf)
    report = diag.verify_decay(traj, env, rel_tol=verify.get("rel_tol", 1e-3))
    report.details["phi_star_effective"] = phi_eff
    series = os.path.join(outdir, "decay_series.csv")
    save_series_csv(series, ["t", "Gf", "bound"], report.series)
    write_report_json(os.path.join(outdir, "decay_report.json"), report,
                      os.path.basename(series))
    return report.passed


def _run_gamma(config, traj, outdir):
    window = config.verify.get("gamma_window", config.integrator.t_end / 5.0)
    report = diag.verify_gamma_bound(traj, window,
                                     config.verify.get("plateau_frac", 0.05))
    series = os.path.join(outdir, "gamma_series.csv")
    save_series_csv(series, ["t", "Gamma", "sup"], report.series)
    write_report_json(os.path.join(outdir, "gamma_report.json"), report,
                      os.path.basename(series))
    return report.passed


def _run_support(config, traj, outdir):
    _, c, report = diag.fit_support_envelope(traj, config.verify.get("c_cap", 10.0))
    series = os.path.join(outdir, "support_series.csv")
    save_series_csv(series, ["t", "R", "envelope"], report.series)
    write_report_json(os.path.join(outdir, "support_report.json"), report,
                      os.path.basename(series))
    return report.passed


def _run_flocking(config, traj, outdir):
    rows = diag.flocking_study(traj, config.metric)
    series = os.path.join(outdir, "flocking_series.csv")
    save_series_csv(series, ["t", "w1_dirac", "sqrt_gf"], rows)
    passed = all(d <= s + 1e-9 for _, d, s in rows)
    payload = {"name": "flocking", "pass": passed,
               "final_distance": rows[-1][1], "series": os.path.basename(series)}
    with open(os.path.join(outdir, "flocking_report.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return passed


def _run_stability(config, outdir):
    params = config.verify.get("stability", {})
    perturbations = params.get("perturbations", [1e-3, 1e-2])
    times = params.get("times", [1.0, 2.0, 3.0, 4.0, 5.0])
    all_rows = []
    fitted_c = 0.0
    passed = True
    for delta in perturbations:
        rows, envelope, w0 = diag.stability_study(
            config.initial, float(delta), config.model, config.integrator,
            [float(t) for t in times], config.metric,
            seed=derive_seed(config.seed, "perturbation"))
        for (t, wt, ratio), env in zip(rows, envelope):
            all_rows.append((delta, t, wt, ratio, env))
            if t > 0 and ratio > 0:
                fitted_c = max(fitted_c, math.log(ratio) / t)
            passed = passed and math.isfinite(ratio)
    series = os.path.join(outdir, "stability_series.csv")
    save_series_csv(series, ["perturbation", "t", "w1", "ratio", "envelope"], all_rows)
    payload = {"name": "stability", "pass": passed, "fitted_rate": fitted_c,
               "series": os.path.basename(series)}
    with open(os.path.join(outdir, "stability_report.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return passed


def _run_meanfield(config, outdir, threads=1):
    params = config.verify.get("meanfield", {})
    n_list = [int(n) for n in params.get("n_list", [64, 256, 1024])]
    t_eval = float(params.get("t_eval", 1.0))
    nseeds = int(params.get("seeds", 5))
    cfg = replace(config.integrator, observer_stride=10 ** 9)

    def one_seed(k):
        spec = replace(config.initial, seed=derive_seed(config.seed, f"meanfield:{k}"))
        table = diag.meanfield_study(spec, n_list, config.model, cfg, t_eval,
                                     metric=config.metric)
        return table.rows

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_seed = list(pool.map(one_seed, range(nseeds)))
    else:
        per_seed = [one_seed(k) for k in range(nseeds)]

    rows = []
    means = []
    for idx, n in enumerate(n_list[:-1]):
        vals = [per_seed[k][idx][2] for k in range(nseeds)]
        wall = sum(per_seed[k][idx][3] for k in range(nseeds))
        mean = float(np.mean(vals))
        means.append(mean)
        rows.append((n, t_eval, mean, wall))
    passed = all(b < a for a, b in zip(means, means[1:]))
    series = os.path.join(outdir, "meanfield_table.csv")
    save_series_csv(series, ["N", "t", "w1_mean", "wall_seconds"], rows)
    payload = {"name": "meanfield", "pass": passed, "seeds": nseeds,
               "reference": f"largest cloud N={n_list[-1]}",
               "series": os.path.basename(series)}
    with open(os.path.join(outdir, "meanfield_report.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return passed


def cmd_verify(args) -> int:
    config = load_config(args.config, args.seed)
    outdir = _outdir(args, args.config)
    _write_resolved(outdir, config)
    if args.metric:
        metric = (GroundMetric("euclidean") if args.metric == "euclidean"
                  else GroundMetric("sum_of_norms", x_dim=config.model.dimension))
        config = replace(config, metric=metric)

    ok, report = _assumption_gate(config)
    if not ok:
        failing = [c.name for c in report.checks if not c.passed]
        print(f"assumption check failed: {', '.join(failing)}", file=sys.stderr)
        return EXIT_INPUT

    suites = SUITES[:-1] if args.suite == "all" else (args.suite,)
    needs_traj = any(s in suites for s in ("decay", "gamma", "support", "flocking"))
    results = {}
    try:
        if needs_traj:
            traj = _simulate(config, outdir)
        if "decay" in suites:
            results["decay"] = _run_decay(config, traj, outdir)
        if "gamma" in suites:
            results["gamma"] = _run_gamma(config, traj, outdir)
        if "support" in suites:
            results["support"] = _run_support(config, traj, outdir)
        if "flocking" in suites:
            results["flocking"] = _run_flocking(config, traj, outdir)
        if "stability" in suites:
            results["stability"] = _run_stability(config, outdir)
        if "meanfield" in suites:
            results["meanfield"] = _run_meanfield(config, outdir, args.threads)
    except IntegrationError as exc:
        write_manifest(outdir, {"status": "failed", "error": str(exc)})
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    write_manifest(outdir, {"status": "ok", "verdicts": results})
    for name, passed in results.items():
        print(f"{name}: {'pass' if passed else 'FAIL'}")
    return EXIT_OK if all(results.values()) else 1


def cmd_check_assumptions(args) -> int:
    config = load_config(args.config, args.seed)
    ok, report = _assumption_gate(config)
    for c in report.checks:
        print(f"{c.name}: {'pass' if c.passed else 'FAIL'} (value={c.value:.6g})")
    print(f"C* = {cstar(config.model):.6g}" if ok else "C* undefined (assumptions fail)")
    return EXIT_OK if ok else EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flocksim")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)

    p_sim = sub.add_parser("simulate", help="run the particle system, write snapshots")
    common(p_sim)

    p_w1 = sub.add_parser("w1", help="Wasserstein-1 distance between two files")
    p_w1.add_argument("file_a")
    p_w1.add_argument("file_b")
    p_w1.add_argument("--metric", choices=("euclidean", "sum"), default="euclidean")

    p_ver = sub.add_parser("verify", help="run a verification suite")
    common(p_ver)
    p_ver.add_argument("--suite", choices=SUITES, default="all")
    p_ver.add_argument("--metric", choices=("euclidean", "sum"), default=None)

    p_chk = sub.add_parser("check-assumptions", help="validate the model assumptions")
    common(p_chk)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"simulate": cmd_simulate, "w1": cmd_w1, "verify": cmd_verify,
                "check-assumptions": cmd_check_assumptions}
    try:
        return handlers[args.command](args)
    except (ConfigError, FormatError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IntegrationError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
