"""File formats: snapshot CSV, moments CSV, reports, and run manifests.

Snapshots are plain-text CSV with a commented header carrying the particle
count, dimension, time stamp, a hash of the model, and the run seed.
Numbers serialize with 17 significant digits so a reload reproduces the
in-memory state bitwise.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os

import numpy as np

from .dynamics import ParticleState, Trajectory
from .model import ModelSpec
from .transport import DiscreteMeasure


class FormatError(ValueError):
    """Raised when an input file does not match its expected schema."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def model_hash(model: ModelSpec) -> str:
    payload = json.dumps(dataclasses.asdict(model), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def save_snapshot(path: str, state: ParticleState, model: ModelSpec, seed: int) -> None:
    d = state.d
    with open(path, "w") as fh:
        fh.write(f"# N d time model_hash seed\n")
        fh.write(f"# {state.n} {d} {_fmt(state.time)} {model_hash(model)} {seed}\n")
        cols = (["id"] + [f"x_{k}" for k in range(d)] + [f"v_{k}" for k in range(d)])
        fh.write(",".join(cols) + "\n")
        for i in range(state.n):
            row = [str(i)] + [_fmt(v) for v in state.positions[i]] \
                + [_fmt(v) for v in state.velocities[i]]
            fh.write(",".join(row) + "\n")


def load_snapshot(path: str) -> tuple[ParticleState, dict]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if len(lines) < 4 or not lines[0].startswith("#") or not lines[1].startswith("#"):
        raise FormatError(f"{path}: missing snapshot header")
    fields = lines[1][1:].split()
    try:
        n, d = int(fields[0]), int(fields[1])
        t = float(fields[2])
        meta = {"model_hash": fields[3], "seed": int(fields[4])}
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: malformed header line 2: {exc}") from exc
    rows = lines[3:]
    if len(rows) != n:
        raise FormatError(f"{path}: expected {n} rows, found {len(rows)}")
    xs = np.empty((n, d))
    vs = np.empty((n, d))
    for lineno, row in enumerate(rows, start=4):
        parts = row.split(",")
        if len(parts) != 1 + 2 * d:
            raise FormatError(f"{path}:{lineno}: expected {1 + 2*d} columns")
        i = int(parts[0])
        xs[i] = [float(v) for v in parts[1:1 + d]]
        vs[i] = [float(v) for v in parts[1 + d:]]
    return ParticleState(t, xs, vs), meta


def load_measure_csv(path: str) -> DiscreteMeasure:
    """Generic discrete-measure CSV: weight followed by point coordinates."""
    pts, wts = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line[0].isalpha():
                continue
            parts = line.split(",")
            if len(parts) < 2:
                raise FormatError(f"{path}:{lineno}: need weight plus coordinates")
            try:
                wts.append(float(parts[0]))
                pts.append([float(v) for v in parts[1:]])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    if not pts:
        raise FormatError(f"{path}: no data rows")
    return DiscreteMeasure(np.asarray(pts), np.asarray(wts))


MOMENT_COLUMNS = "t,V1,X1,V2,X2,Gf,Gamma,support_radius,Lambda"


def save_moments_csv(path: str, traj: Trajectory) -> None:
    d = traj.states[0].d
    header = (["t"] + [f"V1_{k}" for k in range(d)] + [f"X1_{k}" for k in range(d)]
              + ["V2", "X2", "Gf", "Gamma", "support_radius", "Lambda"])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for t, mm in zip(traj.times, traj.moments):
            row = ([_fmt(t)] + [_fmt(v) for v in mm.V1] + [_fmt(v) for v in mm.X1]
                   + [_fmt(mm.V2), _fmt(mm.X2), _fmt(mm.Gf), _fmt(mm.Gamma),
                      _fmt(mm.support_radius), _fmt(math.sqrt(max(mm.Gf, 0.0)))])
            fh.write(",".join(row) + "\n")


def save_series_csv(path: str, columns: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(outdir: str, extra: dict | None = None) -> str:
    """List every output file with its content hash."""
    entries = {}
    for name in sorted(os.listdir(outdir)):
        full = os.path.join(outdir, name)
        if os.path.isfile(full) and name != "manifest.json":
            entries[name] = file_sha256(full)
    manifest = {"files": entries}
    if extra:
        manifest.update(extra)
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_report_json(path: str, report, series_path: str | None = None) -> None:
    payload = {
        "name": report.name,
        "pass": bool(report.passed),
        "margin": report.worst_margin,
        "witness_time": report.witness_time,
        "tolerance": report.tolerance,
        "series": series_path,
        "details": report.details,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
