"""Deterministic artifact writing: CSV, JSON, SVG and the run manifest."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time

import numpy as np

from .. import __version__
from .config import SCHEMA_VERSION


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        raise TypeError("complex values must be split into re/im columns")
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_csv(path, header, rows) -> int:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return len(rows)


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dump_json(obj))


def _sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def write_result(result, cfg, out_dir, started: float) -> dict:
    """Write every artifact of a study, then the manifest (last)."""
    os.makedirs(out_dir, exist_ok=True)
    index = {}
    for name, (header, rows) in sorted(result.tables.items()):
        path = os.path.join(out_dir, name)
        n = write_csv(path, header, rows)
        index[name] = {"type": "csv", "rows": n}
    for name, obj in sorted(result.summaries.items()):
        path = os.path.join(out_dir, name)
        write_json(path, obj)
        index[name] = {"type": "json", "keys": len(obj)}
    for name, svg in sorted(result.plots.items()):
        path = os.path.join(out_dir, name)
        with open(path, "w") as fh:
            fh.write(svg)
        index[name] = {"type": "svg", "points": svg.count("<circle")}
    cfg_path = os.path.join(out_dir, "config_resolved.json")
    write_json(cfg_path, cfg.echo())
    index["config_resolved.json"] = {"type": "json", "keys": 4}
    for name, entry in index.items():
        entry["sha256"] = _sha256(os.path.join(out_dir, name))
    manifest = {
        "schema": SCHEMA_VERSION,
        "toolkit_version": __version__,
        "study": result.kind,
        "config_source": cfg.source,
        "config": cfg.echo(),
        "files": index,
        "flags": dict(sorted(result.flags.items())),
        "passed": result.passed,
        "started_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
        "wall_clock_seconds": round(time.time() - started, 3),
    }
    write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return manifest


def verify_manifest(out_dir) -> list:
    """Problems found when checking a manifest against the files on disk."""
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    problems = []
    for name, entry in manifest["files"].items():
        path = os.path.join(out_dir, name)
        if not os.path.exists(path):
            problems.append(f"{name}: missing")
            continue
        if _sha256(path) != entry["sha256"]:
            problems.append(f"{name}: checksum mismatch")
        if entry["type"] == "csv":
            with open(path) as fh:
                rows = sum(1 for _ in fh) - 1
            if rows != entry["rows"]:
                problems.append(f"{name}: {rows} rows, manifest says {entry['rows']}")
    return problems
