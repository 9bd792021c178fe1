"""Deterministic CSV/JSON artifacts, content-hash manifests and comparison.

Floats are serialized with ``repr`` (shortest round-trip), so a fixed
(config, seed) pair reproduces byte-identical files; manifests carry no
timestamps, only content hashes.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

MANIFEST_SCHEMA = "qsfilter.manifest/1"
REPORT_SCHEMA = "qsfilter.report/1"
COMPARE_SCHEMA = "qsfilter.compare/1"


def _fmt(value) -> str:
    v = float(value)
    if v != v:
        return "nan"
    if v == int(v) and abs(v) < 1e16:
        return repr(v)
    return repr(v)


def write_csv(path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    length = arrays[0].shape[0]
    for n, a in zip(names, arrays):
        if a.shape != (length,):
            raise ValueError(f"column {n!r} has shape {a.shape}, expected ({length},)")
    lines = [",".join(names)]
    for i in range(length):
        lines.append(",".join(_fmt(a[i]) for a in arrays))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> dict[str, np.ndarray]:
    text = Path(path).read_text().strip().split("\n")
    names = text[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in text[1:]])
    if data.size == 0:
        return {n: np.array([]) for n in names}
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: row width does not match header")
    return {n: data[:, i] for i, n in enumerate(names)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(outdir, scenario: str, config: dict, names: list[str],
                   notes: list[str] | None = None) -> Path:
    outdir = Path(outdir)
    entries = []
    for name in sorted(names):
        p = outdir / name
        entries.append({"name": name, "sha256": sha256_file(p),
                        "bytes": p.stat().st_size})
    manifest = {"schema": MANIFEST_SCHEMA, "scenario": scenario,
                "config": _jsonable(config), "artifacts": entries,
                "notes": notes or []}
    path = outdir / "manifest.json"
    write_json(path, manifest)
    return path


def compare_csv(path_a, path_b, tolerances, default_tol: float = 0.0) -> dict:
    """Column-wise max/mean absolute deviations against a tolerance spec.

    ``tolerances`` maps column name to tolerance; ``default_tol`` applies to
    unlisted columns.  Raises ValueError on schema (column set / row count)
    mismatch.
    """
    a = read_csv(path_a)
    b = read_csv(path_b)
    if set(a) != set(b):
        raise ValueError(f"column sets differ: {sorted(a)} vs {sorted(b)}")
    report_cols = []
    ok = True
    for name in a:
        if a[name].shape != b[name].shape:
            raise ValueError(f"column {name!r} lengths differ")
        diff = np.abs(a[name] - b[name])
        max_dev = float(diff.max()) if diff.size else 0.0
        mean_dev = float(diff.mean()) if diff.size else 0.0
        tol = float(tolerances.get(name, default_tol))
        passed = max_dev <= tol
        ok = ok and passed
        report_cols.append({"column": name, "max_abs_dev": max_dev,
                            "mean_abs_dev": mean_dev, "tolerance": tol,
                            "pass": passed})
    return {"schema": COMPARE_SCHEMA, "a": str(path_a), "b": str(path_b),
            "columns": report_cols, "pass": ok}
