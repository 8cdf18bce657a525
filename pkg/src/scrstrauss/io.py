"""CSV readers and writers for patterns, period maps and run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
import platform
import time
from pathlib import Path

import numpy as np

from scrstrauss.geometry import _read_csv


def write_pattern(points, path) -> None:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["point_id", "x", "y"])
        for i, (x, y) in enumerate(pts, start=1):
            w.writerow([i, repr(float(x)), repr(float(y))])


def read_pattern(path) -> np.ndarray:
    rows = _read_csv(path, ("point_id", "x", "y"))
    rows.sort(key=lambda r: int(r["point_id"]))
    return np.array([(float(r["x"]), float(r["y"])) for r in rows]).reshape(-1, 2)


def write_periods(periods, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["occasion", "period"])
        for k, t in enumerate(periods, start=1):
            w.writerow([k, int(t) + 1])


def read_periods(path) -> np.ndarray:
    """Occasion -> 0-based period map from a CSV with 1-based ``occasion,period``."""
    rows = _read_csv(path, ("occasion", "period"))
    occ = sorted((int(r["occasion"]), int(r["period"])) for r in rows)
    if [k for k, _ in occ] != list(range(1, len(occ) + 1)):
        raise ValueError(f"{path}: occasions must be 1..K without gaps")
    periods = np.array([t for _, t in occ], dtype=np.int64) - 1
    if periods.min() < 0:
        raise ValueError(f"{path}: periods are 1-based")
    return periods


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command: str, config_digest: str, seeds: dict, inputs=(), extra=None) -> Path:
    from scrstrauss import __version__

    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "artifact_version": __version__,
        "config_sha256": config_digest,
        "seeds": seeds,
        "inputs": {str(p): file_digest(p) for p in inputs if p is not None and Path(p).exists()},
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "python": platform.python_version(),
        "numpy": np.__version__,
        **(extra or {}),
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path
