"""CSV and manifest writers. Output is byte-stable for identical inputs."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def fmt(value: float) -> str:
    """Fixed 9-significant-digit scientific notation."""
    return f"{float(value):.8e}"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return value.as_posix()
    return value


def write_manifest(path: Path, manifest: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(manifest), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def response_header(kind: str) -> list[str]:
    if kind == "theta":
        return ["time_s", "rotation_rad", "angular_velocity_rad_per_s"]
    return ["time_s", "displacement_m", "velocity_m_per_s"]
