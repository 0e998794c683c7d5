"""Versioned JSON model files with dense row-major weight arrays."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


def pack_array(array: np.ndarray) -> dict:
    """Flatten an array row-major; floats serialize via repr and round-trip exactly."""
    array = np.asarray(array, dtype=np.float64)
    return {"shape": list(array.shape), "data": array.ravel(order="C").tolist()}


def unpack_array(obj: dict) -> np.ndarray:
    return np.asarray(obj["data"], dtype=np.float64).reshape(obj["shape"])


def dump_json(path: str | Path, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def check_header(payload: dict, kind: str, path: str | Path) -> None:
    """Validate the version tag and model kind of a loaded payload."""
    if payload.get("version") != FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported model file version {payload.get('version')!r}, "
            f"expected {FORMAT_VERSION}"
        )
    if payload.get("kind") != kind:
        raise ValueError(f"{path}: expected a {kind!r} model file, found {payload.get('kind')!r}")
