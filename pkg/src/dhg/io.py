"""Flat-file formats: JSON reports, CSV tables and OBJ polylines.

Floats are written with 12 significant digits so that identical inputs
produce byte-identical files.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .holo import Immersion
from .quatlin import affine_coordinate, hpoint_normalize

DIGITS = 12


def _round(x):
    return float(f"{x:.{DIGITS}g}")


def jsonable(obj):
    """Nested builtin containers with rounded floats; complex numbers become [re, im]."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_round(obj.real), _round(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return str(x)
        return _round(x)
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("input file not found", path=str(path)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError("input is not valid JSON", path=str(path), reason=str(exc)) from None


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.{DIGITS}g}" if isinstance(v, (float, np.floating)) else v
                        for v in row])
    return path


def write_obj(path, polylines, closed=True):
    """One object per polyline: ``v`` records followed by one ``l`` record."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    offset = 0
    for k, pts in enumerate(polylines):
        pts = np.asarray(pts, dtype=float)
        lines.append(f"o step_{k}")
        for p in pts:
            lines.append("v " + " ".join(f"{c:.{DIGITS}g}" for c in p))
        idx = list(range(offset + 1, offset + len(pts) + 1))
        if closed:
            idx.append(offset + 1)
        lines.append("l " + " ".join(str(i) for i in idx))
        offset += len(pts)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_obj_polylines(path):
    verts, out = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(c) for c in parts[1:]])
        elif parts[0] == "l":
            out.append(np.array([verts[int(i) - 1] for i in parts[1:]]))
    return out


# ---------------------------------------------------------------------------
# points in HP^1

def parse_points(obj):
    """Affine values or homogeneous pairs, given as quaternions or complex pairs.

    Accepted per point: a number, ``[re, im]``, ``[a, b, c, d]`` (affine) or
    ``[[a, b, c, d], [a, b, c, d]]`` (homogeneous).  A dict with key
    ``points`` or ``affine`` is unwrapped.
    """
    if isinstance(obj, dict):
        key = next((k for k in ("points", "affine") if k in obj), None)
        if key is None:
            raise ConfigError("expected a 'points' or 'affine' entry")
        obj = obj[key]
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("points must be numeric arrays") from None
    if arr.ndim == 1:
        arr = np.stack([arr, np.zeros_like(arr), np.zeros_like(arr), np.zeros_like(arr)], -1)
    if arr.ndim == 2 and arr.shape[1] == 2:
        arr = np.concatenate([arr, np.zeros_like(arr)], axis=1)
    if arr.ndim == 2 and arr.shape[1] == 4:
        return Immersion.from_affine(arr).points
    if arr.ndim == 3 and arr.shape[1:] == (2, 4):
        if np.any(np.linalg.norm(arr.reshape(len(arr), -1), axis=1) == 0):
            raise ConfigError("homogeneous points must be nonzero")
        return hpoint_normalize(arr)
    raise ConfigError("unrecognized point array shape", shape=list(arr.shape))


def points_to_json(points):
    """Affine quaternions where finite, homogeneous pairs otherwise."""
    points = np.asarray(points)
    try:
        return {"affine": affine_coordinate(points)}
    except ZeroDivisionError:
        return {"points": points}
