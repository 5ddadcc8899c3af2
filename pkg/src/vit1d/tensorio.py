"""Matrix files and grayscale rendering.

A matrix file is one line of JSON header followed by raw little-endian
float32 data in C order::

    {"format": "vit1d-matrix", "dtype": "float32", "byteorder": "little", "shape": [126, 192], ...}\\n
    <prod(shape) * 4 bytes>

Extra header keys carry context such as ``dim``, ``frame_rate``, ``mode``
or ``track_id``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import CorruptCheckpointError, RenderError

__all__ = ["write_matrix", "read_matrix", "to_gray", "render_pgm", "render_svg", "render_matrix"]

MATRIX_FORMAT = "vit1d-matrix"


def write_matrix(path, values, **header) -> Path:
    array = np.ascontiguousarray(values, dtype="<f4")
    head = {"format": MATRIX_FORMAT, "dtype": "float32", "byteorder": "little",
            "shape": list(array.shape), **header}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(json.dumps(head, sort_keys=True).encode() + b"\n" + array.tobytes())
    return path


def read_matrix(path) -> tuple[np.ndarray, dict]:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    try:
        head = json.loads(raw[:nl])
    except (ValueError, json.JSONDecodeError) as exc:
        raise CorruptCheckpointError(f"{path}: unreadable matrix header") from exc
    if nl < 0 or head.get("format") != MATRIX_FORMAT:
        raise CorruptCheckpointError(f"{path}: not a {MATRIX_FORMAT} file")
    shape = tuple(head["shape"])
    body = raw[nl + 1:]
    if len(body) != int(np.prod(shape, dtype=np.int64)) * 4:
        raise CorruptCheckpointError(f"{path}: payload size disagrees with shape {shape}")
    return np.frombuffer(body, dtype="<f4").reshape(shape).astype(np.float32), head


def to_gray(matrix) -> np.ndarray:
    """Min-max scale to uint8 0..255; a constant matrix renders as 128."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise RenderError(f"can only render 2-D matrices, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise RenderError("matrix contains non-finite values")
    lo, hi = m.min(), m.max()
    if hi == lo:
        return np.full(m.shape, 128, dtype=np.uint8)
    return np.round(255.0 * (m - lo) / (hi - lo)).astype(np.uint8)


def render_pgm(matrix) -> bytes:
    """Binary PGM (P5); row 0 of the matrix is the top image row."""
    g = to_gray(matrix)
    return f"P5\n{g.shape[1]} {g.shape[0]}\n255\n".encode() + g.tobytes()


def render_svg(matrix) -> str:
    g = to_gray(matrix)
    h, w = g.shape
    rects = [
        f'<rect x="{j}" y="{i}" width="1" height="1" fill="rgb({v},{v},{v})"/>'
        for i in range(h) for j, v in enumerate(g[i])
    ]
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" shape-rendering="crispEdges">\n' + "\n".join(rects) + "\n</svg>\n"
    )


def render_matrix(source, out_path) -> Path:
    """Render a matrix (array or matrix file) to ``.pgm`` or ``.svg`` by suffix."""
    matrix = read_matrix(source)[0] if isinstance(source, (str, Path)) else source
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if out_path.suffix.lower() == ".svg":
        out_path.write_text(render_svg(matrix))
    elif out_path.suffix.lower() == ".pgm":
        out_path.write_bytes(render_pgm(matrix))
    else:
        raise RenderError(f"unsupported image type {out_path.suffix!r} (use .pgm or .svg)")
    return out_path
