"""Named-tensor checkpoint container.

A checkpoint is a directory::

    manifest.json        {"format": ..., "tensors": [{name, dtype, byteorder, shape, file}, ...]}
    meta.json            encoder config, training step, anything else JSON-serializable
    tensors/<file>.bin   raw little-endian float32, C order, one file per tensor

Round trips are bit exact.
"""

from __future__ import annotations

import json
import os
import re
from pathlib import Path

import numpy as np
import torch

from .encoder import EncoderConfig, ViT1D
from .errors import CorruptCheckpointError, ShapeError

FORMAT = "vit1d-checkpoint"
VERSION = 1

__all__ = ["save_tensors", "load_tensors", "save_encoder", "load_encoder", "encoder_tensors"]


def _file_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name) + ".bin"


def save_tensors(path, tensors: dict, meta: dict | None = None) -> Path:
    """Write ``tensors`` (name -> array-like) and ``meta`` to directory ``path``."""
    path = Path(path)
    (path / "tensors").mkdir(parents=True, exist_ok=True)
    entries = []
    used = set()
    for name, value in tensors.items():
        if isinstance(value, torch.Tensor):
            value = value.detach().cpu().numpy()
        array = np.ascontiguousarray(value, dtype="<f4")
        fname = _file_name(name)
        if fname in used:
            raise ValueError(f"tensor names collide on disk: {name!r}")
        used.add(fname)
        (path / "tensors" / fname).write_bytes(array.tobytes(order="C"))
        entries.append(
            {"name": name, "dtype": "float32", "byteorder": "little",
             "shape": list(array.shape), "file": f"tensors/{fname}"}
        )
    manifest = {"format": FORMAT, "version": VERSION, "tensors": entries}
    (path / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    (path / "meta.json").write_text(json.dumps(meta or {}, indent=1, sort_keys=True) + "\n")
    return path


def load_tensors(path) -> tuple[dict, dict]:
    """Inverse of :func:`save_tensors`: returns ``(name -> np.ndarray, meta)``."""
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text())
        meta = json.loads((path / "meta.json").read_text())
    except FileNotFoundError as exc:
        raise CorruptCheckpointError(f"{path}: missing {Path(exc.filename).name}") from exc
    except json.JSONDecodeError as exc:
        raise CorruptCheckpointError(f"{path}: unreadable manifest or meta ({exc})") from exc
    if manifest.get("format") != FORMAT:
        raise CorruptCheckpointError(f"{path}: not a {FORMAT} directory")
    tensors = {}
    for entry in manifest["tensors"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if entry.get("dtype") != "float32" or entry.get("byteorder") != "little":
            raise CorruptCheckpointError(f"{path}: tensor {name!r} has unsupported dtype")
        fpath = path / entry["file"]
        if not fpath.is_file():
            raise CorruptCheckpointError(f"{path}: tensor file for {name!r} is missing")
        raw = fpath.read_bytes()
        expected = int(np.prod(shape, dtype=np.int64)) * 4
        if len(raw) != expected:
            raise CorruptCheckpointError(
                f"{path}: tensor {name!r} has {len(raw)} bytes, manifest implies {expected}"
            )
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float32)
    return tensors, meta


def encoder_tensors(model: ViT1D) -> dict:
    return {name: t.detach().to(torch.float32) for name, t in model.state_dict().items()}


def apply_encoder_tensors(model: ViT1D, tensors: dict) -> ViT1D:
    """Copy ``tensors`` into ``model``; any shape disagreement names the tensor."""
    state = model.state_dict()
    missing = sorted(set(state) - set(tensors))
    if missing:
        raise CorruptCheckpointError(f"checkpoint lacks encoder tensor(s): {', '.join(missing)}")
    with torch.no_grad():
        for name, param in state.items():
            value = tensors[name]
            if tuple(value.shape) != tuple(param.shape):
                raise ShapeError(
                    f"tensor {name!r}: checkpoint shape {tuple(value.shape)} "
                    f"does not match encoder shape {tuple(param.shape)}"
                )
            param.copy_(torch.as_tensor(np.asarray(value)))
    return model


def save_encoder(model: ViT1D, path, **meta) -> Path:
    meta = {"encoder": model.cfg.to_dict(), **meta}
    return save_tensors(path, encoder_tensors(model), meta)


def load_encoder(path, cfg: EncoderConfig | None = None) -> ViT1D:
    """Rebuild the encoder stored at ``path`` (optionally forcing ``cfg``)."""
    tensors, meta = load_tensors(path)
    if cfg is None:
        if "encoder" not in meta:
            raise CorruptCheckpointError(f"{path}: meta.json has no encoder config")
        cfg = EncoderConfig(**meta["encoder"])
    encoder_only = {k: v for k, v in tensors.items() if not k.startswith("optim.")}
    return apply_encoder_tensors(ViT1D(cfg, seed=None), encoder_only).eval()


def checkpoint_exists(path) -> bool:
    return os.path.isfile(os.path.join(os.fspath(path), "manifest.json"))
