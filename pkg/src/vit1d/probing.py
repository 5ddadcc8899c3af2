"""Frozen-encoder features and single-linear-layer probes.

Feature modes
-------------
``cls``    class token of the output, one 192-d row per segment
``avg``    mean of all 127 output tokens (class token included)
``seq``    the 126 output sequence tokens, class token excluded
``stack``  per-token concatenation of intermediate block outputs (default
           blocks 3, 6, 9, 12), 126 rows of ``192 * len(layers)``; with
           ``pooled=True`` the concatenation is averaged over all 127 tokens

Tasks
-----
``tagging``  multi-label, per-tag binary cross-entropy, metric macro ROC-AUC
``key``      24 classes (``KeyLabel.index``), softmax CE, weighted accuracy
``chord``    25 classes per frame, softmax CE, frame accuracy; frames
             labelled :data:`EXCLUDED` are ignored by both
``beat``     two sub-heads per token interleaved to 63 Hz, BCE on smoothed
             targets, metric F-measure of tracked beats
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .checkpoint import load_encoder, load_tensors, save_tensors
from .encoder import ViT1D, encode
from .errors import ConfigError, ContractError, DataError, ParseError, ShapeError
from .metrics import (
    dp_beat_tracker,
    event_f_score,
    frame_accuracy,
    macro_roc_auc,
    parse_key,
    weighted_key_accuracy,
    KeyLabel,
)

__all__ = [
    "EXCLUDED",
    "NO_CHORD",
    "TASKS",
    "ProbeMode",
    "FeatureMatrix",
    "ProbeConfig",
    "ProbeHead",
    "extract_features",
    "upsample_beat_logits",
    "frame_to_token",
    "smooth_beat_targets",
    "map_chord_label",
    "chord_name",
    "rasterize_chords",
    "train_probe",
    "read_lab",
    "read_events",
    "read_key",
    "read_tags",
]

EXCLUDED = -1
NO_CHORD = 24
TASKS = ("tagging", "key", "beat", "chord")


@dataclass(frozen=True)
class ProbeMode:
    kind: str
    layers: tuple = (3, 6, 9, 12)
    pooled: bool = False

    def __post_init__(self):
        if self.kind not in ("cls", "avg", "seq", "stack"):
            raise ConfigError(f"unknown probe mode {self.kind!r}")
        if self.kind == "stack" and not self.layers:
            raise ConfigError("stack mode needs at least one layer")

    @classmethod
    def parse(cls, text: str, layers=(3, 6, 9, 12), pooled: bool = False) -> "ProbeMode":
        return cls(text.lower(), tuple(layers), pooled)

    @property
    def is_global(self) -> bool:
        return self.kind in ("cls", "avg") or (self.kind == "stack" and self.pooled)


@dataclass
class FeatureMatrix:
    values: np.ndarray
    granularity: str  # "global" | "local"
    frame_rate: float | None = None
    mode: str = ""

    @property
    def dim(self) -> int:
        return self.values.shape[-1]


def _check_layers(mode: ProbeMode, depth: int):
    for k in mode.layers:
        if not 1 <= k <= depth:
            raise ConfigError(f"stack layer {k} outside 1..{depth}")


def extract_features(model, mel, mode, frame_rate: float = 31.5) -> FeatureMatrix:
    """Features of one spectrogram. ``model`` may be a checkpoint directory."""
    if not isinstance(model, ViT1D):
        model = load_encoder(model)
    if isinstance(mode, str):
        mode = ProbeMode.parse(mode)
    token_layers = ()
    if mode.kind == "stack":
        _check_layers(mode, model.cfg.depth)
        token_layers = mode.layers
    out = encode(model, mel, token_layers=token_layers)
    tokens = out.tokens[0]
    if mode.kind == "cls":
        values = tokens[:1]
    elif mode.kind == "avg":
        values = tokens.mean(dim=0, keepdim=True)
    elif mode.kind == "seq":
        values = tokens[1:]
    else:
        stacked = torch.cat([out.hidden[k][0] for k in mode.layers], dim=-1)
        values = stacked.mean(dim=0, keepdim=True) if mode.pooled else stacked[1:]
    granularity = "global" if mode.is_global else "local"
    return FeatureMatrix(values.numpy(), granularity, None if mode.is_global else frame_rate, mode.kind)


def upsample_beat_logits(seq_features, head) -> torch.Tensor:
    """Two logits per token, interleaved: token ``t`` (0-based among sequence
    tokens) fills frames ``2t`` (sub-head 0) and ``2t + 1`` (sub-head 1)."""
    x = torch.as_tensor(np.asarray(seq_features) if not isinstance(seq_features, torch.Tensor) else seq_features)
    logits = head(x.to(torch.float32)) if callable(head) else x.to(torch.float32) @ torch.as_tensor(head)
    if logits.shape[-1] != 2:
        raise ShapeError(f"beat upsampling needs exactly two sub-heads, got {logits.shape[-1]}")
    return logits.reshape(*logits.shape[:-2], 2 * logits.shape[-2])


def frame_to_token(frame: int) -> int:
    """Index in the full token sequence (class token = 0) that emits ``frame``."""
    return frame // 2 + 1


def smooth_beat_targets(beat_times, frame_rate: float = 63.0, num_frames: int = 252) -> np.ndarray:
    """1 at the frame nearest each beat, 0.5 on its two neighbours, max-combined."""
    times = np.asarray(beat_times, dtype=np.float64).ravel()
    if np.any(times < 0):
        raise ContractError("beat times must be non-negative")
    target = np.zeros(num_frames)
    for t in times:
        idx = int(np.floor(t * frame_rate + 0.5))
        if idx >= num_frames:
            continue
        for j, v in ((idx - 1, 0.5), (idx, 1.0), (idx + 1, 0.5)):
            if 0 <= j < num_frames:
                target[j] = max(target[j], v)
    return target


# --- chords ----------------------------------------------------------------

_ROOT_RE = re.compile(r"^([A-G])([b#]*)$")
_DEGREE_RE = re.compile(r"^(\*?)([b#]*)(\d+)$")
_DEGREE_SEMITONES = {1: 0, 2: 2, 3: 4, 4: 5, 5: 7, 6: 9, 7: 11, 9: 2, 11: 5, 13: 9}
_QUALITIES = {
    "maj": {0, 4, 7}, "min": {0, 3, 7}, "dim": {0, 3, 6}, "aug": {0, 4, 8},
    "maj7": {0, 4, 7, 11}, "min7": {0, 3, 7, 10}, "7": {0, 4, 7, 10},
    "dim7": {0, 3, 6, 9}, "hdim7": {0, 3, 6, 10}, "minmaj7": {0, 3, 7, 11},
    "maj6": {0, 4, 7, 9}, "min6": {0, 3, 7, 9}, "9": {0, 4, 7, 10, 2},
    "maj9": {0, 4, 7, 11, 2}, "min9": {0, 3, 7, 10, 2}, "11": {0, 4, 7, 10, 2, 5},
    "maj11": {0, 4, 7, 11, 2, 5}, "min11": {0, 3, 7, 10, 2, 5},
    "13": {0, 4, 7, 10, 2, 9}, "maj13": {0, 4, 7, 11, 2, 9}, "min13": {0, 3, 7, 10, 2, 9},
    "sus2": {0, 2, 7}, "sus4": {0, 5, 7}, "1": {0}, "5": {0, 7}, "": set(),
}
_PITCH = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
_NAMES = ["C", "C#", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B"]


def _degree(token: str, raw: str) -> tuple[bool, int]:
    m = _DEGREE_RE.match(token.strip())
    if not m or int(m.group(3)) not in _DEGREE_SEMITONES:
        raise ParseError(f"bad interval {token!r} in chord {raw!r}")
    omit, acc, deg = m.groups()
    shift = acc.count("#") - acc.count("b")
    return bool(omit), (_DEGREE_SEMITONES[int(deg)] + shift) % 12


def map_chord_label(raw: str) -> int:
    """Map a Harte-style label to 0..11 (major), 12..23 (minor), 24 (N) or
    :data:`EXCLUDED`.

    A chord counts as major when its interval set holds a major third and
    a perfect fifth, otherwise as minor when it holds a minor third and a
    perfect fifth; anything else (sus, dim, aug, power chords, ``X``) is
    excluded. Bass inversions are ignored.
    """
    label = raw.strip()
    if label == "N":
        return NO_CHORD
    if label == "X":
        return EXCLUDED
    body = label.split("/", 1)
    if len(body) == 2:
        _degree(body[1], raw)
    body = body[0]
    root_txt, _, quality = body.partition(":")
    m = _ROOT_RE.match(root_txt)
    if not m:
        raise ParseError(f"bad root {root_txt!r} in chord {raw!r}")
    root = (_PITCH[m.group(1)] + m.group(2).count("#") - m.group(2).count("b")) % 12
    if ":" not in body:
        quality = "maj"
    extra = ""
    if "(" in quality:
        if not quality.endswith(")"):
            raise ParseError(f"unbalanced parenthesis in chord {raw!r}")
        quality, extra = quality[:-1].split("(", 1)
    if quality not in _QUALITIES:
        raise ParseError(f"unknown quality {quality!r} in chord {raw!r}")
    intervals = set(_QUALITIES[quality]) | {0}
    for token in filter(None, (t.strip() for t in extra.split(","))):
        omit, semis = _degree(token, raw)
        (intervals.discard if omit else intervals.add)(semis)
    if {4, 7} <= intervals:
        return root
    if {3, 7} <= intervals:
        return 12 + root
    return EXCLUDED


def chord_name(index: int) -> str:
    if index == NO_CHORD:
        return "N"
    if index == EXCLUDED:
        return "X"
    return f"{_NAMES[index % 12]}:{'min' if index >= 12 else 'maj'}"


def rasterize_chords(segments, start: float, num_frames: int, frame_rate: float = 31.5) -> np.ndarray:
    """Class index per frame for frames at ``start + t / frame_rate``.

    Frames not covered by any ``(start, end, label)`` segment are EXCLUDED.
    """
    times = start + np.arange(num_frames) / frame_rate
    out = np.full(num_frames, EXCLUDED, dtype=np.int64)
    for seg_start, seg_end, label in segments:
        cls = map_chord_label(label)
        out[(times >= seg_start) & (times < seg_end)] = cls
    return out


# --- label files -----------------------------------------------------------

def read_lab(path) -> list:
    """``start end label`` per line (whitespace separated)."""
    segments = []
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split(None, 2)
        if len(parts) != 3:
            raise ParseError(f"{path}:{n}: expected 'start end label', got {line!r}")
        segments.append((float(parts[0]), float(parts[1]), parts[2].strip()))
    return segments


def read_events(path) -> np.ndarray:
    """One timestamp per line (extra columns ignored)."""
    values = [float(line.split()[0]) for line in Path(path).read_text().splitlines() if line.strip()]
    return np.array(values)


def read_key(path) -> KeyLabel:
    return parse_key(Path(path).read_text().strip().splitlines()[0])


def read_tags(path, vocabulary) -> np.ndarray:
    """Multi-hot vector over ``vocabulary`` from a one-tag-per-line file."""
    index = {tag: i for i, tag in enumerate(vocabulary)}
    hot = np.zeros(len(vocabulary))
    for line in Path(path).read_text().splitlines():
        tag = line.strip()
        if not tag:
            continue
        if tag not in index:
            raise ParseError(f"{path}: tag {tag!r} is not in the vocabulary")
        hot[index[tag]] = 1.0
    return hot


# --- probes ----------------------------------------------------------------

@dataclass(frozen=True)
class ProbeConfig:
    lr: float = 1e-3
    epochs: int = 200
    batch_size: int = 64
    patience: int = 20
    val_fraction: float = 0.1
    seed: int = 0
    beat_frame_rate: float = 63.0
    tolerance: float = 0.07

    def __post_init__(self):
        if self.lr <= 0 or self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ConfigError("probe lr, epochs, batch_size and patience must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError("val_fraction must lie in (0, 1)")


_OUT_DIM = {"key": 24, "chord": 25, "beat": 2}


class ProbeHead(nn.Module):
    """A single affine map from ``in_dim`` features to task outputs."""

    def __init__(self, in_dim: int, task: str, out_dim: int | None = None):
        super().__init__()
        if task not in TASKS:
            raise ConfigError(f"unknown task {task!r}")
        if out_dim is None:
            if task == "tagging":
                raise ConfigError("tagging heads need out_dim = vocabulary size")
            out_dim = _OUT_DIM[task]
        if task == "beat" and out_dim != 2:
            raise ConfigError("the beat head has exactly two sub-heads")
        self.task, self.in_dim, self.out_dim = task, in_dim, out_dim
        self.linear = nn.Linear(in_dim, out_dim)

    def forward(self, x):
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"{self.task} head expects {self.in_dim}-d features, got {x.shape[-1]}")
        return self.linear(x)

    def predict(self, features) -> np.ndarray:
        with torch.no_grad():
            logits = self(torch.as_tensor(np.asarray(features), dtype=torch.float32))
            if self.task == "beat":
                return torch.sigmoid(upsample_beat_logits(logits, lambda z: z)).numpy()
            if self.task == "tagging":
                return torch.sigmoid(logits).numpy()
            return logits.argmax(dim=-1).numpy()

    def save(self, path, **meta):
        tensors = {"weight": self.linear.weight, "bias": self.linear.bias}
        save_tensors(path, tensors, {"task": self.task, "in_dim": self.in_dim, "out_dim": self.out_dim, **meta})

    @classmethod
    def load(cls, path) -> "ProbeHead":
        tensors, meta = load_tensors(path)
        head = cls(meta["in_dim"], meta["task"], meta["out_dim"])
        with torch.no_grad():
            head.linear.weight.copy_(torch.from_numpy(tensors["weight"]))
            head.linear.bias.copy_(torch.from_numpy(tensors["bias"]))
        return head


@dataclass
class ProbeResult:
    head: ProbeHead
    best_metric: float
    trace: list = field(default_factory=list)  # (epoch, train_loss, val_metric)


def _loss(task, logits, y):
    if task == "tagging":
        return nn.functional.binary_cross_entropy_with_logits(logits, y)
    if task == "beat":
        logits = upsample_beat_logits(logits, lambda z: z)
        return nn.functional.binary_cross_entropy_with_logits(logits, y)
    keep = y != EXCLUDED
    if not keep.any():
        return logits.sum() * 0.0
    return nn.functional.cross_entropy(logits[keep], y[keep])


def _metric(task, head, x, y, cfg):
    pred = head.predict(x)
    if task == "tagging":
        return macro_roc_auc(pred, y)
    if task == "key":
        return weighted_key_accuracy([KeyLabel.from_index(int(p)) for p in pred],
                                     [KeyLabel.from_index(int(t)) for t in y])
    if task == "chord":
        return frame_accuracy(pred, y, mask=(y == EXCLUDED))
    scores = []
    for act, target in zip(pred, y):
        ref = np.flatnonzero(target == 1.0) / cfg.beat_frame_rate
        est = dp_beat_tracker(act, cfg.beat_frame_rate)
        scores.append(event_f_score(est, ref, cfg.tolerance).f_measure)
    return float(np.mean(scores))


def _targets(task, targets):
    y = np.asarray(targets)
    if task in ("key", "chord"):
        return torch.as_tensor(y.astype(np.int64))
    return torch.as_tensor(y.astype(np.float32))


def _check_inputs(task, x, y):
    if len(x) == 0:
        raise DataError("empty training split")
    if len(x) != len(y):
        raise DataError(f"{len(x)} feature rows but {len(y)} targets")
    if task == "beat":
        if x.ndim != 3 or y.ndim != 2 or y.shape[1] != 2 * x.shape[1]:
            raise ShapeError("beat probing expects (segments, T, dim) features and (segments, 2T) targets")
    elif x.ndim != 2:
        raise ShapeError(f"{task} probing expects (rows, dim) features, got {x.shape}")


def train_probe(features, targets, task: str, cfg: ProbeConfig = ProbeConfig(),
                val_features=None, val_targets=None, out_dim: int | None = None) -> ProbeResult:
    """Fit a linear head on frozen features, keeping the best validation head.

    Without explicit validation data a seeded ``val_fraction`` of the rows is
    held out. Adam at a constant ``lr``; training stops after ``patience``
    epochs without validation improvement.
    """
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}")
    x = np.asarray(getattr(features, "values", features), dtype=np.float32)
    y = np.asarray(targets)
    _check_inputs(task, x, y)
    rng = np.random.default_rng(cfg.seed)
    if val_features is None:
        order = rng.permutation(len(x))
        n_val = max(1, int(round(cfg.val_fraction * len(x))))
        if n_val >= len(x):
            raise DataError("too few rows to hold out a validation split")
        val_idx, train_idx = order[:n_val], order[n_val:]
        vx, vy, x, y = x[val_idx], y[val_idx], x[train_idx], y[train_idx]
    else:
        vx = np.asarray(getattr(val_features, "values", val_features), dtype=np.float32)
        vy = np.asarray(val_targets)
        if len(vx) == 0:
            raise DataError("empty validation split")
    if task == "tagging" and out_dim is None:
        out_dim = y.shape[1]
    torch.manual_seed(cfg.seed)
    head = ProbeHead(x.shape[-1], task, out_dim)
    opt = torch.optim.Adam(head.parameters(), lr=cfg.lr)
    tx, ty = torch.from_numpy(x), _targets(task, y)
    best, best_state, stale, trace = -np.inf, None, 0, []
    for epoch in range(cfg.epochs):
        perm = torch.from_numpy(rng.permutation(len(tx)))
        total = 0.0
        for i in range(0, len(tx), cfg.batch_size):
            idx = perm[i:i + cfg.batch_size]
            loss = _loss(task, head(tx[idx]), ty[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.detach()) * len(idx)
        metric = _metric(task, head, vx, vy, cfg)
        trace.append((epoch, total / len(tx), metric))
        if metric > best:
            best, best_state, stale = metric, copy.deepcopy(head.state_dict()), 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    head.load_state_dict(best_state)
    return ProbeResult(head, float(best), trace)
