"""Attention-map onset detection and token self-similarity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from scipy.signal import find_peaks

from .audio import AudioClip, MelConfig, tile_segments
from .encoder import ViT1D, encode
from .errors import ConfigError, ContractError, ShapeError

__all__ = [
    "ActivationCurve",
    "PeakPickConfig",
    "pseudo_activation",
    "pick_peaks",
    "detect_onsets",
    "attention_maps",
    "self_similarity",
]


@dataclass
class ActivationCurve:
    values: np.ndarray
    frame_rate: float = 31.5
    layer: int | None = None
    head: int | None = None


@dataclass(frozen=True)
class PeakPickConfig:
    """``threshold`` is relative: a peak must rise ``threshold * (max - min)``
    above the curve minimum. ``smoothing`` is a moving-average width in
    frames (0 or 1 disables it)."""

    min_distance: int = 3
    threshold: float = 0.2
    smoothing: int = 0

    def __post_init__(self):
        if self.min_distance < 1:
            raise ConfigError("min_distance must be >= 1")
        if not 0.0 <= self.threshold < 1.0:
            raise ConfigError("threshold must lie in [0, 1)")
        if self.smoothing < 0:
            raise ConfigError("smoothing must be >= 0")


def pseudo_activation(attn, by: str = "column", frame_rate: float = 31.5, layer=None, head=None) -> ActivationCurve:
    """Average one ``(T+1, T+1)`` attention map after dropping the class token.

    ``by="column"`` gives the attention each frame *receives*, ``a(j) =
    mean_i M[i, j]`` over rows ``i >= 1``; ``by="row"`` averages each row
    instead, which for a row-stochastic map is nearly constant.
    """
    m = np.asarray(attn, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
        raise ContractError(f"expected a square (T+1, T+1) attention map, got {m.shape}")
    inner = m[1:, 1:]
    if by == "column":
        values = inner.mean(axis=0)
    elif by == "row":
        values = inner.mean(axis=1)
    else:
        raise ConfigError(f"by must be 'column' or 'row', got {by!r}")
    return ActivationCurve(values, frame_rate, layer, head)


def pick_peaks(curve, cfg: PeakPickConfig = PeakPickConfig(), frame_rate: float | None = None) -> np.ndarray:
    """Peak times in seconds (``index / frame_rate``), strictly increasing.

    Candidates are local maxima of the (optionally smoothed) curve; those
    below the relative height threshold are dropped, and of any two closer
    than ``min_distance`` frames the higher survives (``scipy.signal.find_peaks``).
    """
    if isinstance(curve, ActivationCurve):
        values, rate = curve.values, curve.frame_rate
    else:
        values, rate = curve, 31.5
    rate = frame_rate or rate
    x = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ContractError("activation curve must be finite")
    if cfg.smoothing > 1:
        x = np.convolve(x, np.ones(cfg.smoothing) / cfg.smoothing, mode="same")
    lo, hi = x.min(initial=0.0), x.max(initial=0.0)
    if x.size < 3 or hi - lo <= 0:
        return np.zeros(0)
    height = lo + cfg.threshold * (hi - lo)
    peaks, _ = find_peaks(x, height=height, distance=cfg.min_distance)
    # find_peaks' height test is inclusive; keep only peaks strictly above min
    peaks = peaks[x[peaks] > lo]
    return peaks / rate


def attention_maps(model: ViT1D, mel, layer: int) -> np.ndarray:
    """``(heads, T+1, T+1)`` attention of block ``layer`` for one spectrogram."""
    out = encode(model, mel, attention_layers=[layer])
    return out.attentions[layer][0].numpy()


def detect_onsets(model: ViT1D, audio, layer: int = 9, head: int = 0,
                  cfg: PeakPickConfig = PeakPickConfig(), mel_cfg: MelConfig = MelConfig(),
                  by: str = "column") -> np.ndarray:
    """Onset times from attention of ``(layer, head)``; ``head`` is 0-based.

    ``audio`` is a 4 s spectrogram, or an :class:`AudioClip` that is tiled
    into non-overlapping 4 s windows (a trailing partial window is dropped)
    with window offsets added to the times.
    """
    if not 0 <= head < model.cfg.heads:
        raise ConfigError(f"head {head} outside 0..{model.cfg.heads - 1}")
    if isinstance(audio, AudioClip):
        windows = [(m.source_offset, m) for m in tile_segments(audio, mel_cfg)]
    else:
        windows = [(float(getattr(audio, "source_offset", 0.0)), audio)]
    times = []
    for offset, mel in windows:
        curve = pseudo_activation(attention_maps(model, mel, layer)[head], by=by,
                                  frame_rate=mel_cfg.frame_rate, layer=layer, head=head)
        times.append(offset + pick_peaks(curve, cfg))
    return np.concatenate(times) if times else np.zeros(0)


def self_similarity(tokens) -> np.ndarray:
    """Cosine SSM of a ``(T, D)`` token matrix.

    Zero-norm tokens get similarity 0 to every other token and 1 on the
    diagonal, so the matrix is always defined.
    """
    if isinstance(tokens, torch.Tensor):
        tokens = tokens.detach().cpu().numpy()
    z = np.asarray(tokens, dtype=np.float64)
    if z.ndim != 2:
        raise ShapeError(f"expected a (T, D) token matrix, got {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ContractError("tokens must be finite")
    norms = np.linalg.norm(z, axis=1)
    unit = np.divide(z, norms[:, None], out=np.zeros_like(z), where=norms[:, None] > 0)
    s = np.clip(unit @ unit.T, -1.0, 1.0)
    s = 0.5 * (s + s.T)
    np.fill_diagonal(s, 1.0)
    return s
