"""Audio decoding, log-mel analysis, positive-pair sampling and spectral flux.

The analysis geometry is fixed so that one frame lasts exactly 1/31.5 s:
22050 Hz audio, hop 700 samples, 2048-sample Hann window, 128 HTK-mel bands
between 0 Hz and Nyquist, and ``log10(max(power, floor))`` compression.

Frame ``t`` is centred on sample ``t * hop`` (the signal is zero padded by half
a window on both sides), and a clip of ``N`` samples yields
``round(N / hop)`` frames. A 4 s clip therefore gives 126 frames, and the
timestamp of frame ``t`` is simply ``t / frame_rate``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import (
    ConfigError,
    ConfigMismatchError,
    DecodeError,
    EmptyInputError,
    InsufficientDurationError,
    ShapeError,
)

__all__ = [
    "AudioClip",
    "MelConfig",
    "MelSpectrogram",
    "SegmentPair",
    "load_audio",
    "write_wav",
    "hz_to_mel",
    "mel_to_hz",
    "mel_filterbank",
    "compute_mel",
    "segment",
    "tile_segments",
    "sample_segment_pair",
    "spectral_flux",
]


@dataclass(frozen=True)
class AudioClip:
    """Mono audio: float samples in [-1, 1] at ``sample_rate`` Hz."""

    samples: np.ndarray
    sample_rate: int
    track_id: str | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ShapeError(f"AudioClip expects 1-D samples, got shape {samples.shape}")
        if samples.size < 1:
            raise EmptyInputError("AudioClip has no samples")
        if not np.all(np.isfinite(samples)):
            raise DecodeError("AudioClip contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class MelConfig:
    sample_rate: int = 22050
    hop: int = 700
    window: int = 2048
    n_mels: int = 128
    f_min: float = 0.0
    f_max: float = 11025.0
    floor: float = 1e-10
    segment_seconds: float = 4.0

    def __post_init__(self):
        if self.sample_rate <= 0 or self.hop <= 0 or self.window <= 0:
            raise ConfigError("sample_rate, hop and window must be positive")
        if self.n_mels < 1:
            raise ConfigError("n_mels must be >= 1")
        if not 0.0 <= self.f_min < self.f_max <= self.sample_rate / 2:
            raise ConfigError(
                f"need 0 <= f_min < f_max <= Nyquist, got {self.f_min}, {self.f_max}"
            )
        if self.floor <= 0:
            raise ConfigError("floor must be positive")
        if self.segment_seconds <= 0:
            raise ConfigError("segment_seconds must be positive")

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop

    @property
    def segment_samples(self) -> int:
        return int(round(self.segment_seconds * self.sample_rate))

    @property
    def segment_frames(self) -> int:
        return int(round(self.segment_samples / self.hop))


@dataclass
class MelSpectrogram:
    """``values`` is ``(n_mels, T)`` log10 power; frame ``t`` sits at
    ``source_offset + t / frame_rate`` seconds in the source track."""

    values: np.ndarray
    frame_rate: float = 31.5
    source_offset: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 2:
            raise ShapeError(f"mel values must be 2-D, got shape {self.values.shape}")

    @property
    def n_mels(self) -> int:
        return self.values.shape[0]

    @property
    def num_frames(self) -> int:
        return self.values.shape[1]

    @property
    def duration(self) -> float:
        return self.num_frames / self.frame_rate

    def frame_times(self) -> np.ndarray:
        return self.source_offset + np.arange(self.num_frames) / self.frame_rate


@dataclass
class SegmentPair:
    a: MelSpectrogram
    b: MelSpectrogram
    track_id: str | None = None
    # source intervals in seconds, [start, end)
    interval_a: tuple[float, float] = field(default=(0.0, 0.0))
    interval_b: tuple[float, float] = field(default=(0.0, 0.0))


def load_audio(path, target_rate: int = 22050) -> AudioClip:
    """Read a WAV file, average channels to mono and resample to ``target_rate``.

    Integer PCM is scaled to [-1, 1). Resampling is polyphase
    (``scipy.signal.resample_poly``) with the exact rational ratio.
    """
    path = os.fspath(path)
    try:
        rate, data = wavfile.read(path)
    except (OSError, ValueError, EOFError) as exc:
        raise DecodeError(f"cannot decode {path!r}: {exc}") from exc
    data = np.asarray(data)
    if data.size == 0:
        raise EmptyInputError(f"{path!r} contains no audio samples")
    if data.dtype.kind == "i":
        data = data.astype(np.float64) / float(2 ** (8 * data.dtype.itemsize - 1))
    elif data.dtype.kind == "u":
        half = float(2 ** (8 * data.dtype.itemsize - 1))
        data = (data.astype(np.float64) - half) / half
    else:
        data = data.astype(np.float64)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if rate != target_rate:
        g = math.gcd(int(rate), int(target_rate))
        data = resample_poly(data, target_rate // g, rate // g)
    track_id = os.path.splitext(os.path.basename(path))[0]
    return AudioClip(np.clip(data, -1.0, 1.0), target_rate, track_id=track_id)


def write_wav(path, clip: AudioClip, dtype: str = "int16") -> None:
    """Write ``clip`` as a mono PCM WAV (``int16``) or float WAV (``float32``)."""
    samples = np.clip(clip.samples, -1.0, 1.0)
    if dtype == "int16":
        data = np.round(samples * 32767.0).astype("<i2")
    elif dtype == "float32":
        data = samples.astype("<f4")
    else:
        raise ConfigError(f"unsupported WAV dtype {dtype!r}")
    wavfile.write(os.fspath(path), clip.sample_rate, data)


def hz_to_mel(f):
    """HTK mel scale: ``2595 * log10(1 + f / 700)``."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: MelConfig = MelConfig()) -> np.ndarray:
    """Triangular HTK filters, shape ``(n_mels, window // 2 + 1)``, peak 1."""
    n_bins = cfg.window // 2 + 1
    fft_freqs = np.arange(n_bins) * cfg.sample_rate / cfg.window
    edges = mel_to_hz(
        np.linspace(hz_to_mel(cfg.f_min), hz_to_mel(cfg.f_max), cfg.n_mels + 2)
    )
    lower, centre, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (fft_freqs[None, :] - lower) / (centre - lower)
    falling = (upper - fft_freqs[None, :]) / (upper - centre)
    return np.maximum(0.0, np.minimum(rising, falling))


def _frames(samples: np.ndarray, cfg: MelConfig) -> np.ndarray:
    n_frames = int(round(samples.size / cfg.hop))
    if n_frames < 1:
        raise EmptyInputError(
            f"{samples.size} samples is shorter than one hop ({cfg.hop})"
        )
    half = cfg.window // 2
    needed = (n_frames - 1) * cfg.hop + cfg.window
    padded = np.zeros(max(needed, samples.size + 2 * half))
    padded[half:half + samples.size] = samples
    view = np.lib.stride_tricks.sliding_window_view(padded, cfg.window)
    return view[: (n_frames - 1) * cfg.hop + 1 : cfg.hop]


def compute_mel(clip: AudioClip, cfg: MelConfig = MelConfig(), source_offset: float = 0.0) -> MelSpectrogram:
    """Log-mel spectrogram of ``clip``: ``(n_mels, round(N / hop))`` float32."""
    if clip.sample_rate != cfg.sample_rate:
        raise ConfigMismatchError(
            f"clip is at {clip.sample_rate} Hz but MelConfig expects {cfg.sample_rate} Hz"
        )
    if clip.samples.size < cfg.window // 2:
        raise EmptyInputError(
            f"clip of {clip.samples.size} samples is shorter than half a window"
        )
    frames = _frames(clip.samples, cfg) * np.hanning(cfg.window + 1)[:-1]
    power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    mel_power = mel_filterbank(cfg) @ power.T
    values = np.log10(np.maximum(mel_power, cfg.floor))
    return MelSpectrogram(values.astype(np.float32), cfg.frame_rate, float(source_offset))


def segment(clip: AudioClip, start: int, cfg: MelConfig = MelConfig()) -> MelSpectrogram:
    """Mel spectrogram of the segment starting at sample ``start``."""
    n = cfg.segment_samples
    if start < 0 or start + n > clip.samples.size:
        raise InsufficientDurationError(
            f"segment [{start}, {start + n}) lies outside a clip of {clip.samples.size} samples"
        )
    piece = AudioClip(clip.samples[start:start + n], clip.sample_rate)
    return compute_mel(piece, cfg, source_offset=start / clip.sample_rate)


def tile_segments(clip: AudioClip, cfg: MelConfig = MelConfig()) -> list[MelSpectrogram]:
    """Non-overlapping segments from the start of ``clip``; a trailing partial
    segment is dropped."""
    n = cfg.segment_samples
    if clip.samples.size < n:
        raise InsufficientDurationError(
            f"clip of {clip.duration:.3f} s is shorter than one {cfg.segment_seconds:g} s segment"
        )
    return [segment(clip, start, cfg) for start in range(0, clip.samples.size - n + 1, n)]


def sample_segment_pair(track: AudioClip, rng: np.random.Generator, cfg: MelConfig = MelConfig()) -> SegmentPair:
    """Draw two disjoint segments uniformly over all disjoint placements.

    With ``L`` samples per segment and ``slack = N - 2L``, an unordered
    disjoint placement is a pair ``u <= v`` in ``[0, slack]`` (first start
    ``u``, second start ``v + L``). Drawing two distinct integers from
    ``[0, slack + 1]`` and shifting the larger down by one enumerates those
    pairs bijectively, so no rejection loop is needed. Which of the two
    becomes ``a`` is a fair coin flip. The segments are raw (no augmentation).
    """
    n = cfg.segment_samples
    slack = track.samples.size - 2 * n
    if slack < 0:
        raise InsufficientDurationError(
            f"track of {track.duration:.3f} s is shorter than two "
            f"{cfg.segment_seconds:g} s segments"
        )
    x, y = np.sort(rng.choice(slack + 2, size=2, replace=False))
    starts = [int(x), int(y) - 1 + n]
    if rng.random() < 0.5:
        starts.reverse()
    sr = track.sample_rate
    a, b = (segment(track, s, cfg) for s in starts)
    return SegmentPair(
        a,
        b,
        track.track_id,
        interval_a=(starts[0] / sr, (starts[0] + n) / sr),
        interval_b=(starts[1] / sr, (starts[1] + n) / sr),
    )


def spectral_flux(mel: MelSpectrogram) -> np.ndarray:
    """Half-wave rectified frame difference summed over bands; ``flux[0] = 0``."""
    values = np.asarray(mel.values, dtype=np.float64)
    if values.shape[1] < 2:
        raise ShapeError("spectral flux needs at least two frames")
    flux = np.zeros(values.shape[1])
    flux[1:] = np.maximum(0.0, np.diff(values, axis=1)).sum(axis=0)
    return flux
