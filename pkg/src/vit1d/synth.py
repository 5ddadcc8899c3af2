"""Synthetic corpora with annotations that are exact by construction.

``click-train``     decaying tone bursts at a per-track tempo and pitch over
                    white noise at a given SNR; onsets = beats = clicks
``tone-sequence``   harmonic notes with per-note pitch and duration; onsets
                    at note starts
``chord-sequence``  major/minor triads drawn from one key per track; chord
                    segments in ``.lab`` form and the key as ``Tonic mode``
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import AudioClip, write_wav
from .errors import ConfigError
from .metrics import KeyLabel
from .probing import chord_name

__all__ = ["SyntheticCorpusSpec", "SyntheticTrack", "generate_track", "generate_corpus", "write_corpus"]

KINDS = ("click-train", "tone-sequence", "chord-sequence")


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    num_tracks: int = 16
    duration: float = 12.0
    kind: str = "click-train"
    seed: int = 0
    sample_rate: int = 22050
    snr_db: float = 30.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown synthetic kind {self.kind!r}; choose from {KINDS}")
        if self.num_tracks < 1 or self.duration <= 0:
            raise ConfigError("num_tracks and duration must be positive")


@dataclass
class SyntheticTrack:
    track_id: str
    clip: AudioClip
    onsets: np.ndarray
    beats: np.ndarray = field(default_factory=lambda: np.zeros(0))
    chords: list = field(default_factory=list)  # (start, end, label)
    key: KeyLabel | None = None


def _midi_hz(m):
    return 440.0 * 2.0 ** ((np.asarray(m, dtype=np.float64) - 69.0) / 12.0)


def _add_noise(x, rng, snr_db):
    power = np.mean(x ** 2)
    if power > 0 and np.isfinite(snr_db):
        x = x + rng.normal(0.0, np.sqrt(power / 10 ** (snr_db / 10)), x.size)
    peak = np.max(np.abs(x))
    return 0.9 * x / peak if peak > 0 else x


def _note(freq, n, sr, decay):
    t = np.arange(n) / sr
    env = np.exp(-t / decay) * np.minimum(1.0, t / 0.002)
    tone = sum(np.sin(2 * np.pi * k * freq * t) / k for k in (1, 2, 3) if k * freq < sr / 2)
    return env * tone


def click_train(rng, n, sr, snr_db):
    bpm = rng.uniform(80.0, 160.0)
    pitch = rng.uniform(300.0, 3000.0)
    period = 60.0 / bpm
    x = np.zeros(n)
    first = rng.uniform(0.05, period)
    times = np.arange(first, n / sr - 0.05, period)
    burst = _note(pitch, int(0.04 * sr), sr, 0.008)
    for t in times:
        i = int(round(t * sr))
        seg = burst[: n - i]
        x[i:i + seg.size] += seg
    return _add_noise(x, rng, snr_db), times


def tone_sequence(rng, n, sr, snr_db):
    x = np.zeros(n)
    t, onsets = rng.uniform(0.0, 0.2), []
    while t < n / sr - 0.1:
        dur = rng.uniform(0.2, 0.6)
        i, m = int(round(t * sr)), int(dur * sr)
        note = _note(_midi_hz(rng.integers(48, 84)), m, sr, dur / 2)[: n - i]
        x[i:i + note.size] += note
        onsets.append(t)
        t += dur
    return _add_noise(x, rng, snr_db), np.array(onsets)


_MAJOR_SCALE_CHORDS = [(0, 0), (2, 1), (4, 1), (5, 0), (7, 0), (9, 1)]  # (degree, minor?)


def chord_sequence(rng, n, sr, snr_db):
    key = KeyLabel(int(rng.integers(12)), "major")
    x = np.zeros(n)
    t, chords, onsets = 0.0, [], []
    while t < n / sr:
        dur = float(rng.choice([1.0, 1.5, 2.0]))
        degree, minor = _MAJOR_SCALE_CHORDS[int(rng.integers(len(_MAJOR_SCALE_CHORDS)))]
        root = (key.tonic + degree) % 12
        i, m = int(round(t * sr)), int(round(dur * sr))
        m = min(m, n - i)
        base = 48 + root
        for semis in (0, 3 if minor else 4, 7):
            x[i:i + m] += _note(_midi_hz(base + semis), m, sr, 2 * dur)
        end = min(t + dur, n / sr)
        chords.append((t, end, chord_name(root + 12 * minor)))
        onsets.append(t)
        t += dur
    return _add_noise(x, rng, snr_db), np.array(onsets), chords, key


def generate_track(spec: SyntheticCorpusSpec, index: int) -> SyntheticTrack:
    rng = np.random.default_rng([spec.seed, index])
    sr = spec.sample_rate
    n = int(round(spec.duration * sr))
    track_id = f"{spec.kind.split('-')[0]}{index:04d}"
    if spec.kind == "click-train":
        x, times = click_train(rng, n, sr, spec.snr_db)
        return SyntheticTrack(track_id, AudioClip(x, sr, track_id), times, beats=times)
    if spec.kind == "tone-sequence":
        x, onsets = tone_sequence(rng, n, sr, spec.snr_db)
        return SyntheticTrack(track_id, AudioClip(x, sr, track_id), onsets)
    x, onsets, chords, key = chord_sequence(rng, n, sr, spec.snr_db)
    return SyntheticTrack(track_id, AudioClip(x, sr, track_id), onsets, chords=chords, key=key)


def generate_corpus(spec: SyntheticCorpusSpec) -> list[SyntheticTrack]:
    return [generate_track(spec, i) for i in range(spec.num_tracks)]


def _split(i: int, n: int) -> str:
    # 8:1:1 by position; tiny corpora keep at least one training track
    pos = (i * 10) // max(n, 1)
    return "train" if pos < 8 or n < 3 else ("valid" if pos < 9 else "test")


def _events_text(times) -> str:
    return "".join(f"{t:.6f}\n" for t in times)


def write_corpus(spec: SyntheticCorpusSpec, out_dir) -> Path:
    """Write ``audio/*.wav``, ``labels/*`` and ``manifest.jsonl`` under ``out_dir``."""
    out = Path(out_dir)
    (out / "audio").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    lines = []
    for i, track in enumerate(generate_corpus(spec)):
        wav = out / "audio" / f"{track.track_id}.wav"
        write_wav(wav, track.clip)
        labels = out / "labels"
        (labels / f"{track.track_id}.onsets").write_text(_events_text(track.onsets))
        if track.beats.size:
            (labels / f"{track.track_id}.beats").write_text(_events_text(track.beats))
        if track.chords:
            (labels / f"{track.track_id}.lab").write_text(
                "".join(f"{s:.6f} {e:.6f} {lab}\n" for s, e, lab in track.chords))
        if track.key is not None:
            (labels / f"{track.track_id}.key").write_text(f"{track.key}\n")
        lines.append(json.dumps({"id": track.track_id, "audio_path": f"audio/{wav.name}",
                                 "split": _split(i, spec.num_tracks)}, sort_keys=True))
    (out / "manifest.jsonl").write_text("\n".join(lines) + "\n")
    return out / "manifest.jsonl"
