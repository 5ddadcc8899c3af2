"""Evaluation metrics and the dynamic-programming beat tracker.

The conventions mirror mir_eval where the two overlap: onset/beat F-measure
with a +-70 ms window, weighted key accuracy, macro ROC-AUC and mAP for
tagging, and frame accuracy for chords.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import ContractError, MetricUndefinedError, ParseError

__all__ = [
    "FScore",
    "KeyLabel",
    "parse_key",
    "event_f_score",
    "key_score",
    "weighted_key_accuracy",
    "roc_auc",
    "average_precision",
    "macro_roc_auc",
    "macro_map",
    "frame_accuracy",
    "estimate_tempo",
    "dp_beat_tracker",
]


def _events(x, what):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size > 1 and np.any(np.diff(x) <= 0):
        raise ContractError(f"{what} events must be strictly increasing")
    if x.size and x[0] < 0:
        raise ContractError(f"{what} events must be non-negative")
    return x


@dataclass(frozen=True)
class FScore:
    precision: float
    recall: float
    f_measure: float
    matches: int


def event_f_score(estimated, reference, tolerance: float = 0.07) -> FScore:
    """One-to-one matching of events within ``+-tolerance`` seconds.

    The two-pointer sweep matches the earliest compatible pair first. Because
    every tolerance window is an interval and the windows are ordered like
    the events, this is a maximum matching. Both lists empty gives zeros.
    """
    est, ref = _events(estimated, "estimated"), _events(reference, "reference")
    i = j = matches = 0
    while i < est.size and j < ref.size:
        if abs(est[i] - ref[j]) <= tolerance:
            matches += 1
            i += 1
            j += 1
        elif est[i] < ref[j]:
            i += 1
        else:
            j += 1
    p = matches / est.size if est.size else 0.0
    r = matches / ref.size if ref.size else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return FScore(p, r, f, matches)


_PITCH = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
_KEY_RE = re.compile(r"^\s*([A-Ga-g])([#b♯♭]*)\s+(major|minor|maj|min)\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class KeyLabel:
    tonic: int
    mode: str  # "major" | "minor"

    def __str__(self):
        names = ["C", "C#", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B"]
        return f"{names[self.tonic]} {self.mode}"

    @property
    def index(self) -> int:
        """0..11 major tonics, 12..23 minor tonics."""
        return self.tonic + (12 if self.mode == "minor" else 0)

    @classmethod
    def from_index(cls, index: int) -> "KeyLabel":
        if not 0 <= index < 24:
            raise ContractError(f"key index {index} outside 0..23")
        return cls(index % 12, "minor" if index >= 12 else "major")


def parse_key(text) -> KeyLabel:
    """Parse ``"Tonic mode"``; enharmonic spellings collapse (``C#`` == ``Db``)."""
    if isinstance(text, KeyLabel):
        return text
    m = _KEY_RE.match(str(text))
    if not m:
        raise ParseError(f"cannot parse key label {text!r}")
    letter, accidentals, mode = m.groups()
    tonic = _PITCH[letter.upper()] + accidentals.count("#") + accidentals.count("♯") \
        - accidentals.count("b") - accidentals.count("♭")
    mode = "major" if mode.lower().startswith("maj") else "minor"
    return KeyLabel(tonic % 12, mode)


def key_score(estimate, reference, fifth_both_directions: bool = False) -> float:
    est, ref = parse_key(estimate), parse_key(reference)
    interval = (est.tonic - ref.tonic) % 12
    if est == ref:
        return 1.0
    if est.mode == ref.mode and (interval == 7 or (fifth_both_directions and interval == 5)):
        return 0.5
    if ref.mode == "major" and est.mode == "minor" and interval == 9:
        return 0.3
    if ref.mode == "minor" and est.mode == "major" and interval == 3:
        return 0.3
    if est.tonic == ref.tonic:
        return 0.2
    return 0.0


def weighted_key_accuracy(estimates, references, fifth_both_directions: bool = False) -> float:
    """Mean per-item score: exact 1.0, fifth above 0.5, relative 0.3, parallel 0.2."""
    estimates, references = list(estimates), list(references)
    if len(estimates) != len(references):
        raise ContractError("estimates and references differ in length")
    if not estimates:
        raise MetricUndefinedError("no key items to score")
    return float(np.mean([key_score(e, r, fifth_both_directions) for e, r in zip(estimates, references)]))


def roc_auc(scores, labels) -> float:
    """Mann-Whitney statistic with mid-ranks for ties."""
    from scipy.stats import rankdata

    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos, n_neg = labels.sum(), (~labels).sum()
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError("ROC-AUC needs at least one positive and one negative")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def average_precision(scores, labels) -> float:
    """Sum of precision times recall increments over distinct score thresholds.

    Without ties this is the mean precision at the rank of each positive;
    tied items enter together, which keeps the value independent of item order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = labels.sum()
    if n_pos == 0:
        raise MetricUndefinedError("average precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    last_of_tie = np.r_[np.diff(s) != 0, True]
    tp = np.cumsum(y)[last_of_tie]
    seen = np.arange(1, s.size + 1)[last_of_tie]
    precision = tp / seen
    recall_gain = np.diff(np.r_[0, tp]) / n_pos
    return float(np.sum(precision * recall_gain))


def _macro(fn, scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape or scores.ndim != 2:
        raise ContractError("scores and labels must be equal (items, tags) matrices")
    pos = labels.sum(axis=0)
    include = (pos > 0) & (pos < labels.shape[0])
    if not include.any():
        raise MetricUndefinedError("no tag has both positive and negative items")
    skipped = int((~include).sum())
    if skipped:
        warnings.warn(f"{skipped} tag(s) skipped: all-positive or all-negative", stacklevel=3)
    return float(np.mean([fn(scores[:, t], labels[:, t]) for t in np.flatnonzero(include)]))


def macro_roc_auc(scores, labels) -> float:
    return _macro(roc_auc, scores, labels)


def macro_map(scores, labels) -> float:
    return _macro(average_precision, scores, labels)


def frame_accuracy(predicted, reference, mask=None) -> float:
    """Fraction of correct frames; ``mask`` is true on excluded frames."""
    predicted, reference = np.asarray(predicted), np.asarray(reference)
    if predicted.shape != reference.shape:
        raise ContractError("predicted and reference frame sequences differ in length")
    keep = np.ones(predicted.shape, bool) if mask is None else ~np.asarray(mask, dtype=bool)
    if keep.shape != predicted.shape:
        raise ContractError("mask length differs from the frame sequences")
    if not keep.any():
        raise MetricUndefinedError("every frame is masked")
    return float(np.mean(predicted[keep] == reference[keep]))


def estimate_tempo(activation, frame_rate: float = 63.0, min_bpm: float = 40.0,
                   max_bpm: float = 240.0, prior_bpm: float = 120.0, prior_octaves: float = 1.0) -> float:
    """Autocorrelation tempo in ``[min_bpm, max_bpm]``.

    The activation is smoothed (Gaussian, sigma one frame) so that a period
    falling between two integer lags is not split across them, each lag is
    weighted by a log-normal prior around ``prior_bpm`` and the winning lag
    is refined by parabolic interpolation.
    """
    x = gaussian_filter1d(np.asarray(activation, dtype=np.float64), 1.0)
    x = x - x.mean()
    n = x.size
    acf = np.correlate(x, x, mode="full")[n - 1:]
    lo = max(1, int(np.floor(60.0 * frame_rate / max_bpm)))
    hi = min(n - 2, int(np.ceil(60.0 * frame_rate / min_bpm)))
    if hi <= lo or acf[0] <= 0:
        return 0.0
    lags = np.arange(lo, hi + 1)
    bpm = 60.0 * frame_rate / lags
    weight = np.exp(-0.5 * (np.log2(bpm / prior_bpm) / prior_octaves) ** 2)
    best = lags[np.argmax(acf[lags] * weight)]
    lag = float(best)
    if 1 <= best < n - 1:
        y0, y1, y2 = acf[best - 1], acf[best], acf[best + 1]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            lag += 0.5 * (y0 - y2) / denom
    return 60.0 * frame_rate / lag


def dp_beat_tracker(activation, frame_rate: float = 63.0, tightness: float = 100.0,
                    min_bpm: float = 40.0, max_bpm: float = 240.0) -> np.ndarray:
    """Beat times maximising summed activation minus a tempo-deviation penalty.

    The activation is divided by its standard deviation first, so the
    trade-off ``tightness`` is independent of activation scale. With period
    ``p`` from :func:`estimate_tempo`, the score of a beat at frame ``t`` is

        C(t) = a(t) + max(0, max_s C(t - s) - tightness * log(s / p) ** 2)

    for spacings ``s`` in ``[max(p / 2, 60 / max_bpm s), 2p]``; the path is
    traced back from the best-scoring frame of the final period.
    """
    a = np.asarray(activation, dtype=np.float64).ravel()
    if not np.all(np.isfinite(a)):
        raise ContractError("activation must be finite")
    if a.size < 2 or not np.any(a > 0) or a.std() == 0:
        return np.zeros(0)
    a = a / a.std()
    bpm = estimate_tempo(a, frame_rate, min_bpm, max_bpm)
    if bpm <= 0:
        return np.zeros(0)
    period = 60.0 * frame_rate / bpm
    s_min = max(int(np.ceil(period / 2)), int(np.ceil(60.0 * frame_rate / max_bpm)))
    s_max = max(s_min, int(np.floor(2 * period)))
    spacings = np.arange(s_min, s_max + 1)
    penalty = tightness * np.log(spacings / period) ** 2
    score = a.copy()
    back = np.full(a.size, -1)
    for t in range(a.size):
        prev = t - spacings
        ok = prev >= 0
        if not ok.any():
            continue
        cand = score[prev[ok]] - penalty[ok]
        k = int(np.argmax(cand))
        if cand[k] > 0:
            score[t] = a[t] + cand[k]
            back[t] = prev[ok][k]
    tail = max(0, a.size - int(np.ceil(period)))
    t = tail + int(np.argmax(score[tail:]))
    beats = []
    while t >= 0:
        beats.append(t)
        t = back[t]
    beats = np.array(beats[::-1])
    # drop chain ends sitting on silence
    strong = a[beats] > 0.5 * np.median(a[beats])
    return beats[strong] / frame_rate
