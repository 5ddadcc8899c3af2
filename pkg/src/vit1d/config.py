"""Global configuration file and corpus manifest.

The config is a JSON object with one section per module. Every key has a
default (printed by ``vit1d --print-defaults``), so a file only needs the
values it overrides; unknown sections or keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .analysis import PeakPickConfig
from .audio import MelConfig
from .encoder import EncoderConfig
from .errors import ConfigError, DataError
from .probing import ProbeConfig
from .training import TrainConfig

__all__ = ["AnalysisConfig", "GlobalConfig", "load_config", "read_manifest", "ManifestRecord"]


@dataclass(frozen=True)
class AnalysisConfig:
    layer: int = 9
    head: int = 0
    by: str = "column"
    min_distance: int = 3
    threshold: float = 0.2
    smoothing: int = 0
    tolerance: float = 0.07

    def __post_init__(self):
        if self.by not in ("column", "row"):
            raise ConfigError("analysis.by must be 'column' or 'row'")

    @property
    def peaks(self) -> PeakPickConfig:
        return PeakPickConfig(self.min_distance, self.threshold, self.smoothing)


_SECTIONS = {
    "mel": MelConfig,
    "encoder": EncoderConfig,
    "train": TrainConfig,
    "probe": ProbeConfig,
    "analysis": AnalysisConfig,
}


@dataclass(frozen=True)
class GlobalConfig:
    mel: MelConfig = field(default_factory=MelConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    def __post_init__(self):
        if self.encoder.n_mels != self.mel.n_mels:
            raise ConfigError(
                f"encoder.n_mels {self.encoder.n_mels} != mel.n_mels {self.mel.n_mels}"
            )
        if self.encoder.seq_len != self.mel.segment_frames:
            raise ConfigError(
                f"encoder.seq_len {self.encoder.seq_len} != frames per segment {self.mel.segment_frames}"
            )

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in _SECTIONS}

    @classmethod
    def from_dict(cls, data: dict) -> "GlobalConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(data) - set(_SECTIONS))
        if unknown:
            raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")
        sections = {}
        for name, klass in _SECTIONS.items():
            values = data.get(name, {})
            allowed = {f.name for f in fields(klass)}
            bad = sorted(set(values) - allowed)
            if bad:
                raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(bad)}")
            try:
                sections[name] = klass(**values)
            except TypeError as exc:
                raise ConfigError(f"[{name}]: {exc}") from exc
        return cls(**sections)


def load_config(path=None) -> GlobalConfig:
    if path is None:
        return GlobalConfig()
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} does not exist") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return GlobalConfig.from_dict(data)


@dataclass(frozen=True)
class ManifestRecord:
    id: str
    audio_path: Path
    split: str


def read_manifest(path) -> list[ManifestRecord]:
    """JSON lines ``{id, audio_path, split}``; relative paths resolve against
    the manifest's directory."""
    path = Path(path)
    base = path.parent
    records = []
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            item = json.loads(line)
            audio = Path(item["audio_path"])
            records.append(ManifestRecord(str(item["id"]), audio if audio.is_absolute() else base / audio,
                                          str(item.get("split", "train"))))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}:{n}: bad manifest record ({exc})") from exc
    if not records:
        raise DataError(f"{path}: manifest is empty")
    return records
