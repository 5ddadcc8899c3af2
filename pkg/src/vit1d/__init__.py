"""ViT-1D: a frame-patch transformer on log-mel spectrograms, trained with a
contrastive objective, plus linear probing and attention/SSM analysis tools."""

__version__ = "0.1.0"

from .audio import AudioClip, MelConfig, MelSpectrogram, compute_mel, load_audio, sample_segment_pair, spectral_flux
from .encoder import EncoderConfig, EncoderOutput, ViT1D, encode, positional_encoding
from .training import TrainConfig, Trainer, lr_schedule, nt_xent_loss
from .analysis import PeakPickConfig, detect_onsets, pick_peaks, pseudo_activation, self_similarity
from .probing import ProbeConfig, ProbeMode, extract_features, train_probe
from .metrics import event_f_score, key_score, macro_roc_auc, dp_beat_tracker
from .checkpoint import load_encoder, save_encoder

__all__ = [
    "AudioClip", "MelConfig", "MelSpectrogram", "compute_mel", "load_audio", "sample_segment_pair",
    "spectral_flux", "EncoderConfig", "EncoderOutput", "ViT1D", "encode", "positional_encoding",
    "TrainConfig", "Trainer", "lr_schedule", "nt_xent_loss", "PeakPickConfig", "detect_onsets",
    "pick_peaks", "pseudo_activation", "self_similarity", "ProbeConfig", "ProbeMode",
    "extract_features", "train_probe", "event_f_score", "key_score", "macro_roc_auc",
    "dp_beat_tracker", "load_encoder", "save_encoder",
]
