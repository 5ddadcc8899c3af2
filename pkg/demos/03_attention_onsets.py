"""Onsets from attention columns versus spectral flux.

The pseudo-activation of a head is the mean attention each frame receives.
At random initialization it is almost flat, so peak picking has nothing to
hold on to; spectral flux is the classical baseline. Passing a checkpoint
(e.g. demo-pretrain/checkpoints/final) compares a trained encoder.

Run: python demos/03_attention_onsets.py [checkpoint_dir]
"""

import sys

import numpy as np

from vit1d import ViT1D, detect_onsets, event_f_score, pick_peaks, pseudo_activation, spectral_flux
from vit1d.analysis import attention_maps
from vit1d.audio import tile_segments
from vit1d.checkpoint import load_encoder
from vit1d.synth import SyntheticCorpusSpec, generate_corpus

tracks = generate_corpus(SyntheticCorpusSpec(4, 12.0, "click-train", seed=7, snr_db=20))
model = load_encoder(sys.argv[1]) if len(sys.argv) > 1 else ViT1D(seed=0).eval()

mel = tile_segments(tracks[0].clip)[0]
curve = pseudo_activation(attention_maps(model, mel, 9)[0]).values
print(f"layer 9 head 0 pseudo-activation: std/mean = {curve.std() / curve.mean():.4f}")

for track in tracks:
    flux = []
    for window in tile_segments(track.clip):
        f = spectral_flux(window)
        flux.append(window.source_offset + pick_peaks(f / f.max()))
    f_flux = event_f_score(np.concatenate(flux), track.onsets).f_measure
    f_attn = event_f_score(detect_onsets(model, track.clip, 9, 0), track.onsets).f_measure
    print(f"{track.track_id}: flux F {f_flux:.3f}   attention F {f_attn:.3f}")
