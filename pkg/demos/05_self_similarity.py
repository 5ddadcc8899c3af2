"""Token self-similarity across depth, rendered as grayscale images.

Run: python demos/05_self_similarity.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from vit1d import ViT1D, encode, self_similarity
from vit1d.audio import tile_segments
from vit1d.synth import SyntheticCorpusSpec, generate_track
from vit1d.tensorio import render_matrix

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-ssm")
track = generate_track(SyntheticCorpusSpec(1, 8.0, "chord-sequence", seed=1), 0)
mel = tile_segments(track.clip)[0]
hidden = encode(ViT1D(seed=0).eval(), mel, token_layers=(0, 3, 12)).hidden

for k, z in hidden.items():
    s = self_similarity(z[0, 1:])
    off = s[~np.eye(len(s), dtype=bool)]
    render_matrix(s, out / f"ssm_L{k}.pgm")
    print(f"layer {k:2d}: mean off-diagonal similarity {off.mean():.3f}, min {off.min():.3f}")
print("chord changes at", [round(c[0], 2) for c in track.chords if c[0] < 4.0], "s")
print(f"images in {out}/")
