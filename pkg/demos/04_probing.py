"""Linear probing of frozen features for chord recognition.

Frame-wise Seq features (one token per 1/31.5 s frame) feed a single
linear layer over 25 chord classes. Training labels come from a synthetic
chord-sequence corpus, so the targets are exact.

Run: python demos/04_probing.py [checkpoint_dir]
"""

import sys

import numpy as np
import torch

from vit1d import ViT1D, extract_features, train_probe
from vit1d.audio import tile_segments
from vit1d.checkpoint import load_encoder
from vit1d.metrics import frame_accuracy
from vit1d.probing import EXCLUDED, ProbeConfig, rasterize_chords
from vit1d.synth import SyntheticCorpusSpec, generate_corpus

torch.set_num_threads(1)
model = load_encoder(sys.argv[1]) if len(sys.argv) > 1 else ViT1D(seed=0).eval()
tracks = generate_corpus(SyntheticCorpusSpec(10, 8.0, "chord-sequence", seed=3))


def frames(track):
    x = np.concatenate([extract_features(model, w, "seq").values for w in tile_segments(track.clip)])
    y = rasterize_chords(track.chords, 0.0, len(x))
    return x, y


train = [frames(t) for t in tracks[:8]]
test = [frames(t) for t in tracks[8:]]
x, y = (np.concatenate(a) for a in zip(*train))
tx, ty = (np.concatenate(a) for a in zip(*test))
print(f"train frames {len(x)}, test frames {len(tx)}, feature width {x.shape[1]}")

result = train_probe(x, y, "chord", ProbeConfig(epochs=60))
print(f"best validation frame accuracy {result.best_metric:.3f} after {len(result.trace)} epochs")
print(f"test frame accuracy {frame_accuracy(result.head.predict(tx), ty, ty == EXCLUDED):.3f}")
