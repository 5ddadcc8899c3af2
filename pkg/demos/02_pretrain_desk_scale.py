"""Contrastive pretraining on a small synthetic corpus.

Sixteen click-train tracks, 8 pairs per batch. Pairs are two disjoint 4 s
cuts from one track; the other tracks in the batch are negatives. With
random weights the loss sits near log(2N - 1) = log 15; it drops quickly
because tempo and click pitch identify each track.

Run: python demos/02_pretrain_desk_scale.py [out_dir]
"""

import math
import sys

import numpy as np
import torch

from vit1d.synth import SyntheticCorpusSpec, generate_corpus
from vit1d.training import TrainConfig, Trainer

torch.set_num_threads(1)
out_dir = sys.argv[1] if len(sys.argv) > 1 else "demo-pretrain"

tracks = [t.clip for t in generate_corpus(SyntheticCorpusSpec(16, 12.0, "click-train", seed=0))]
trainer = Trainer(tracks, TrainConfig(batch_pairs=8, epochs=50, checkpoint_every=25))
print(f"{trainer.total_steps} steps, expected step-0 loss ~ {math.log(15):.3f}")


def report(state):
    step, lr, loss = state.history[-1]
    if step % 10 == 0:
        print(f"step {step:4d}  lr {lr:.2e}  loss {loss:.4f}")
    return False


state = trainer.fit(out_dir, until=report)
losses = np.array([h[2] for h in state.history])
print(f"first {losses[0]:.4f}  last-10 mean {losses[-10:].mean():.4f}")
print(f"checkpoints and loss.csv under {out_dir}/")
