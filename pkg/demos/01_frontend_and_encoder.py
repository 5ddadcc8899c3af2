"""From a waveform to tokens and attention maps.

Run: python demos/01_frontend_and_encoder.py
"""

import numpy as np

from vit1d import AudioClip, ViT1D, compute_mel, encode

sr = 22050
t = np.arange(4 * sr) / sr
# a 4 s clip: a 220 Hz tone with a click every half second
x = 0.3 * np.sin(2 * np.pi * 220 * t)
for onset in np.arange(0.25, 4.0, 0.5):
    i = int(onset * sr)
    x[i:i + 200] += np.hanning(200)
clip = AudioClip(x / np.abs(x).max(), sr)

mel = compute_mel(clip)
print(f"mel: {mel.values.shape} at {mel.frame_rate} Hz, range {mel.values.min():.1f}..{mel.values.max():.1f}")

model = ViT1D(seed=0).eval()
out = encode(model, mel, attention_layers=range(1, 13), token_layers=(3, 12))
print("tokens:", tuple(out.tokens.shape[1:]), " class token norm:", float(out.class_token.norm()))
attn = out.attention_tensor()[0]
print("attention:", tuple(attn.shape))
print("row sums stay at 1:", float((attn.sum(-1) - 1).abs().max()))

# each sequence token sees a single frame: changing frame 50 moves token 51 first
bumped = mel.values.copy()
bumped[:, 50] += 1.0
z0 = encode(model, mel, token_layers=[0]).hidden[0][0]
z1 = encode(model, bumped, token_layers=[0]).hidden[0][0]
changed = (z0 - z1).abs().sum(dim=1).nonzero().flatten().tolist()
print("embedding rows touched by one frame:", changed, "(class token mixes all frames)")
