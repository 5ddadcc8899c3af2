"""Acceptance criteria, one test each, at their stated tolerances.

Every test prints a PASS/FAIL line; the collected lines are repeated in the
pytest terminal summary.
"""

import math
import time

import numpy as np
import pytest
import torch

from acceptance_report import check
from conftest import TINY
from oracles import brute_key_score, central_difference_errors, max_matching, pairwise_auc
from vit1d.analysis import detect_onsets, pick_peaks, pseudo_activation, self_similarity
from vit1d.audio import AudioClip, compute_mel, spectral_flux, tile_segments
from vit1d.encoder import ViT1D, encode
from vit1d.errors import DegenerateBatchError
from vit1d.metrics import KeyLabel, dp_beat_tracker, event_f_score, key_score, macro_roc_auc
from vit1d.probing import (
    ProbeConfig,
    ProbeMode,
    extract_features,
    frame_to_token,
    smooth_beat_targets,
    train_probe,
    upsample_beat_logits,
)
from vit1d.synth import SyntheticCorpusSpec, generate_corpus
from vit1d.training import TrainConfig, Trainer, load_checkpoint, lr_schedule, nt_xent_loss, save_checkpoint


def test_shape_law():
    model = ViT1D(seed=0).eval()
    clip = AudioClip(np.random.default_rng(0).normal(0, 0.1, 4 * 22050), 22050)
    encode(model, np.zeros((128, 126), np.float32))  # warm-up
    start = time.perf_counter()
    mel = compute_mel(clip)
    out = encode(model, mel, attention_layers=range(1, 13))
    elapsed = time.perf_counter() - start
    attn = out.attention_tensor()[0]
    shapes = (mel.values.shape, tuple(out.tokens.shape[1:]), tuple(attn.shape))
    ok = shapes == ((128, 126), (127, 192), (12, 3, 127, 127)) and elapsed < 1.0
    check("shape law 4 s -> 128x126 -> 127x192 -> 12x3x127x127 in < 1 s", ok, f"{shapes}, {elapsed:.3f} s")


def test_nt_xent_oracle():
    orth = torch.eye(2, 4, dtype=torch.float64)
    same = torch.ones(2, 4, dtype=torch.float64)
    v1 = nt_xent_loss(orth, orth.clone(), 0.1).item()
    v2 = nt_xent_loss(same, same.clone(), 0.1).item()
    closed1 = -math.log(math.exp(10) / (math.exp(10) + 2))
    try:
        nt_xent_loss(torch.ones(1, 4), torch.ones(1, 4))
        raised = False
    except DegenerateBatchError:
        raised = True
    ok = abs(v1 - closed1) < 1e-6 and abs(v1 - 9.08e-5) < 1e-6 and abs(v2 - math.log(3)) < 1e-6 and raised
    check("NT-Xent closed forms 9.08e-5 and log 3 within 1e-6; single pair rejected", ok,
          f"{v1:.6e}, {v2:.7f}, degenerate raised={raised}")


def test_gradient_check():
    start = time.perf_counter()
    model = ViT1D(TINY, seed=0).double()
    x = torch.randn(4, TINY.n_mels, TINY.seq_len, dtype=torch.float64, generator=torch.Generator().manual_seed(0))

    def loss():
        cls = model(x, check_finite=False).class_token
        return nt_xent_loss(cls[:2], cls[2:], 0.1)

    errors = central_difference_errors(model, loss, h=1e-5)
    elapsed = time.perf_counter() - start
    worst = max(errors, key=errors.get)
    ok = errors[worst] < 1e-4 and elapsed < 60
    check("tiny-encoder NT-Xent gradients vs central differences < 1e-4 for every tensor in < 1 min", ok,
          f"{len(errors)} tensors, worst {worst} {errors[worst]:.2e}, {elapsed:.1f} s")


def test_attention_rows_stochastic():
    model = ViT1D(seed=0).eval()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10):
        x = rng.normal(0, 1, (10, 128, 126)).astype(np.float32)
        attn = encode(model, x, attention_layers=range(1, 13)).attention_tensor()
        worst = max(worst, float((attn.sum(dim=-1) - 1).abs().max()))
    check("attention rows sum to 1 within 1e-6 (100 inputs, all layers and heads)", worst < 1e-6,
          f"max deviation {worst:.2e}")


@pytest.fixture(scope="module")
def desk_corpus():
    return [t.clip for t in generate_corpus(SyntheticCorpusSpec(16, 12.0, "click-train", seed=0))]


def test_desk_scale_training(desk_corpus, tmp_path):
    start = time.perf_counter()
    cfg = TrainConfig(batch_pairs=8, epochs=250)
    trainer = Trainer(desk_corpus, cfg)

    def halved(state):
        losses = [h[2] for h in state.history]
        return len(losses) >= 10 and np.mean(losses[-10:]) < 0.5 * losses[0]

    trainer.fit(max_steps=500, until=halved)
    losses = [h[2] for h in trainer.state.history]
    reached = halved(trainer.state)
    save_checkpoint(trainer.state, tmp_path / "ck", cfg)
    resumed = Trainer(desk_corpus, cfg, state=load_checkpoint(tmp_path / "ck"))
    next_original = np.float32(trainer.train_step())
    next_resumed = np.float32(resumed.train_step())
    bitwise = next_original.tobytes() == next_resumed.tobytes()
    elapsed = time.perf_counter() - start
    ok = reached and bitwise and elapsed < 600
    check("desk-scale training halves the loss within 500 steps; resume is bitwise; < 10 min", ok,
          f"step-0 {losses[0]:.4f}, last-10 mean {np.mean(losses[-10:]):.4f} after {len(losses)} steps, "
          f"resume {next_original!r} vs {next_resumed!r}, {elapsed:.0f} s")


def test_residual_identity():
    model = ViT1D(seed=0).eval()
    with torch.no_grad():
        for p in model.blocks.parameters():
            p.zero_()
    x = torch.from_numpy(np.random.default_rng(1).normal(size=(2, 128, 126)).astype(np.float32))
    out = model(x, token_layers=range(13))
    patches = model.patch_embed(x.transpose(1, 2))
    cls = model.cls_token + patches.mean(dim=1)
    expected = torch.cat([cls[:, None], patches], dim=1) + model.pos_embed
    hidden_ok = all(torch.equal(out.hidden[k], expected) for k in range(13))
    final_ok = torch.equal(out.tokens, model.norm(expected))
    check("zeroed blocks: every block output equals patch embedding + positional encoding exactly",
          hidden_ok and final_ok, f"hidden equal={hidden_ok}, final = LayerNorm(embedding) {final_ok}")


def test_metric_oracles():
    rng = np.random.default_rng(0)
    mismatches = 0
    for _ in range(1000):
        est = np.unique(np.round(rng.uniform(0, 3, rng.integers(0, 12)), 3))
        ref = np.unique(np.round(rng.uniform(0, 3, rng.integers(0, 12)), 3))
        tol = float(rng.choice([0.0, 0.02, 0.07, 0.2]))
        mismatches += event_f_score(est, ref, tol).matches != max_matching(est, ref, tol)
    scores = rng.uniform(size=(50, 5))
    labels = rng.uniform(size=(50, 5)) < 0.4
    oracle = np.mean([pairwise_auc(scores[:, t], labels[:, t]) for t in range(5)])
    auc_err = abs(macro_roc_auc(scores, labels) - oracle)
    keys = [KeyLabel(t, m) for m in ("major", "minor") for t in range(12)]
    values = {key_score(e, r) for e in keys for r in keys}
    key_ok = all(key_score(e, r) == brute_key_score((e.tonic, e.mode), (r.tonic, r.mode)) for e in keys for r in keys)
    examples = (key_score("C major", "C major"), key_score("G major", "C major"), key_score("A minor", "C major"))
    ok = (mismatches == 0 and auc_err < 1e-9 and values <= {0.0, 0.2, 0.3, 0.5, 1.0} and key_ok
          and examples == (1.0, 0.5, 0.3))
    check("metric oracles: F-score matching exact on 1000 cases, AUC within 1e-9, key scores", ok,
          f"{mismatches} matching mismatches, AUC error {auc_err:.1e}, key values {sorted(values)}")


def _flux_f(tracks):
    scores = []
    for track in tracks:
        est = []
        for mel in tile_segments(track.clip):
            flux = spectral_flux(mel)
            est.append(mel.source_offset + pick_peaks(flux / flux.max()))
        scores.append(event_f_score(np.concatenate(est), track.onsets, 0.07).f_measure)
    return float(np.mean(scores))


def test_onset_pipeline_on_clicks():
    f20 = _flux_f(generate_corpus(SyntheticCorpusSpec(16, 12.0, "click-train", seed=0, snr_db=20.0)))
    f30 = _flux_f(generate_corpus(SyntheticCorpusSpec(16, 12.0, "click-train", seed=0, snr_db=30.0)))
    track = generate_corpus(SyntheticCorpusSpec(1, 12.0, "click-train", seed=2))[0]
    times = detect_onsets(ViT1D(seed=0).eval(), track.clip, layer=9, head=0)
    end_to_end = times.ndim == 1 and bool(np.all(np.diff(times) > 0))
    ratios = []
    for seed in range(20):
        model = ViT1D(seed=seed).eval()
        mel = np.random.default_rng(seed).normal(size=(128, 126)).astype(np.float32)
        a = pseudo_activation(encode(model, mel, attention_layers=[9]).attentions[9][0, 0].numpy()).values
        ratios.append(a.std() / a.mean())
    ok = f20 >= 0.9 and f30 >= 0.9 and end_to_end and max(ratios) < 0.1
    check("onsets: flux F >= 0.9 at 70 ms on clicks (SNR 20 and 30 dB); attention path runs; "
          "random-init std/mean < 0.1 over 20 seeds", ok,
          f"F@20dB {f20:.3f}, F@30dB {f30:.3f}, {times.size} attention onsets, max ratio {max(ratios):.4f}")


def test_probing_contracts():
    model = ViT1D(seed=0).eval()
    mel = np.random.default_rng(3).normal(size=(128, 126)).astype(np.float32)
    width = extract_features(model, mel, ProbeMode("stack")).dim
    seq_ok = np.array_equal(extract_features(model, mel, "seq").values, encode(model, mel).tokens[0, 1:].numpy())
    before = {k: v.clone() for k, v in model.state_dict().items()}
    rng = np.random.default_rng(0)

    def separable(n):
        y = rng.integers(0, 2, n)
        x = rng.normal(size=(n, 4)).astype(np.float32)
        x[:, 0] = np.where(y == 1, 0.5, -0.5) + np.sign(2 * y - 1) * np.abs(rng.normal(0, 0.5, n))
        return x, y

    feats = np.concatenate([extract_features(model, mel * (1 + 0.1 * i), "cls").values for i in range(8)])
    train_probe(feats, np.arange(8) % 2, "key", ProbeConfig(epochs=5))
    frozen = all(torch.equal(v, before[k]) for k, v in model.state_dict().items())
    (x, y), (vx, vy) = separable(400), separable(100)
    result = train_probe(x, y, "chord", ProbeConfig(epochs=200, batch_size=32), vx, vy)
    accuracy = float(np.mean(result.head.predict(vx) == vy))
    ok = width == 768 and seq_ok and frozen and accuracy == 1.0
    check("probing: Stack width 768, Seq excludes class token, encoder frozen, separable probe accuracy 1.0",
          ok, f"width {width}, slice {seq_ok}, frozen {frozen}, accuracy {accuracy}")


def test_beat_plumbing():
    smooth = smooth_beat_targets([10 / 63], 63, 20)[8:13].tolist()
    feats = torch.randn(126, 12)
    head = torch.nn.Linear(12, 2)
    frames, logits = upsample_beat_logits(feats, head), head(feats)
    round_trip = all(frames[j] == logits[frame_to_token(j) - 1, j % 2] for j in range(252)) and frames.numel() == 252
    act = np.zeros(8 * 63)
    impulses = np.round(np.arange(0.25, 8, 0.5) * 63).astype(int)
    act[impulses] = 1.0
    beats = dp_beat_tracker(act, 63)
    within = len(beats) == len(impulses) and np.max(np.abs(beats * 63 - impulses)) <= 1.0
    ok = smooth == [0, 0.5, 1, 0.5, 0] and round_trip and within
    check("beat plumbing: smoothing [0,0.5,1,0.5,0], upsampling round trip, 120 BPM train within 1 frame", ok,
          f"smooth {smooth}, round trip {round_trip}, {len(beats)}/{len(impulses)} beats")


def test_ssm_properties():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        z = rng.normal(size=(126, 192))
        s = self_similarity(z)
        scaled = self_similarity(z * rng.uniform(0.01, 100))
        worst = max(worst, np.abs(s - s.T).max(), np.abs(np.diag(s) - 1).max(), np.abs(s - scaled).max())
    check("SSM symmetric, unit diagonal, scale invariant within 1e-6 on 100 token sets", worst < 1e-6,
          f"max deviation {worst:.1e}")


def test_lr_schedule_endpoints():
    cfg = TrainConfig()
    first, last = lr_schedule(0, 1000, cfg), lr_schedule(1000, 1000, cfg)
    ok = abs(first - 3e-4) <= 1e-12 * 3e-4 and abs(last - 5e-7) <= 1e-12 * 5e-7
    check("LR schedule endpoints 3e-4 and 5e-7 exact to 1e-12 relative", ok, f"{first!r}, {last!r}")


def test_lr_schedule_midpoint_closed_form():
    mid = lr_schedule(500, 1000, TrainConfig())
    closed = 5e-7 + 0.5 * (3e-4 - 5e-7)
    check("LR schedule midpoint equals final + (base - final)/2 = 1.5025e-4 within 1e-9", abs(mid - closed) < 1e-9,
          f"{mid!r}")


@pytest.mark.xfail(strict=True, reason="the stated literal 1.50275e-4 is not the cosine midpoint 1.5025e-4")
def test_lr_schedule_midpoint_literal():
    mid = lr_schedule(500, 1000, TrainConfig())
    check("LR schedule midpoint 1.50275e-4 within 1e-9 (known unattainable literal)",
          abs(mid - 1.50275e-4) < 1e-9, f"{mid!r}, off by {abs(mid - 1.50275e-4):.2e}")
