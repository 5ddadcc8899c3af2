"""Command-line entry point: ``vit1d <command> ...``.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Every command that
takes ``--out`` writes a reproducibility record to ``<out>/logs/run.json``
and keeps artifacts under ``<out>/{checkpoints,features,metrics,figures,logs}``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
import torch

from . import __version__
from .analysis import detect_onsets, pick_peaks, pseudo_activation, self_similarity
from .audio import AudioClip, load_audio, spectral_flux, tile_segments
from .checkpoint import checkpoint_exists, load_encoder
from .config import GlobalConfig, load_config, read_manifest
from .encoder import ViT1D, encode
from .errors import Vit1dError
from .metrics import (
    KeyLabel,
    event_f_score,
    frame_accuracy,
    macro_map,
    macro_roc_auc,
    weighted_key_accuracy,
    dp_beat_tracker,
)
from .probing import (
    EXCLUDED,
    ProbeMode,
    chord_name,
    extract_features,
    rasterize_chords,
    read_events,
    read_key,
    read_lab,
    read_tags,
    smooth_beat_targets,
    train_probe,
)
from .synth import KINDS, SyntheticCorpusSpec, write_corpus
from .tensorio import read_matrix, render_matrix, write_matrix
from .training import Trainer, load_checkpoint

log = logging.getLogger("vit1d")


class UsageError(Exception):
    pass


def _layout(out: Path) -> Path:
    for sub in ("checkpoints", "features", "metrics", "figures", "logs"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    return out


def _record(out: Path, args, cfg: GlobalConfig | None, argv):
    record = {
        "command": args.command,
        "argv": list(argv),
        "version": __version__,
        "threads": args.threads,
        "seed": getattr(args, "seed", None) if cfg is None else cfg.train.seed,
        "config": cfg.to_dict() if cfg is not None else None,
    }
    (out / "logs").mkdir(parents=True, exist_ok=True)
    (out / "logs" / "run.json").write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")


def _require_file(path, what):
    if path is None or not Path(path).is_file():
        raise UsageError(f"{what} {path} does not exist")


def _require_checkpoint(args):
    if getattr(args, "random_init", False):
        return
    if args.checkpoint is None or not checkpoint_exists(args.checkpoint):
        raise UsageError(f"checkpoint {args.checkpoint} not found (expected a directory with manifest.json)")


def _model(args, cfg: GlobalConfig) -> ViT1D:
    if getattr(args, "random_init", False):
        return ViT1D(cfg.encoder, seed=args.seed).eval()
    return load_encoder(args.checkpoint)


def _tracks(manifest, cfg, split=None):
    for rec in read_manifest(manifest):
        if split is None or rec.split == split:
            clip = load_audio(rec.audio_path, cfg.mel.sample_rate)
            yield rec, AudioClip(clip.samples, clip.sample_rate, rec.id)


# --- commands ---------------------------------------------------------------

def cmd_synth(args, cfg, argv):
    spec = SyntheticCorpusSpec(args.tracks, args.duration, args.kind, args.seed, cfg.mel.sample_rate, args.snr)
    out = Path(args.out)
    write_corpus(spec, out)
    _record(out, args, None, argv)
    print(out / "manifest.jsonl")


def cmd_pretrain(args, cfg, argv):
    _require_file(args.manifest, "manifest")
    tracks = [clip for rec, clip in _tracks(args.manifest, cfg) if rec.split == "train"]
    out = _layout(Path(args.out))
    _record(out, args, cfg, argv)
    state = None
    if args.resume:
        state = load_checkpoint(args.resume, cfg.encoder, cfg.train)
    trainer = Trainer(tracks, cfg.train, cfg.encoder, cfg.mel, state=state)
    trainer.fit(out, max_steps=args.max_steps)
    print(out / "checkpoints" / "final")


def cmd_extract(args, cfg, argv):
    _require_checkpoint(args)
    _require_file(args.manifest, "manifest")
    model = load_encoder(args.checkpoint)
    mode = ProbeMode.parse(args.mode, _layers(args.layers), args.pooled)
    out = _layout(Path(args.out))
    _record(out, args, cfg, argv)
    for rec, clip in _tracks(args.manifest, cfg):
        feats = [extract_features(model, mel, mode, cfg.mel.frame_rate) for mel in tile_segments(clip, cfg.mel)]
        values = np.concatenate([f.values for f in feats])
        write_matrix(out / "features" / f"{rec.id}.mat", values, track_id=rec.id, split=rec.split,
                     mode=args.mode, layers=list(mode.layers), pooled=mode.pooled, dim=int(values.shape[1]),
                     granularity=feats[0].granularity, windows=len(feats),
                     frame_rate=feats[0].frame_rate, window_seconds=cfg.mel.segment_seconds)


def _load_features(path):
    path = Path(path)
    if (path / "features").is_dir():
        path = path / "features"
    files = sorted(path.glob("*.mat"))
    if not files:
        raise UsageError(f"no feature files in {path}")
    return [read_matrix(f) for f in files]


def _probe_data(task, items, labels, cfg, vocabulary):
    """Per-track (features, targets) arranged for :func:`train_probe`."""
    labels = Path(labels)
    out = []
    for values, head in items:
        tid, windows = head["track_id"], head["windows"]
        if task == "key":
            y = np.full(len(values), read_key(labels / f"{tid}.key").index)
            x = values
        elif task == "tagging":
            y = np.tile(read_tags(labels / f"{tid}.tags", vocabulary), (len(values), 1))
            x = values
        elif task == "chord":
            y = rasterize_chords(read_lab(labels / f"{tid}.lab"), 0.0, len(values), head["frame_rate"])
            x = values
        else:
            x = values.reshape(windows, -1, values.shape[1])
            beats = read_events(labels / f"{tid}.beats")
            span, n = head["window_seconds"], 2 * x.shape[1]
            y = np.stack([
                smooth_beat_targets(beats[(beats >= w * span) & (beats < (w + 1) * span)] - w * span,
                                    cfg.probe.beat_frame_rate, n)
                for w in range(windows)])
        out.append((head, x, y))
    return out


def _write_prediction(task, pred_dir, head, probe, x, cfg, vocabulary):
    tid = head["track_id"]
    if task == "key":
        with torch.no_grad():
            logits = probe(torch.as_tensor(x)).mean(dim=0)
        (pred_dir / f"{tid}.key").write_text(f"{KeyLabel.from_index(int(logits.argmax()))}\n")
    elif task == "tagging":
        scores = probe.predict(x).mean(axis=0)
        (pred_dir / f"{tid}.tagscores").write_text("".join(f"{t} {s:.6f}\n" for t, s in zip(vocabulary, scores)))
    elif task == "chord":
        pred, rate = probe.predict(x), head["frame_rate"]
        lines, start = [], 0
        for i in range(1, len(pred) + 1):
            if i == len(pred) or pred[i] != pred[start]:
                lines.append(f"{start / rate:.6f} {i / rate:.6f} {chord_name(int(pred[start]))}\n")
                start = i
        (pred_dir / f"{tid}.lab").write_text("".join(lines))
    else:
        act = probe.predict(x).reshape(-1)
        beats = dp_beat_tracker(act, cfg.probe.beat_frame_rate)
        (pred_dir / f"{tid}.beats").write_text("".join(f"{t:.6f}\n" for t in beats))


def cmd_probe(args, cfg, argv):
    items = _load_features(args.features)
    if not Path(args.labels).is_dir():
        raise UsageError(f"labels directory {args.labels} does not exist")
    vocabulary = None
    if args.task == "tagging":
        _require_file(args.vocabulary, "vocabulary")
        vocabulary = [t.strip() for t in Path(args.vocabulary).read_text().splitlines() if t.strip()]
    out = _layout(Path(args.out))
    _record(out, args, cfg, argv)
    data = _probe_data(args.task, items, args.labels, cfg, vocabulary)

    def stack(split):
        sel = [(x, y) for h, x, y in data if h.get("split") == split]
        if not sel:
            return None, None
        return np.concatenate([x for x, _ in sel]), np.concatenate([y for _, y in sel])

    tx, ty = stack("train")
    if tx is None:
        raise Vit1dError("no training tracks among the features")
    vx, vy = stack("valid")
    result = train_probe(tx, ty, args.task, cfg.probe, vx, vy)
    result.head.save(out / "checkpoints" / f"probe-{args.task}", task=args.task)
    pred_dir = out / "predictions"
    pred_dir.mkdir(exist_ok=True)
    for h, x, _ in data:
        _write_prediction(args.task, pred_dir, h, result.head, x, cfg, vocabulary)
    summary = {"task": args.task, "best_valid_metric": result.best_metric,
               "epochs": len(result.trace), "trace": [list(map(float, t)) for t in result.trace]}
    (out / "metrics" / f"probe-{args.task}.json").write_text(json.dumps(summary, indent=1) + "\n")
    print(json.dumps({"task": args.task, "best_valid_metric": result.best_metric}))


def _pairs(pred, ref, suffix):
    pred, ref = Path(pred), Path(ref)
    pairs = []
    for r in sorted(ref.glob(f"*{suffix}")):
        p = pred / r.name
        if p.is_file():
            pairs.append((p, r))
    if not pairs:
        raise Vit1dError(f"no matching {suffix} files between {pred} and {ref}")
    return pairs


def evaluate(task, pred, ref, tolerance=0.07, frame_rate=31.5):
    if task in ("onset", "beat"):
        suffix = ".onsets" if task == "onset" else ".beats"
        scores = [event_f_score(read_events(p), read_events(r), tolerance) for p, r in _pairs(pred, ref, suffix)]
        return {"precision": float(np.mean([s.precision for s in scores])),
                "recall": float(np.mean([s.recall for s in scores])),
                "f_measure": float(np.mean([s.f_measure for s in scores])), "tracks": len(scores)}
    if task == "key":
        pairs = _pairs(pred, ref, ".key")
        return {"weighted_accuracy": weighted_key_accuracy([read_key(p) for p, _ in pairs],
                                                           [read_key(r) for _, r in pairs]),
                "tracks": len(pairs)}
    if task == "chord":
        predicted, reference = [], []
        for p, r in _pairs(pred, ref, ".lab"):
            segs = read_lab(r)
            n = int(np.floor(max(e for _, e, _ in segs) * frame_rate))
            reference.append(rasterize_chords(segs, 0.0, n, frame_rate))
            predicted.append(rasterize_chords(read_lab(p), 0.0, n, frame_rate))
        ref_all = np.concatenate(reference)
        return {"frame_accuracy": frame_accuracy(np.concatenate(predicted), ref_all, ref_all == EXCLUDED),
                "tracks": len(reference)}
    if task == "tagging":
        pred_files = sorted(Path(pred).glob("*.tagscores"))
        if not pred_files:
            raise Vit1dError(f"no .tagscores files in {pred}")
        rows = [dict((ln.split()[0], float(ln.split()[1])) for ln in f.read_text().splitlines() if ln.strip())
                for f in pred_files]
        vocabulary = sorted(rows[0])
        scores = np.array([[row[t] for t in vocabulary] for row in rows])
        labels = np.array([read_tags(Path(ref) / (f.stem + ".tags"), vocabulary) for f in pred_files])
        return {"roc_auc": macro_roc_auc(scores, labels), "map": macro_map(scores, labels), "tracks": len(rows)}
    raise UsageError(f"unknown task {task!r}")


def cmd_eval(args, cfg, argv):
    for d in (args.pred, args.ref):
        if not Path(d).is_dir():
            raise UsageError(f"directory {d} does not exist")
    metrics = evaluate(args.task, args.pred, args.ref, cfg.analysis.tolerance, cfg.mel.frame_rate)
    text = json.dumps({"task": args.task, **metrics}, indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    sys.stdout.write(text)


def _covered(ref, clip, cfg):
    """Reference events inside the span analysed by the tiled 4 s windows."""
    span = (clip.samples.size // cfg.mel.segment_samples) * cfg.mel.segment_seconds
    return ref[ref < span]


def _attention_sweep(model, clips_refs, cfg, by):
    """Mean onset F-measure per (layer, head) over ``(clip, reference)`` pairs."""
    rows = []
    mels = [(tile_segments(clip, cfg.mel), ref) for clip, ref in clips_refs]
    per = {}
    for windows, ref in mels:
        est = {}
        for mel in windows:
            out = encode(model, mel, attention_layers=range(1, model.cfg.depth + 1))
            for k, attn in out.attentions.items():
                for h in range(model.cfg.heads):
                    curve = pseudo_activation(attn[0, h].numpy(), by=by, frame_rate=cfg.mel.frame_rate)
                    est.setdefault((k, h), []).append(mel.source_offset + pick_peaks(curve, cfg.analysis.peaks))
        for key, times in est.items():
            per.setdefault(key, []).append(event_f_score(np.concatenate(times), ref, cfg.analysis.tolerance))
    for (k, h), scores in sorted(per.items()):
        rows.append((k, h, float(np.mean([s.precision for s in scores])),
                     float(np.mean([s.recall for s in scores])), float(np.mean([s.f_measure for s in scores]))))
    return rows


def _write_table(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["layer", "head", "precision", "recall", "f_measure"])
        for k, h, p, r, f in rows:
            w.writerow([k, h, f"{p:.6f}", f"{r:.6f}", f"{f:.6f}"])


def cmd_attn(args, cfg, argv):
    _require_checkpoint(args)
    _require_file(args.audio, "audio file")
    if args.sweep and args.reference is None:
        raise UsageError("--sweep needs --reference onset file")
    if not args.sweep and (args.layer is None or args.head is None):
        raise UsageError("attn needs --layer and --head (or --sweep)")
    model = _model(args, cfg)
    clip = load_audio(args.audio, cfg.mel.sample_rate)
    out = _layout(Path(args.out))
    _record(out, args, cfg, argv)
    if args.sweep:
        rows = _attention_sweep(model, [(clip, _covered(read_events(args.reference), clip, cfg))], cfg,
                                cfg.analysis.by)
        _write_table(out / "metrics" / "attn_sweep.csv", rows)
        return
    k, h = args.layer, args.head
    windows = tile_segments(clip, cfg.mel)
    curve_rows, onsets = [], []
    for i, mel in enumerate(windows):
        attn = encode(model, mel, attention_layers=[k]).attentions[k][0, h].numpy()
        if i == 0:
            write_matrix(out / "features" / f"attention_L{k}_H{h}.mat", attn, layer=k, head=h)
            render_matrix(attn, out / "figures" / f"attention_L{k}_H{h}.pgm")
            render_matrix(attn, out / "figures" / f"attention_L{k}_H{h}.svg")
        curve = pseudo_activation(attn, by=cfg.analysis.by, frame_rate=cfg.mel.frame_rate, layer=k, head=h)
        times = mel.source_offset + np.arange(curve.values.size) / cfg.mel.frame_rate
        curve_rows.extend(zip(times, curve.values))
        onsets.append(mel.source_offset + pick_peaks(curve, cfg.analysis.peaks))
    with open(out / "metrics" / f"activation_L{k}_H{h}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "activation"])
        w.writerows((f"{t:.6f}", f"{v:.9g}") for t, v in curve_rows)
    (out / "metrics" / f"onsets_L{k}_H{h}.txt").write_text(
        "".join(f"{t:.6f}\n" for t in np.concatenate(onsets)))
    if args.reference:
        score = event_f_score(np.concatenate(onsets), _covered(read_events(args.reference), clip, cfg),
                              cfg.analysis.tolerance)
        print(json.dumps({"layer": k, "head": h, "f_measure": score.f_measure}))


def cmd_ssm(args, cfg, argv):
    _require_checkpoint(args)
    _require_file(args.audio, "audio file")
    layers = _layers(args.layers)
    model = _model(args, cfg)
    for k in layers:
        if not 0 <= k <= model.cfg.depth:
            raise UsageError(f"layer {k} outside 0..{model.cfg.depth}")
    clip = load_audio(args.audio, cfg.mel.sample_rate)
    mel = tile_segments(clip, cfg.mel)[0]
    out = _layout(Path(args.out))
    _record(out, args, cfg, argv)
    hidden = encode(model, mel, token_layers=layers).hidden
    tag = "random" if args.random_init else "trained"
    for k in layers:
        s = self_similarity(hidden[k][0, 1:])
        write_matrix(out / "features" / f"ssm_{tag}_L{k}.mat", s, layer=k, source=tag)
        render_matrix(s, out / "figures" / f"ssm_{tag}_L{k}.pgm")
        render_matrix(s, out / "figures" / f"ssm_{tag}_L{k}.svg")


def cmd_onsets(args, cfg, argv):
    if args.method == "attention":
        _require_checkpoint(args)
        if not args.sweep and (args.layer is None or args.head is None):
            raise UsageError("onsets needs --layer and --head (or --sweep) for the attention method")
    _require_file(args.manifest, "manifest")
    labels = Path(args.labels)
    if not labels.is_dir():
        raise UsageError(f"labels directory {labels} does not exist")
    model = _model(args, cfg) if args.method == "attention" else None
    out = _layout(Path(args.out))
    _record(out, args, cfg, argv)
    pairs = [(clip, _covered(read_events(labels / f"{rec.id}.onsets"), clip, cfg))
             for rec, clip in _tracks(args.manifest, cfg, args.split)]
    if not pairs:
        raise Vit1dError(f"no tracks in split {args.split!r}")
    if args.method == "attention" and args.sweep:
        rows = _attention_sweep(model, pairs, cfg, cfg.analysis.by)
        _write_table(out / "metrics" / "onsets_sweep.csv", rows)
        best = max(rows, key=lambda r: r[4])
        summary = {"method": "attention", "sweep": True, "best_layer": best[0], "best_head": best[1],
                   "best_f_measure": best[4]}
    else:
        scores = []
        for clip, ref in pairs:
            if args.method == "flux":
                est = []
                for mel in tile_segments(clip, cfg.mel):
                    flux = spectral_flux(mel)
                    est.append(mel.source_offset + pick_peaks(flux / max(flux.max(), 1e-12), cfg.analysis.peaks,
                                                              cfg.mel.frame_rate))
                est = np.concatenate(est)
            else:
                est = detect_onsets(model, clip, args.layer, args.head, cfg.analysis.peaks, cfg.mel, cfg.analysis.by)
            scores.append(event_f_score(est, ref, cfg.analysis.tolerance))
        summary = {"method": args.method, "layer": args.layer, "head": args.head,
                   "precision": float(np.mean([s.precision for s in scores])),
                   "recall": float(np.mean([s.recall for s in scores])),
                   "f_measure": float(np.mean([s.f_measure for s in scores])), "tracks": len(scores)}
    (out / "metrics" / "onsets.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))


def cmd_render(args, cfg, argv):
    _require_file(args.matrix, "matrix file")
    render_matrix(args.matrix, args.out)


def _layers(text):
    if isinstance(text, (list, tuple)):
        return [int(t) for t in text]
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad layer list {text!r}") from exc


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vit1d", description=__doc__.splitlines()[0])
    p.add_argument("--print-defaults", action="store_true", help="print the default config and exit")
    p.add_argument("--threads", type=int, default=1, help="torch worker threads (1 = reference trajectory)")
    p.add_argument("--verbose", "-v", action="store_true")
    sub = p.add_subparsers(dest="command")

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--config", help="JSON config file (defaults otherwise)")
        return sp

    sp = add("synth", cmd_synth, "generate an annotated synthetic corpus")
    sp.add_argument("--kind", choices=KINDS, default="click-train")
    sp.add_argument("--tracks", type=int, default=16)
    sp.add_argument("--duration", type=float, default=12.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--snr", type=float, default=30.0, help="signal-to-noise ratio in dB")
    sp.add_argument("--out", required=True)

    sp = add("pretrain", cmd_pretrain, "contrastive pretraining")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--resume", help="checkpoint directory to resume from")
    sp.add_argument("--max-steps", type=int)

    sp = add("extract", cmd_extract, "write frozen-encoder features")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--mode", choices=["cls", "avg", "seq", "stack"], required=True)
    sp.add_argument("--layers", default="3,6,9,12", help="stack-mode layers")
    sp.add_argument("--pooled", action="store_true", help="token-average stack features (global tasks)")
    sp.add_argument("--out", required=True)

    sp = add("probe", cmd_probe, "train a linear probe on extracted features")
    sp.add_argument("--task", choices=["tagging", "key", "beat", "chord"], required=True)
    sp.add_argument("--features", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--vocabulary", help="tag vocabulary file (tagging)")
    sp.add_argument("--out", required=True)

    sp = add("eval", cmd_eval, "score predictions against references")
    sp.add_argument("--task", choices=["onset", "beat", "key", "chord", "tagging"], required=True)
    sp.add_argument("--pred", required=True)
    sp.add_argument("--ref", required=True)
    sp.add_argument("--out", help="write the metrics JSON here as well")

    def model_args(sp):
        sp.add_argument("--checkpoint")
        sp.add_argument("--random-init", action="store_true", help="use freshly initialized weights")
        sp.add_argument("--seed", type=int, default=0, help="seed for --random-init")

    sp = add("attn", cmd_attn, "attention map, pseudo-activation and onsets for one file")
    model_args(sp)
    sp.add_argument("--audio", required=True)
    sp.add_argument("--layer", type=int)
    sp.add_argument("--head", type=int, help="0-based head index")
    sp.add_argument("--sweep", action="store_true", help="F-measure for every (layer, head)")
    sp.add_argument("--reference", help="reference onsets, one time per line")
    sp.add_argument("--out", required=True)

    sp = add("ssm", cmd_ssm, "token self-similarity matrices")
    model_args(sp)
    sp.add_argument("--audio", required=True)
    sp.add_argument("--layers", default="3,6,9,12")
    sp.add_argument("--out", required=True)

    sp = add("onsets", cmd_onsets, "onset detection over a manifest")
    model_args(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--method", choices=["attention", "flux"], default="attention")
    sp.add_argument("--layer", type=int)
    sp.add_argument("--head", type=int)
    sp.add_argument("--sweep", action="store_true")
    sp.add_argument("--split", help="restrict to one manifest split")
    sp.add_argument("--out", required=True)

    sp = add("render", cmd_render, "render a matrix file to PGM or SVG")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    if args.print_defaults:
        sys.stdout.write(json.dumps(GlobalConfig().to_dict(), indent=1) + "\n")
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    torch.set_num_threads(max(1, args.threads))
    try:
        cfg = load_config(args.config)
    except Vit1dError as exc:
        print(f"vit1d: error: {exc}", file=sys.stderr)
        return 2
    try:
        args.func(args, cfg, argv)
    except UsageError as exc:
        print(f"vit1d {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (Vit1dError, OSError) as exc:
        print(f"vit1d {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
