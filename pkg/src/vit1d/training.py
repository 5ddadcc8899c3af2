"""Contrastive pretraining of the encoder with NT-Xent on class tokens.

Each step draws ``batch_pairs`` distinct tracks, cuts two disjoint 4 s
segments from each, encodes all ``2N`` segments and applies NT-Xent to the
``2N`` output class tokens only. The positive of a segment is the other
segment of its track; the ``2N - 2`` segments of other tracks are negatives.

Randomness is keyed by position, not consumed from a stream: the track
order of epoch ``e`` comes from ``default_rng([seed, e])`` and the segment
placement of track ``i`` at step ``s`` from ``default_rng([seed, e, s, i])``.
Resuming from a checkpoint therefore replays exactly the same batches.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .audio import AudioClip, MelConfig, sample_segment_pair
from .checkpoint import apply_encoder_tensors, encoder_tensors, load_tensors, save_tensors
from .encoder import EncoderConfig, ViT1D
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    DegenerateBatchError,
    NumericFaultError,
    TrainingDivergedError,
    UndefinedCosineError,
)

log = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "TrainState",
    "Trainer",
    "cosine_similarity_matrix",
    "nt_xent_loss",
    "lr_schedule",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass(frozen=True)
class TrainConfig:
    batch_pairs: int = 256
    temperature: float = 0.1
    base_lr: float = 3e-4
    final_lr: float = 5e-7
    epochs: int = 300
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    checkpoint_every: int = 10  # epochs; 0 disables periodic checkpoints

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigError("temperature must be > 0")
        if self.batch_pairs < 2:
            raise ConfigError("batch_pairs must be >= 2")
        if not self.base_lr > self.final_lr > 0:
            raise ConfigError("need base_lr > final_lr > 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")


def cosine_similarity_matrix(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """``out[i, j] = cos(a[i], b[j])``; zero-norm rows are an error."""
    an, bn = a.norm(dim=1), b.norm(dim=1)
    if (an == 0).any() or (bn == 0).any():
        raise UndefinedCosineError("cosine similarity of a zero-norm embedding")
    return (a / an[:, None]) @ (b / bn[:, None]).T


def nt_xent_loss(class_a: torch.Tensor, class_b: torch.Tensor, temperature: float = 0.1) -> torch.Tensor:
    """Symmetric NT-Xent over ``N`` positive pairs ``(class_a[i], class_b[i])``.

    For every anchor the denominator runs over its positive and the other
    ``2N - 2`` embeddings of the batch (the anchor itself is excluded). The
    result is the mean over all ``2N`` anchors, i.e. both directions.
    """
    if class_a.shape != class_b.shape or class_a.ndim != 2:
        raise ContractError(
            f"class tokens must be two equal (N, D) matrices, got {tuple(class_a.shape)} "
            f"and {tuple(class_b.shape)}"
        )
    n = class_a.shape[0]
    if n < 2:
        raise DegenerateBatchError("NT-Xent needs at least two pairs: a single pair has no negatives")
    z = torch.cat([class_a, class_b], dim=0)
    logits = cosine_similarity_matrix(z, z) / temperature
    self_mask = torch.eye(2 * n, dtype=torch.bool, device=z.device)
    logits = logits.masked_fill(self_mask, float("-inf"))
    targets = torch.cat([torch.arange(n, 2 * n), torch.arange(0, n)]).to(z.device)
    return torch.nn.functional.cross_entropy(logits, targets)


def lr_schedule(step: int, total_steps: int, cfg: TrainConfig = TrainConfig()) -> float:
    """Cosine decay from ``base_lr`` at step 0 to ``final_lr`` at ``total_steps``."""
    if total_steps < 1 or not 0 <= step <= total_steps:
        raise ContractError(f"step {step} outside [0, {total_steps}]")
    if step == 0:
        return cfg.base_lr
    if step == total_steps:
        return cfg.final_lr
    cos = math.cos(math.pi * step / total_steps)
    return cfg.final_lr + 0.5 * (cfg.base_lr - cfg.final_lr) * (1.0 + cos)


@dataclass
class TrainState:
    model: ViT1D
    optimizer: torch.optim.Optimizer
    step: int = 0
    # (step, lr, loss) per completed update
    history: list = field(default_factory=list)


def make_optimizer(model: ViT1D, cfg: TrainConfig) -> torch.optim.Adam:
    return torch.optim.Adam(
        model.parameters(), lr=cfg.base_lr, betas=(cfg.beta1, cfg.beta2), eps=cfg.eps,
        weight_decay=0.0, foreach=False,
    )


def new_state(enc_cfg: EncoderConfig = EncoderConfig(), cfg: TrainConfig = TrainConfig()) -> TrainState:
    model = ViT1D(enc_cfg, seed=cfg.seed)
    return TrainState(model, make_optimizer(model, cfg))


def save_checkpoint(state: TrainState, path, train_cfg: TrainConfig | None = None, **extra) -> Path:
    """Encoder weights, Adam moments and the step counter, bit exact."""
    tensors = encoder_tensors(state.model)
    names = dict((id(p), n) for n, p in state.model.named_parameters())
    adam_steps = {}
    for group in state.optimizer.param_groups:
        for p in group["params"]:
            st = state.optimizer.state.get(p)
            if not st:
                continue
            name = names[id(p)]
            tensors[f"optim.exp_avg.{name}"] = st["exp_avg"]
            tensors[f"optim.exp_avg_sq.{name}"] = st["exp_avg_sq"]
            adam_steps[name] = int(st["step"])
    meta = {
        "encoder": state.model.cfg.to_dict(),
        "step": state.step,
        "adam_steps": adam_steps,
        "history": [list(h) for h in state.history],
        **extra,
    }
    if train_cfg is not None:
        meta["train"] = asdict(train_cfg)
    return save_tensors(path, tensors, meta)


def load_checkpoint(path, enc_cfg: EncoderConfig | None = None, train_cfg: TrainConfig | None = None) -> TrainState:
    """Inverse of :func:`save_checkpoint`.

    Passing ``enc_cfg`` forces the target geometry; a checkpoint written for
    another geometry then fails with a :class:`ShapeError` naming the tensor.
    """
    tensors, meta = load_tensors(path)
    enc_cfg = enc_cfg or EncoderConfig(**meta["encoder"])
    if train_cfg is None:
        train_cfg = TrainConfig(**meta["train"]) if "train" in meta else TrainConfig()
    model = ViT1D(enc_cfg, seed=None)
    apply_encoder_tensors(model, {k: v for k, v in tensors.items() if not k.startswith("optim.")})
    optimizer = make_optimizer(model, train_cfg)
    for name, p in model.named_parameters():
        if name in meta.get("adam_steps", {}):
            optimizer.state[p] = {
                "step": torch.tensor(float(meta["adam_steps"][name])),
                "exp_avg": torch.from_numpy(tensors[f"optim.exp_avg.{name}"].copy()),
                "exp_avg_sq": torch.from_numpy(tensors[f"optim.exp_avg_sq.{name}"].copy()),
            }
    history = [tuple(h) for h in meta.get("history", [])]
    return TrainState(model, optimizer, int(meta.get("step", 0)), history)


class Trainer:
    """Runs the pretraining loop over an in-memory list of tracks."""

    def __init__(self, tracks, cfg: TrainConfig = TrainConfig(), enc_cfg: EncoderConfig = EncoderConfig(),
                 mel_cfg: MelConfig = MelConfig(), state: TrainState | None = None):
        self.tracks = list(tracks)
        self.cfg, self.mel_cfg = cfg, mel_cfg
        if len(self.tracks) < cfg.batch_pairs:
            raise DataError(
                f"{len(self.tracks)} tracks cannot fill a batch of {cfg.batch_pairs} distinct tracks"
            )
        min_len = 2 * mel_cfg.segment_samples
        for i, clip in enumerate(self.tracks):
            if not isinstance(clip, AudioClip) or clip.samples.size < min_len:
                raise DataError(f"track {i} is shorter than {2 * mel_cfg.segment_seconds:g} s")
        self.state = state or new_state(enc_cfg, cfg)
        if self.state.model.cfg.seq_len != mel_cfg.segment_frames:
            raise ConfigError(
                f"encoder seq_len {self.state.model.cfg.seq_len} != "
                f"segment frames {mel_cfg.segment_frames}"
            )

    @property
    def steps_per_epoch(self) -> int:
        return len(self.tracks) // self.cfg.batch_pairs

    @property
    def total_steps(self) -> int:
        return self.cfg.epochs * self.steps_per_epoch

    def batch_tracks(self, step: int) -> np.ndarray:
        epoch, j = divmod(step, self.steps_per_epoch)
        order = np.random.default_rng([self.cfg.seed, epoch]).permutation(len(self.tracks))
        return order[j * self.cfg.batch_pairs:(j + 1) * self.cfg.batch_pairs]

    def batch(self, step: int):
        """``(a, b)`` float32 tensors of shape ``(N, n_mels, T)`` for ``step``."""
        epoch = step // self.steps_per_epoch
        a, b = [], []
        for i in self.batch_tracks(step):
            rng = np.random.default_rng([self.cfg.seed, epoch, step, int(i)])
            pair = sample_segment_pair(self.tracks[i], rng, self.mel_cfg)
            a.append(pair.a.values)
            b.append(pair.b.values)
        return torch.from_numpy(np.stack(a)), torch.from_numpy(np.stack(b))

    def loss_at(self, step: int, model: ViT1D | None = None) -> torch.Tensor:
        model = model or self.state.model
        a, b = self.batch(step)
        out = model(torch.cat([a, b]).to(next(model.parameters()).dtype))
        cls = out.class_token
        n = a.shape[0]
        return nt_xent_loss(cls[:n], cls[n:], self.cfg.temperature)

    def train_step(self) -> float:
        st = self.state
        if st.step >= self.total_steps:
            raise ContractError(f"training already finished ({self.total_steps} steps)")
        lr = lr_schedule(st.step, self.total_steps, self.cfg)
        for group in st.optimizer.param_groups:
            group["lr"] = lr
        st.model.train()
        try:
            loss = self.loss_at(st.step)
        except NumericFaultError as exc:
            raise TrainingDivergedError(f"step {st.step}: {exc}") from exc
        value = float(loss.detach())
        if not math.isfinite(value):
            raise TrainingDivergedError(f"non-finite loss {value} at step {st.step}")
        st.optimizer.zero_grad(set_to_none=True)
        loss.backward()
        st.optimizer.step()
        st.history.append((st.step, lr, value))
        st.step += 1
        return value

    def fit(self, out_dir=None, max_steps: int | None = None, until=None):
        """Train to the end of the schedule (or ``max_steps`` further updates).

        With ``out_dir`` set, writes ``loss.csv`` and checkpoints under
        ``out_dir/checkpoints`` every ``checkpoint_every`` epochs plus a
        ``final`` one. ``until(state)`` returning true stops early.
        """
        out_dir = Path(out_dir) if out_dir is not None else None
        stop = self.total_steps if max_steps is None else min(self.total_steps, self.state.step + max_steps)
        writer = fh = None
        if out_dir is not None:
            (out_dir / "checkpoints").mkdir(parents=True, exist_ok=True)
            fh = open(out_dir / "loss.csv", "a" if self.state.step else "w", newline="")
            writer = csv.writer(fh)
            if not self.state.step:
                writer.writerow(["step", "lr", "loss"])
        try:
            while self.state.step < stop:
                try:
                    loss = self.train_step()
                except TrainingDivergedError:
                    if out_dir is not None:
                        save_checkpoint(self.state, out_dir / "checkpoints" / "diagnostic", self.cfg)
                    raise
                step, lr, _ = self.state.history[-1]
                if writer is not None:
                    writer.writerow([step, repr(lr), repr(loss)])
                log.debug("step %d lr %.3e loss %.6f", step, lr, loss)
                done = self.state.step
                every = self.cfg.checkpoint_every * self.steps_per_epoch
                if out_dir is not None and every and done % every == 0 and done < self.total_steps:
                    save_checkpoint(self.state, out_dir / "checkpoints" / f"step{done:08d}", self.cfg)
                if until is not None and until(self.state):
                    break
        finally:
            if fh is not None:
                fh.close()
        if out_dir is not None:
            save_checkpoint(self.state, out_dir / "checkpoints" / "final", self.cfg)
        return self.state


def train(tracks, cfg: TrainConfig = TrainConfig(), enc_cfg: EncoderConfig = EncoderConfig(),
          mel_cfg: MelConfig = MelConfig(), out_dir=None) -> TrainState:
    return Trainer(tracks, cfg, enc_cfg, mel_cfg).fit(out_dir)
