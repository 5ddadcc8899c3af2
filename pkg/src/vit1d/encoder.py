"""ViT-1D: a ViT-Tiny encoder whose patches are single spectrogram frames.

Every frame (all mel bins) is mapped to one token by an affine projection.
A class token built from a learnable vector plus the mean patch embedding is
prepended, a fixed sinusoidal table is added to every position (class token
at position 0), and the sequence runs through pre-norm transformer blocks:

    x = x + proj(attention(norm1(x)))
    x = x + fc2(gelu(fc1(norm2(x))))

followed by a final layer norm. There is no projection head.

Layer indexing follows the block count: ``z_0`` is the embedded input and
``z_k`` (``1 <= k <= depth``) the raw output of block ``k``. The encoder
output is ``norm(z_depth)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .errors import ConfigError, NumericFaultError, ShapeError

__all__ = [
    "EncoderConfig",
    "EncoderOutput",
    "ViT1D",
    "attention_block",
    "positional_encoding",
    "build_class_token",
    "patchify",
    "encode",
]


@dataclass(frozen=True)
class EncoderConfig:
    n_mels: int = 128
    embed_dim: int = 192
    depth: int = 12
    heads: int = 3
    mlp_ratio: int = 4
    seq_len: int = 126
    init_std: float = 0.02
    ln_eps: float = 1e-6

    def __post_init__(self):
        if self.embed_dim % 2:
            raise ConfigError(f"embed_dim must be even, got {self.embed_dim}")
        if self.embed_dim % self.heads:
            raise ConfigError(
                f"embed_dim {self.embed_dim} is not divisible by heads {self.heads}"
            )
        if min(self.n_mels, self.depth, self.heads, self.mlp_ratio, self.seq_len) < 1:
            raise ConfigError("n_mels, depth, heads, mlp_ratio and seq_len must be >= 1")

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.heads

    @property
    def num_tokens(self) -> int:
        return self.seq_len + 1

    def to_dict(self) -> dict:
        return asdict(self)


def _sincos_1d(dim: int, positions: np.ndarray) -> np.ndarray:
    omega = 1.0 / 10000.0 ** (np.arange(dim // 2, dtype=np.float64) / (dim // 2))
    angles = positions[:, None].astype(np.float64) * omega[None, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


def positional_encoding(num_positions: int = 127, dim: int = 192) -> np.ndarray:
    """Fixed 2-D sin/cos table for a ``1 x num_positions`` patch grid.

    The first ``2 * ceil(dim / 4)`` channels encode the time position, the
    remaining channels encode the frequency position, which is 0 for every
    patch because each patch spans the whole frequency axis (so they are
    constant ``sin(0)`` / ``cos(0)`` pairs). Position 0 belongs to the class
    token. Computed in float64 and rounded once to float32.
    """
    if dim <= 0 or dim % 2:
        raise ConfigError(f"positional encoding needs an even positive dim, got {dim}")
    time_dim = 2 * math.ceil(dim / 4)
    freq_dim = dim - time_dim
    positions = np.arange(num_positions)
    parts = [_sincos_1d(time_dim, positions)]
    if freq_dim:
        parts.append(_sincos_1d(freq_dim, np.zeros(num_positions)))
    return np.concatenate(parts, axis=1).astype(np.float32)


def attention_block(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor):
    """Scaled dot-product attention over the last two axes.

    Returns ``(softmax(q k^T / sqrt(d)) v, map)``.
    """
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise ShapeError(
            f"incompatible attention shapes q={tuple(q.shape)} k={tuple(k.shape)} v={tuple(v.shape)}"
        )
    scores = q @ k.transpose(-2, -1) / math.sqrt(q.shape[-1])
    attn = scores.softmax(dim=-1)
    return attn @ v, attn


def build_class_token(seq_tokens: torch.Tensor, learnable: torch.Tensor) -> torch.Tensor:
    """Learnable vector plus the mean patch embedding, per batch item."""
    return learnable + seq_tokens.mean(dim=-2)


class Attention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x):
        b, n, d = x.shape
        qkv = self.qkv(x).reshape(b, n, 3, self.heads, d // self.heads).permute(2, 0, 3, 1, 4)
        out, attn = attention_block(qkv[0], qkv[1], qkv[2])
        out = out.transpose(1, 2).reshape(b, n, d)
        return self.proj(out), attn


class Mlp(nn.Module):
    def __init__(self, dim: int, hidden: int):
        super().__init__()
        self.fc1 = nn.Linear(dim, hidden)
        self.fc2 = nn.Linear(hidden, dim)

    def forward(self, x):
        return self.fc2(F.gelu(self.fc1(x)))


class Block(nn.Module):
    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.embed_dim, eps=cfg.ln_eps)
        self.attn = Attention(cfg.embed_dim, cfg.heads)
        self.norm2 = nn.LayerNorm(cfg.embed_dim, eps=cfg.ln_eps)
        self.mlp = Mlp(cfg.embed_dim, cfg.mlp_ratio * cfg.embed_dim)

    def forward(self, x):
        mixed, attn = self.attn(self.norm1(x))
        x = x + mixed
        x = x + self.mlp(self.norm2(x))
        return x, attn


@dataclass
class EncoderOutput:
    """``tokens``: ``(B, T+1, D)`` final output, class token at index 0.

    ``attentions[k]`` is ``(B, heads, T+1, T+1)`` for block ``k`` and
    ``hidden[k]`` the raw ``(B, T+1, D)`` sequence ``z_k``.
    """

    tokens: torch.Tensor
    attentions: dict = field(default_factory=dict)
    hidden: dict = field(default_factory=dict)

    @property
    def class_token(self):
        return self.tokens[:, 0]

    def attention_tensor(self):
        """Stack captured maps into ``(B, layers, heads, T+1, T+1)``."""
        return torch.stack([self.attentions[k] for k in sorted(self.attentions)], dim=1)


class ViT1D(nn.Module):
    """The encoder. Construct with ``seed`` for reproducible initialization."""

    def __init__(self, cfg: EncoderConfig = EncoderConfig(), seed: int | None = 0):
        super().__init__()
        self.cfg = cfg
        self.patch_embed = nn.Linear(cfg.n_mels, cfg.embed_dim)
        self.cls_token = nn.Parameter(torch.zeros(cfg.embed_dim))
        self.blocks = nn.ModuleList(Block(cfg) for _ in range(cfg.depth))
        self.norm = nn.LayerNorm(cfg.embed_dim, eps=cfg.ln_eps)
        self.register_buffer(
            "pos_embed",
            torch.from_numpy(positional_encoding(cfg.num_tokens, cfg.embed_dim)),
            persistent=False,
        )
        self.reset_parameters(seed)

    def reset_parameters(self, seed: int | None = 0):
        gen = torch.Generator().manual_seed(seed) if seed is not None else None
        std = self.cfg.init_std
        with torch.no_grad():
            for module in self.modules():
                if isinstance(module, nn.Linear):
                    nn.init.trunc_normal_(module.weight, std=std, a=-2 * std, b=2 * std, generator=gen)
                    nn.init.zeros_(module.bias)
                elif isinstance(module, nn.LayerNorm):
                    nn.init.ones_(module.weight)
                    nn.init.zeros_(module.bias)
            nn.init.trunc_normal_(self.cls_token, std=std, a=-2 * std, b=2 * std, generator=gen)

    def patchify(self, x: torch.Tensor) -> torch.Tensor:
        """``(B, n_mels, T)`` spectrogram to ``(B, T, D)`` patch embeddings."""
        if x.ndim != 3 or x.shape[1] != self.cfg.n_mels:
            raise ShapeError(
                f"expected (batch, {self.cfg.n_mels}, frames) input, got {tuple(x.shape)}"
            )
        return self.patch_embed(x.transpose(1, 2))

    def embed(self, x: torch.Tensor) -> torch.Tensor:
        """Input tokens ``z_0``: class token prepended, positional table added."""
        patches = self.patchify(x)
        if patches.shape[1] > self.pos_embed.shape[0] - 1:
            raise ShapeError(
                f"{patches.shape[1]} frames exceed the configured seq_len {self.cfg.seq_len}"
            )
        cls = build_class_token(patches, self.cls_token)[:, None, :]
        tokens = torch.cat([cls, patches], dim=1)
        return tokens + self.pos_embed[: tokens.shape[1]].to(tokens.dtype)

    def check_weights(self):
        for name, p in self.named_parameters():
            if not torch.isfinite(p).all():
                raise NumericFaultError(f"non-finite values in weight {name!r}", layer=name)

    def run_blocks(self, z0, attention_layers=(), token_layers=(), check_finite=True):
        attention_layers, token_layers = set(attention_layers), set(token_layers)
        out = EncoderOutput(tokens=z0)
        if 0 in token_layers:
            out.hidden[0] = z0
        x = z0
        for k, block in enumerate(self.blocks, start=1):
            x, attn = block(x)
            if check_finite and not torch.isfinite(x).all():
                raise NumericFaultError(f"non-finite activations after block {k}", layer=k)
            if k in attention_layers:
                out.attentions[k] = attn
            if k in token_layers:
                out.hidden[k] = x
        out.tokens = self.norm(x)
        return out

    def forward(self, x, attention_layers=(), token_layers=(), check_finite=True) -> EncoderOutput:
        if check_finite:
            self.check_weights()
            if not torch.isfinite(x).all():
                raise NumericFaultError("non-finite values in the input spectrogram", layer="input")
        for k in set(attention_layers) | set(token_layers):
            if not 0 <= k <= self.cfg.depth:
                raise ConfigError(f"layer {k} outside 0..{self.cfg.depth}")
        return self.run_blocks(self.embed(x), attention_layers, token_layers, check_finite)


def _as_batch(mel, dtype):
    values = getattr(mel, "values", mel)
    if isinstance(values, (list, tuple)):
        values = np.stack([getattr(m, "values", m) for m in values])
    t = torch.as_tensor(np.asarray(values), dtype=dtype)
    return t[None] if t.ndim == 2 else t


def patchify(mel, model: ViT1D) -> np.ndarray:
    """Patch embeddings of one spectrogram as a ``(T, D)`` float32 array."""
    values = np.asarray(getattr(mel, "values", mel))
    if values.ndim != 2 or values.shape[0] != model.cfg.n_mels:
        raise ShapeError(f"expected ({model.cfg.n_mels}, frames) spectrogram, got {values.shape}")
    # float64 accumulation rounded once, so a column embedded alone matches
    # its row in the batched result regardless of BLAS kernel choice
    w = model.patch_embed.weight.detach().double().numpy()
    b = model.patch_embed.bias.detach().double().numpy()
    return (values.astype(np.float64).T @ w.T + b).astype(np.float32)


def encode(model: ViT1D, mel, attention_layers=(), token_layers=()) -> EncoderOutput:
    """Gradient-free forward on one spectrogram, a list of them, or a
    ``(B, n_mels, T)`` array. Tensors in the result keep the batch axis."""
    dtype = next(model.parameters()).dtype
    with torch.no_grad():
        return model(_as_batch(mel, dtype), attention_layers, token_layers)
