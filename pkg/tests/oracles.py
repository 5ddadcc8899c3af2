"""Slow, obviously-correct reference implementations used only by tests."""

from __future__ import annotations

import math

import numpy as np


def max_matching(est, ref, tol) -> int:
    """Maximum bipartite matching size by augmenting paths (Kuhn)."""
    adj = [[j for j, r in enumerate(ref) if abs(e - r) <= tol] for e in est]
    match_ref = [-1] * len(ref)

    def augment(i, seen):
        for j in adj[i]:
            if j in seen:
                continue
            seen.add(j)
            if match_ref[j] < 0 or augment(match_ref[j], seen):
                match_ref[j] = i
                return True
        return False

    return sum(augment(i, set()) for i in range(len(est)))


def pairwise_auc(scores, labels) -> float:
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def loop_attention(q, k, v):
    n, d = q.shape
    attn = np.zeros((n, n))
    for i in range(n):
        logits = [sum(q[i, c] * k[j, c] for c in range(d)) / math.sqrt(d) for j in range(n)]
        m = max(logits)
        e = [math.exp(x - m) for x in logits]
        s = sum(e)
        for j in range(n):
            attn[i, j] = e[j] / s
    out = np.zeros_like(v, dtype=np.float64)
    for i in range(n):
        for j in range(n):
            out[i] += attn[i, j] * v[j]
    return out, attn


def loop_cosine(z):
    n = len(z)
    s = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ni = math.sqrt(sum(x * x for x in z[i]))
            nj = math.sqrt(sum(x * x for x in z[j]))
            s[i, j] = sum(a * b for a, b in zip(z[i], z[j])) / (ni * nj)
    return s


def loop_column_mean(m):
    n = m.shape[0]
    return np.array([sum(m[i, j] for i in range(1, n)) / (n - 1) for j in range(1, n)])


def loop_nt_xent(a, b, tau):
    """Both-direction NT-Xent written out term by term."""
    z = np.concatenate([a, b])
    n = len(a)

    def sim(i, j):
        return float(z[i] @ z[j] / (np.linalg.norm(z[i]) * np.linalg.norm(z[j])))

    losses = []
    for i in range(2 * n):
        partner = (i + n) % (2 * n)
        denom = sum(math.exp(sim(i, k) / tau) for k in range(2 * n) if k != i)
        losses.append(-math.log(math.exp(sim(i, partner) / tau) / denom))
    return sum(losses) / len(losses)


def brute_key_score(est, ref) -> float:
    """Weighted key credit from tonic/mode arithmetic."""
    (et, em), (rt, rm) = est, ref
    if (et, em) == (rt, rm):
        return 1.0
    if em == rm and (et - rt) % 12 == 7:
        return 0.5
    if rm == "major" and em == "minor" and (et - rt) % 12 == 9:
        return 0.3
    if rm == "minor" and em == "major" and (et - rt) % 12 == 3:
        return 0.3
    if et == rt and em != rm:
        return 0.2
    return 0.0


def central_difference_errors(model, loss_fn, h=1e-5) -> dict:
    """Per-tensor relative error between autograd and central differences.

    ``error = max|g_auto - g_fd| / max(max|g_auto|, max|g_fd|, 1e-12)``.
    """
    import torch

    model.zero_grad()
    loss_fn().backward()
    errors = {}
    with torch.no_grad():
        for name, p in model.named_parameters():
            analytic = p.grad.detach().clone()
            numeric = torch.zeros_like(p)
            flat, nflat = p.view(-1), numeric.view(-1)
            for i in range(flat.numel()):
                old = flat[i].item()
                flat[i] = old + h
                up = loss_fn().item()
                flat[i] = old - h
                down = loss_fn().item()
                flat[i] = old
                nflat[i] = (up - down) / (2 * h)
            scale = max(analytic.abs().max().item(), numeric.abs().max().item(), 1e-12)
            errors[name] = (analytic - numeric).abs().max().item() / scale
    return errors
