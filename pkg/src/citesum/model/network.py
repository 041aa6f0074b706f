"""Encoder-decoder with attention-based aggregation over cited abstracts.

Every (document, cited abstract) row is encoded independently by a pre-norm
transformer encoder. The hidden state at each row's CLS position is scored by
a single trainable vector; a softmax over the citation axis gives one weight
per row, and the rows are summed under those weights into one feature matrix
that the decoder cross-attends to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
from torch import nn
from torch.nn import functional as fn

from ..errors import PrefixTooLong, ShapeMismatch
from ..tokenizer import BOS_ID, EOS_ID, PAD_ID
from .inputs import Batch, ComposedInput, ModelConfig, collate


class MultiHeadAttention(nn.Module):
    def __init__(self, dim, heads):
        super().__init__()
        self.heads = heads
        self.q = nn.Linear(dim, dim)
        self.k = nn.Linear(dim, dim)
        self.v = nn.Linear(dim, dim)
        self.o = nn.Linear(dim, dim)

    def forward(self, x, memory, key_mask, causal=False):
        # x: (B, T, M); memory: (B, S, M); key_mask: (B, S) True = attendable
        B, T, M = x.shape
        S = memory.shape[1]
        h, d = self.heads, M // self.heads
        q = self.q(x).view(B, T, h, d).transpose(1, 2)
        k = self.k(memory).view(B, S, h, d).transpose(1, 2)
        v = self.v(memory).view(B, S, h, d).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(d)
        allowed = key_mask[:, None, None, :]
        if causal:
            allowed = allowed & torch.ones(T, S, dtype=torch.bool).tril()
        scores = scores.masked_fill(~allowed, float("-inf"))
        out = torch.softmax(scores, dim=-1) @ v
        return self.o(out.transpose(1, 2).reshape(B, T, M))


class FeedForward(nn.Module):
    def __init__(self, dim, hidden):
        super().__init__()
        self.up = nn.Linear(dim, hidden)
        self.down = nn.Linear(hidden, dim)

    def forward(self, x):
        return self.down(fn.gelu(self.up(x)))


class EncoderLayer(nn.Module):
    def __init__(self, cfg):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.hidden_dim)
        self.attn = MultiHeadAttention(cfg.hidden_dim, cfg.heads)
        self.norm2 = nn.LayerNorm(cfg.hidden_dim)
        self.ffn = FeedForward(cfg.hidden_dim, cfg.ffn_dim)

    def forward(self, x, mask):
        h = self.norm1(x)
        x = x + self.attn(h, h, mask)
        return x + self.ffn(self.norm2(x))


class DecoderLayer(nn.Module):
    def __init__(self, cfg):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.hidden_dim)
        self.self_attn = MultiHeadAttention(cfg.hidden_dim, cfg.heads)
        self.norm2 = nn.LayerNorm(cfg.hidden_dim)
        self.cross_attn = MultiHeadAttention(cfg.hidden_dim, cfg.heads)
        self.norm3 = nn.LayerNorm(cfg.hidden_dim)
        self.ffn = FeedForward(cfg.hidden_dim, cfg.ffn_dim)

    def forward(self, y, fused, fused_mask):
        h = self.norm1(y)
        self_mask = torch.ones(y.shape[:2], dtype=torch.bool)
        y = y + self.self_attn(h, h, self_mask, causal=True)
        y = y + self.cross_attn(self.norm2(y), fused, fused_mask)
        return y + self.ffn(self.norm3(y))


class CiteSumModel(nn.Module):
    """All trainable tensors; float64 throughout."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        M = cfg.hidden_dim
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(cfg.seed)
            self.tok_emb = nn.Embedding(cfg.vocab_size, M)
            self.enc_pos = nn.Parameter(torch.empty(cfg.max_pair_len, M))
            self.dec_pos = nn.Parameter(torch.empty(cfg.max_target_len, M))
            self.encoder = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.enc_layers))
            self.enc_norm = nn.LayerNorm(M)
            self.w_q = nn.Parameter(torch.empty(M, 1))
            self.decoder = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.dec_layers))
            self.dec_norm = nn.LayerNorm(M)
            self.w_d = nn.Parameter(torch.empty(M, cfg.vocab_size))
            for p in (self.tok_emb.weight, self.enc_pos, self.dec_pos, self.w_q, self.w_d):
                nn.init.normal_(p, std=M ** -0.5)
        self.double()

    def encode(self, ids, token_mask):
        B, N, L = ids.shape
        x = self.tok_emb(ids) + self.enc_pos[:L]
        x = x.reshape(B * N, L, -1)
        mask = token_mask.reshape(B * N, L)
        for layer in self.encoder:
            x = layer(x, mask)
        return self.enc_norm(x).reshape(B, N, L, -1)

    def aggregate(self, q, cite_mask):
        """Returns ``(q_cls, attn, fused)`` of shapes (B,N,M), (B,N), (B,L,M)."""
        q_cls = q[:, :, 0, :]
        logits = (q_cls @ self.w_q).squeeze(-1)
        logits = logits.masked_fill(~cite_mask, float("-inf"))
        attn = torch.softmax(logits, dim=-1)
        fused = torch.einsum("bn,bnlm->blm", attn, q)
        return q_cls, attn, fused

    def decode(self, dec_in, fused, fused_mask):
        """Next-token logits (B, T, V) for every decoder position."""
        T = dec_in.shape[1]
        if T > self.cfg.max_target_len:
            raise PrefixTooLong(f"prefix of {T} tokens exceeds max_target_len {self.cfg.max_target_len}")
        y = self.tok_emb(dec_in) + self.dec_pos[:T]
        for layer in self.decoder:
            y = layer(y, fused, fused_mask)
        return self.dec_norm(y) @ self.w_d

    def features(self, batch: Batch):
        q = self.encode(batch.ids, batch.token_mask)
        _, _, fused = self.aggregate(q, batch.cite_mask)
        fused_mask = (batch.token_mask & batch.cite_mask[:, :, None]).any(dim=1)
        return fused, fused_mask

    def forward(self, batch: Batch):
        fused, fused_mask = self.features(batch)
        return self.decode(batch.dec_in, fused, fused_mask)


# ---------------------------------------------------------------------------
# single-instance operations


@dataclass
class EncodedFeatures:
    q: torch.Tensor  # (N, L, M)
    token_mask: torch.Tensor  # (N, L)
    q_cls: torch.Tensor | None = None  # (N, M)
    attn: torch.Tensor | None = None  # (N, 1)
    fused: torch.Tensor | None = None  # (L, M)

    @property
    def fused_mask(self):
        return self.token_mask.any(dim=0)


@dataclass
class DecoderState:
    prefix: list[int] = field(default_factory=lambda: [BOS_ID])

    @property
    def t(self):
        return len(self.prefix)


def encode_pairs(x: ComposedInput, model: CiteSumModel) -> EncodedFeatures:
    cfg = model.cfg
    if x.ids.dim() != 2 or x.ids.shape[1] != cfg.max_pair_len or not 1 <= x.n_rows <= cfg.max_citations:
        raise ShapeMismatch(
            f"expected (1..{cfg.max_citations}, {cfg.max_pair_len}) ids, got {tuple(x.ids.shape)}"
        )
    if x.mask.shape != x.ids.shape:
        raise ShapeMismatch("mask and ids differ in shape")
    q = model.encode(x.ids[None], x.mask[None])[0]
    return EncodedFeatures(q=q, token_mask=x.mask)


def aggregate(enc: EncodedFeatures, model: CiteSumModel, cite_mask=None) -> EncodedFeatures:
    """Fill ``q_cls``, ``attn`` and ``fused``; rows with ``cite_mask`` False get zero weight."""
    if cite_mask is None:
        cite_mask = torch.ones(enc.q.shape[0], dtype=torch.bool)
    q_cls, attn, fused = model.aggregate(enc.q[None], cite_mask[None])
    enc.q_cls = q_cls[0]
    enc.attn = attn[0][:, None]
    enc.fused = fused[0]
    return enc


def decode_step(state: DecoderState, fused, model: CiteSumModel, fused_mask=None):
    """Distribution over the vocabulary for the token following ``state.prefix``."""
    if not state.prefix or state.prefix[0] != BOS_ID:
        raise ValueError("decoder prefix must start with BOS")
    if fused_mask is None:
        fused_mask = torch.ones(fused.shape[0], dtype=torch.bool)
    dec_in = torch.tensor([state.prefix], dtype=torch.long)
    logits = model.decode(dec_in, fused[None], fused_mask[None])
    return torch.softmax(logits[0, -1], dim=-1)


@torch.no_grad()
def generate(model: CiteSumModel, x: ComposedInput, strategy="greedy", max_len=None, temperature=1.0, seed=0):
    """Token ids of the generated summary, without BOS and EOS."""
    if strategy not in ("greedy", "sample"):
        raise ValueError(f"unknown strategy {strategy!r}")
    max_len = model.cfg.max_target_len if max_len is None else min(max_len, model.cfg.max_target_len)
    enc = aggregate(encode_pairs(x, model), model)
    gen = torch.Generator().manual_seed(seed)
    state = DecoderState()
    out = []
    for _ in range(max_len):
        probs = decode_step(state, enc.fused, model, enc.fused_mask)
        if strategy == "greedy":
            token = int(torch.argmax(probs))
        else:
            logits = torch.log(probs) / temperature
            token = int(torch.multinomial(torch.softmax(logits, -1), 1, generator=gen))
        if token == EOS_ID:
            break
        out.append(token)
        state.prefix.append(token)
    return out


def nll(batch: Batch, model: CiteSumModel):
    """Summed negative log-likelihood and count of non-pad target tokens."""
    logits = model(batch)
    total = fn.cross_entropy(
        logits.reshape(-1, logits.shape[-1]),
        batch.labels.reshape(-1),
        ignore_index=PAD_ID,
        reduction="sum",
    )
    return total, int((batch.labels != PAD_ID).sum())


def loss(batch: Batch, model: CiteSumModel):
    """Mean token-level cross-entropy over non-pad targets."""
    total, count = nll(batch, model)
    return total / count


@torch.no_grad()
def corpus_nll(model: CiteSumModel, instances, batch_size=16):
    total, count = 0.0, 0
    for start in range(0, len(instances), batch_size):
        t, c = nll(collate(instances[start:start + batch_size], model.cfg), model)
        total += float(t)
        count += c
    return total, count
