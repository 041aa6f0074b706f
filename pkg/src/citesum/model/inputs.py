"""Model configuration and the composition of (document, cited abstract) rows."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import torch

from ..errors import NoCitations
from ..tokenizer import ABS_ID, BOS_ID, CLS_ID, EOS_ID, PAD_ID


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    hidden_dim: int = 32
    max_pair_len: int = 64
    max_citations: int = 12
    enc_layers: int = 2
    dec_layers: int = 2
    heads: int = 2
    ffn_dim: int = 64
    max_target_len: int = 64
    # share of the (L - 2) content slots reserved for the document
    doc_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.hidden_dim % self.heads:
            raise ValueError("hidden_dim must be divisible by heads")
        if self.max_pair_len < 4:
            raise ValueError("max_pair_len must be >= 4")
        if self.max_citations < 1:
            raise ValueError("max_citations must be >= 1")
        if self.max_target_len < 2:
            raise ValueError("max_target_len must be >= 2")

    @property
    def doc_budget(self):
        return math.ceil((self.max_pair_len - 2) * self.doc_fraction)

    def to_json(self):
        return asdict(self)


@dataclass(frozen=True)
class ComposedInput:
    """Rows ``[CLS] doc [ABS] abstract_j`` padded to ``max_pair_len``."""

    ids: torch.Tensor  # (rows, L) int64
    mask: torch.Tensor  # (rows, L) bool, True on real tokens

    @property
    def n_rows(self):
        return self.ids.shape[0]


@dataclass(frozen=True)
class Instance:
    uid: str
    inputs: ComposedInput
    target: tuple[int, ...]  # summary ids without BOS/EOS


@dataclass(frozen=True)
class Batch:
    ids: torch.Tensor  # (B, N, L)
    token_mask: torch.Tensor  # (B, N, L)
    cite_mask: torch.Tensor  # (B, N)
    dec_in: torch.Tensor  # (B, T)
    labels: torch.Tensor  # (B, T), PAD where ignored


def _ids(text_or_record, vocab):
    if isinstance(text_or_record, str):
        return vocab.encode(text_or_record)
    if hasattr(text_or_record, "body_text"):
        return vocab.encode(text_or_record.body_text)
    return list(text_or_record)


def compose_inputs(doc, citations, cfg: ModelConfig, vocab) -> ComposedInput:
    """Build one row per cited abstract (at most ``cfg.max_citations``, retrieval order).

    ``doc`` may be a record, a string or a list of ids; citations are strings
    or id lists. The document keeps at most ``cfg.doc_budget`` tokens and the
    abstract fills the remaining space.
    """
    if not citations:
        raise NoCitations("at least one cited abstract is required")
    L = cfg.max_pair_len
    doc_ids = _ids(doc, vocab)[: cfg.doc_budget]
    rows = []
    for abstract in list(citations)[: cfg.max_citations]:
        abs_ids = _ids(abstract, vocab)[: L - 2 - len(doc_ids)]
        rows.append([CLS_ID, *doc_ids, ABS_ID, *abs_ids])
    ids = torch.full((len(rows), L), PAD_ID, dtype=torch.long)
    mask = torch.zeros((len(rows), L), dtype=torch.bool)
    for j, row in enumerate(rows):
        ids[j, : len(row)] = torch.tensor(row, dtype=torch.long)
        mask[j, : len(row)] = True
    return ComposedInput(ids=ids, mask=mask)


def wrap_target(target, max_target_len):
    """``[BOS] + target + [EOS]`` with the target cut so the decoder input fits."""
    return [BOS_ID, *list(target)[: max_target_len - 1], EOS_ID]


def collate(instances, cfg: ModelConfig) -> Batch:
    B = len(instances)
    N = max(inst.inputs.n_rows for inst in instances)
    L = cfg.max_pair_len
    ids = torch.full((B, N, L), PAD_ID, dtype=torch.long)
    ids[:, :, 0] = CLS_ID
    token_mask = torch.zeros((B, N, L), dtype=torch.bool)
    # absent rows keep their CLS position visible so attention stays finite
    token_mask[:, :, 0] = True
    cite_mask = torch.zeros((B, N), dtype=torch.bool)
    wrapped = [wrap_target(inst.target, cfg.max_target_len) for inst in instances]
    T = max(len(w) for w in wrapped) - 1
    dec_in = torch.full((B, T), PAD_ID, dtype=torch.long)
    labels = torch.full((B, T), PAD_ID, dtype=torch.long)
    for b, inst in enumerate(instances):
        n = inst.inputs.n_rows
        ids[b, :n] = inst.inputs.ids
        token_mask[b, :n] = inst.inputs.mask
        cite_mask[b, :n] = True
        w = torch.tensor(wrapped[b], dtype=torch.long)
        dec_in[b, : len(w) - 1] = w[:-1]
        labels[b, : len(w) - 1] = w[1:]
    return Batch(ids, token_mask, cite_mask, dec_in, labels)
