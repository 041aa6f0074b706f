"""Adam training loop, validation-perplexity checkpointing and checkpoint files."""

from __future__ import annotations

import copy
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch

from ..citegraph import extract_neighborhood
from ..errors import Divergence
from ..metrics import perplexity
from .inputs import Instance, ModelConfig, collate, compose_inputs
from .network import CiteSumModel, loss


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 16
    epochs: int = 10
    max_steps: int | None = None
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0
    # validate every k steps in addition to every epoch end
    eval_every: int | None = None


@dataclass
class TrainResult:
    model: CiteSumModel
    log: list[dict] = field(default_factory=list)
    best_step: int = 0
    best_val_ppl: float | None = None


def make_instances(ds, uids, graph, vocab, cfg: ModelConfig, hop_max=1, n_max=12):
    """Training instances for ``uids``: the record plus its retrieved citations' abstracts."""
    instances = []
    for uid in uids:
        rec = ds.records[uid]
        retrieved = extract_neighborhood(graph, uid, hop_max, n_max)
        abstracts = [ds.lookup(u).abstract for u, hop in retrieved.entries if hop > 0]
        inputs = compose_inputs(rec, abstracts, cfg, vocab)
        instances.append(Instance(uid, inputs, tuple(vocab.encode(rec.abstract))))
    return instances


def train(train_instances, cfg: ModelConfig, hyper: TrainConfig = TrainConfig(), val_instances=None, model=None):
    """Fit a model with Adam; returns the checkpoint with the best validation perplexity.

    Without validation data the final parameters are returned. Raises
    :class:`Divergence` as soon as a batch loss is not finite.
    """
    if not train_instances:
        raise ValueError("no training instances")
    model = model if model is not None else CiteSumModel(cfg)
    opt = torch.optim.Adam(model.parameters(), lr=hyper.lr, betas=hyper.betas, eps=hyper.eps)
    rng = random.Random(hyper.seed)
    result = TrainResult(model=model)
    best_state = None

    def validate(entry):
        nonlocal best_state
        if not val_instances:
            return
        model.eval()
        ppl = perplexity(model, val_instances, hyper.batch_size)
        entry["val_ppl"] = ppl
        if result.best_val_ppl is None or ppl < result.best_val_ppl:
            result.best_val_ppl = ppl
            result.best_step = entry["step"]
            best_state = copy.deepcopy(model.state_dict())

    step = 0
    done = False
    for _ in range(hyper.epochs):
        order = list(range(len(train_instances)))
        rng.shuffle(order)
        entry = None
        for start in range(0, len(order), hyper.batch_size):
            batch = collate([train_instances[i] for i in order[start:start + hyper.batch_size]], cfg)
            model.train()
            value = loss(batch, model)
            step += 1
            if not torch.isfinite(value):
                raise Divergence(step, value.item())
            opt.zero_grad()
            value.backward()
            opt.step()
            entry = {"step": step, "loss": value.item(), "val_ppl": None}
            result.log.append(entry)
            if hyper.eval_every and step % hyper.eval_every == 0:
                validate(entry)
            if hyper.max_steps is not None and step >= hyper.max_steps:
                done = True
                break
        if entry is not None and entry["val_ppl"] is None:
            validate(entry)
        if done:
            break
    if best_state is not None:
        model.load_state_dict(best_state)
    else:
        result.best_step = step
    return result


def save_checkpoint(path, model: CiteSumModel, vocab_sha256=None):
    params = {
        name: {"shape": list(t.shape), "data": t.detach().reshape(-1).tolist()}
        for name, t in model.state_dict().items()
    }
    doc = {"config": model.cfg.to_json(), "vocab_sha256": vocab_sha256, "params": params}
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_checkpoint(path, vocab_sha256=None):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if vocab_sha256 is not None and doc.get("vocab_sha256") not in (None, vocab_sha256):
        raise ValueError("checkpoint was trained with a different vocabulary")
    model = CiteSumModel(ModelConfig(**doc["config"]))
    state = {
        name: torch.tensor(p["data"], dtype=torch.float64).reshape(p["shape"])
        for name, p in doc["params"].items()
    }
    model.load_state_dict(state)
    return model
