import json
import pytest
import torch

from citesum.errors import Divergence
from citesum.metrics import perplexity
from citesum.model import (
    CiteSumModel,
    TrainConfig,
    generate,
    load_checkpoint,
    loss,
    collate,
    save_checkpoint,
    train,
)

from toy import toy_setup


def params_of(model):
    return [p.detach().clone() for p in model.parameters()]


def test_zero_lr_leaves_parameters():
    _, cfg, inst = toy_setup(4)
    model = CiteSumModel(cfg)
    before = params_of(model)
    train(inst, cfg, TrainConfig(lr=0.0, batch_size=2, epochs=1), model=model)
    assert all(torch.equal(a, b) for a, b in zip(before, params_of(model)))


def test_loss_curve_reproducible():
    _, cfg, inst = toy_setup(4)
    hyper = TrainConfig(lr=1e-3, batch_size=2, epochs=3)
    a = train(inst, cfg, hyper).log
    b = train(inst, cfg, hyper).log
    assert a == b
    assert [e["step"] for e in a] == list(range(1, 7))


def test_max_steps_stops_early():
    _, cfg, inst = toy_setup(4)
    res = train(inst, cfg, TrainConfig(lr=1e-3, batch_size=2, epochs=10, max_steps=3))
    assert len(res.log) == 3 and res.best_step == 3


def test_divergence_raised():
    _, cfg, inst = toy_setup(2)
    model = CiteSumModel(cfg)
    with torch.no_grad():
        model.w_d.fill_(float("nan"))
    with pytest.raises(Divergence) as err:
        train(inst, cfg, TrainConfig(lr=1e-3, batch_size=2, epochs=1), model=model)
    assert err.value.step == 1


def test_best_validation_checkpoint_kept():
    _, cfg, inst = toy_setup(6)
    # with this large step size validation perplexity peaks after the first epoch
    res = train(inst[:4], cfg, TrainConfig(lr=0.05, batch_size=4, epochs=5), val_instances=inst[4:])
    ppls = [e["val_ppl"] for e in res.log]
    assert all(p is not None for p in ppls)
    assert res.best_val_ppl == min(ppls)
    assert res.best_step < res.log[-1]["step"]
    assert res.best_step == res.log[ppls.index(min(ppls))]["step"]
    assert perplexity(res.model, inst[4:], 4) == pytest.approx(res.best_val_ppl, rel=1e-12)


def test_checkpoint_round_trip(tmp_path):
    vocab, cfg, inst = toy_setup(2)
    model = CiteSumModel(cfg)
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, model, vocab.sha256())
    loaded = load_checkpoint(path, vocab.sha256())
    batch = collate(inst, cfg)
    assert loss(batch, loaded).item() == loss(batch, model).item()
    with pytest.raises(ValueError):
        load_checkpoint(path, "0" * 64)
    assert json.loads(path.read_text())["config"]["hidden_dim"] == 32

