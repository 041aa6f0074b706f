"""Command-line entry point.

Subcommands: build-dataset, stats, extract-graph, train, generate, baseline,
evaluate. Every written artifact is accompanied by a manifest holding the
resolved settings, their hash, the seed and content hashes of inputs and
outputs. Exit status: 0 ok, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
from pathlib import Path

from .errors import CiteSumError

DEFAULTS = {
    "seed": 0,
    "threads": 1,
    "citation_limit": 3,
    "ratios": "0.8,0.1,0.1",
    "hop_max": 1,
    "n_max": 12,
    "tokenizer": "bpe",
    "vocab_size": 1000,
    "hidden_dim": 32,
    "max_pair_len": 128,
    "max_citations": 12,
    "layers": 2,
    "heads": 2,
    "ffn_dim": 64,
    "max_target_len": 64,
    "lr": 1e-4,
    "batch_size": 16,
    "epochs": 10,
    "max_steps": None,
    "split": "test",
    "strategy": "greedy",
    "temperature": 1.0,
    "max_len": None,
    "max_sents": 10,
}


class BadFlag(CiteSumError):
    pass


class UnknownCommand(CiteSumError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        if "invalid choice" in message and "command" in message:
            raise UnknownCommand(message)
        raise BadFlag(message)


def _sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_manifest(path, command, settings, inputs=(), outputs=(), **extra):
    config_blob = json.dumps(settings, sort_keys=True).encode("utf-8")
    manifest = {
        "command": command,
        "seed": settings.get("seed"),
        "config": settings,
        "config_sha256": hashlib.sha256(config_blob).hexdigest(),
        "inputs": {Path(p).name: _sha256_file(p) for p in inputs},
        "outputs": {Path(p).name: _sha256_file(p) for p in outputs},
        **extra,
    }
    Path(path).write_text(_dump(manifest), encoding="utf-8")
    return manifest


def read_config(path):
    """Key-value file (``key = value`` lines, ``#`` comments) -> dict of strings."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string("[DEFAULT]\n" + Path(path).read_text(encoding="utf-8"))
    return {k.replace("-", "_"): v for k, v in parser.defaults().items()}


def _coerce(key, value):
    default = DEFAULTS[key]
    if key in ("max_steps", "max_len"):
        return None if value.lower() in ("", "none") else int(value)
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def resolve(args, config):
    """flags > config file > defaults."""
    settings = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
        elif key in config:
            try:
                settings[key] = _coerce(key, config[key])
            except ValueError as exc:
                raise BadFlag(f"config value for {key}: {exc}") from exc
        else:
            settings[key] = default
    return settings


def _ratios(text):
    try:
        values = tuple(float(x) for x in str(text).split(","))
    except ValueError as exc:
        raise BadFlag(f"bad ratios {text!r}") from exc
    return values


# ---------------------------------------------------------------------------
# subcommands


def cmd_build_dataset(args, s, config):
    from .corpus import FieldMap, build_dataset, read_raw_corpus, save_dataset, split_dataset

    fields = FieldMap.from_mapping({k[6:]: v for k, v in config.items() if k.startswith("field.")})
    ratios = _ratios(s["ratios"])
    ds = build_dataset(read_raw_corpus(args.input, fields), s["citation_limit"])
    ds = split_dataset(ds, ratios, s["seed"])
    out = Path(args.out)
    save_dataset(ds, out)
    counts = {
        **{name: len(ds.splits[name]) for name in ds.splits},
        "aux": len(ds.aux_records),
        "rejections": ds.rejections,
    }
    written = [out / f"{n}.jsonl" for n in ("train", "val", "test", "aux")]
    written += [out / "stats.json", out / "mentions.json"]
    write_manifest(out / "manifest.json", "build-dataset", _settings_for(s, "build-dataset"),
                   [args.input], written, counts=counts)
    print(json.dumps(counts, sort_keys=True))


def cmd_stats(args, s, config):
    from .corpus import SPLIT_NAMES, compute_stats, load_dataset

    ds = load_dataset(args.data)
    names = [args.split_name] if args.split_name else list(SPLIT_NAMES)
    stats = {name: vars(compute_stats(ds, name)) for name in names}
    text = _dump(stats)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        write_manifest(f"{args.out}.manifest.json", "stats", _settings_for(s, "stats"), [], [args.out])
    else:
        sys.stdout.write(text)


def cmd_extract_graph(args, s, config):
    from .citegraph import build_graph, extract_neighborhood
    from .corpus import load_dataset

    g = build_graph(load_dataset(args.data))
    retrieved = extract_neighborhood(g, args.seed_uid, s["hop_max"], s["n_max"])
    lines = "".join(json.dumps(row) + "\n" for row in retrieved.to_jsonl_rows())
    if args.out:
        Path(args.out).write_text(lines, encoding="utf-8")
        settings = {**_settings_for(s, "extract-graph"), "seed_uid": args.seed_uid}
        write_manifest(f"{args.out}.manifest.json", "extract-graph", settings, [], [args.out])
    else:
        sys.stdout.write(lines)


def _vocab_texts(ds):
    texts = []
    for rec in ds.split_records("train"):
        texts.append(rec.body_text)
        texts.append(rec.abstract)
    texts.extend(rec.abstract for rec in ds.aux_records.values())
    return texts


def cmd_train(args, s, config):
    import torch

    from .citegraph import build_graph
    from .corpus import load_dataset
    from .model import ModelConfig, TrainConfig, make_instances, save_checkpoint, train
    from .tokenizer import train_bpe, word_vocabulary

    torch.set_num_threads(s["threads"])
    ds = load_dataset(args.data)
    if s["tokenizer"] == "word":
        vocab = word_vocabulary(_vocab_texts(ds))
    elif s["tokenizer"] == "bpe":
        vocab = train_bpe(_vocab_texts(ds), s["vocab_size"])
    else:
        raise BadFlag(f"unknown tokenizer {s['tokenizer']!r}")
    cfg = ModelConfig(
        vocab_size=len(vocab),
        hidden_dim=s["hidden_dim"],
        max_pair_len=s["max_pair_len"],
        max_citations=s["max_citations"],
        enc_layers=s["layers"],
        dec_layers=s["layers"],
        heads=s["heads"],
        ffn_dim=s["ffn_dim"],
        max_target_len=s["max_target_len"],
        seed=s["seed"],
    )
    hyper = TrainConfig(
        lr=s["lr"], batch_size=s["batch_size"], epochs=s["epochs"], max_steps=s["max_steps"], seed=s["seed"]
    )
    graph = build_graph(ds)
    train_set = make_instances(ds, ds.splits["train"], graph, vocab, cfg, s["hop_max"], s["n_max"])
    val_set = make_instances(ds, ds.splits["val"], graph, vocab, cfg, s["hop_max"], s["n_max"])
    result = train(train_set, cfg, hyper, val_set)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    vocab.save(out / "vocab.json")
    save_checkpoint(out / "checkpoint.json", result.model, vocab.sha256())
    with open(out / "train_log.jsonl", "w", encoding="utf-8") as fh:
        for entry in result.log:
            fh.write(json.dumps(entry) + "\n")
    inputs = [Path(args.data) / f"{n}.jsonl" for n in ("train", "val", "aux")]
    outputs = [out / "vocab.json", out / "checkpoint.json", out / "train_log.jsonl"]
    write_manifest(out / "manifest.json", "train", _settings_for(s, "train"), inputs, outputs,
                   best_step=result.best_step, best_val_ppl=result.best_val_ppl)
    print(json.dumps({"steps": len(result.log), "best_step": result.best_step, "best_val_ppl": result.best_val_ppl}))


def _load_model(model_dir):
    from .model import load_checkpoint
    from .tokenizer import Vocabulary

    model_dir = Path(model_dir)
    vocab = Vocabulary.load(model_dir / "vocab.json")
    model = load_checkpoint(model_dir / "checkpoint.json", vocab.sha256())
    trained = json.loads((model_dir / "manifest.json").read_text(encoding="utf-8"))["config"]
    return model, vocab, trained


def cmd_generate(args, s, config):
    import torch

    from .citegraph import build_graph
    from .corpus import load_dataset, write_jsonl
    from .model import generate, make_instances

    torch.set_num_threads(s["threads"])
    model, vocab, trained = _load_model(args.model)
    ds = load_dataset(args.data)
    uids = ds.split_records(s["split"])
    instances = make_instances(
        ds, [r.uid for r in uids], build_graph(ds), vocab, model.cfg, trained["hop_max"], trained["n_max"]
    )
    rows = []
    for k, inst in enumerate(instances):
        ids = generate(
            model, inst.inputs, s["strategy"], s["max_len"], s["temperature"], seed=s["seed"] + k
        )
        rows.append({"uid": inst.uid, "summary": vocab.decode(ids)})
    write_jsonl(args.out, rows)
    inputs = [Path(args.model) / "checkpoint.json", Path(args.data) / f"{s['split']}.jsonl"]
    write_manifest(f"{args.out}.manifest.json", "generate", _settings_for(s, "generate"), inputs, [args.out])


def cmd_baseline(args, s, config):
    from .baselines import lead3, oracle_greedy
    from .corpus import load_records, write_jsonl

    rows = []
    for rec in load_records(args.data):
        if args.system == "lead3":
            summary = lead3(rec)
        else:
            summary = oracle_greedy(rec, rec.abstract, s["max_sents"])
        rows.append({"uid": rec.uid, "summary": summary})
    write_jsonl(args.out, rows)
    settings = {**_settings_for(s, "baseline"), "system": args.system}
    write_manifest(f"{args.out}.manifest.json", "baseline", settings, [args.data], [args.out])


def cmd_evaluate(args, s, config):
    from .corpus import load_dataset, load_records, read_jsonl
    from .metrics import evaluate

    preds = read_jsonl(args.pred)
    references = {r.uid: r.abstract for r in load_records(args.data)}
    perplexities = None
    corpus_ppl = None
    if args.model:
        import math

        from .citegraph import build_graph
        from .metrics import perplexity
        from .model import corpus_nll, make_instances

        model, vocab, trained = _load_model(args.model)
        ds = load_dataset(Path(args.data).parent)
        uids = [p["uid"] for p in preds if p["uid"] in references]
        instances = make_instances(ds, uids, build_graph(ds), vocab, model.cfg, trained["hop_max"], trained["n_max"])
        perplexities = {}
        for inst in instances:
            total, count = corpus_nll(model, [inst])
            perplexities[inst.uid] = math.exp(total / count)
        corpus_ppl = perplexity(model, instances)
    report = evaluate(preds, references, perplexities, corpus_ppl)
    text = _dump(report.to_json())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        write_manifest(f"{args.out}.manifest.json", "evaluate", _settings_for(s, "evaluate"), [args.pred, args.data], [args.out])
    else:
        sys.stdout.write(text)


# settings that influence each command's artifacts
_RELEVANT = {
    "build-dataset": ("seed", "citation_limit", "ratios"),
    "stats": (),
    "extract-graph": ("hop_max", "n_max"),
    "train": (
        "seed", "tokenizer", "vocab_size", "hidden_dim", "max_pair_len", "max_citations", "layers",
        "heads", "ffn_dim", "max_target_len", "lr", "batch_size", "epochs", "max_steps", "hop_max", "n_max",
    ),
    "generate": ("seed", "split", "strategy", "temperature", "max_len"),
    "baseline": ("max_sents",),
    "evaluate": (),
}


def _settings_for(s, command):
    return {k: s[k] for k in _RELEVANT[command]}


COMMANDS = {
    "build-dataset": cmd_build_dataset,
    "stats": cmd_stats,
    "extract-graph": cmd_extract_graph,
    "train": cmd_train,
    "generate": cmd_generate,
    "baseline": cmd_baseline,
    "evaluate": cmd_evaluate,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a subcommand from resetting a value given before it
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value settings file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)

    parser = _Parser(prog="citesum", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-dataset", parents=[common])
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--citation-limit", type=int)
    p.add_argument("--ratios")

    p = sub.add_parser("stats", parents=[common])
    p.add_argument("--data", required=True)
    p.add_argument("--split", dest="split_name", choices=["train", "val", "test"])
    p.add_argument("--out")

    p = sub.add_parser("extract-graph", parents=[common])
    p.add_argument("--data", required=True)
    p.add_argument("--seed-uid", required=True)
    p.add_argument("--hop-max", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--out")

    p = sub.add_parser("train", parents=[common])
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tokenizer", choices=["bpe", "word"])
    for flag, kind in (
        ("--vocab-size", int), ("--hidden-dim", int), ("--max-pair-len", int), ("--max-citations", int),
        ("--layers", int), ("--heads", int), ("--ffn-dim", int), ("--max-target-len", int),
        ("--lr", float), ("--batch-size", int), ("--epochs", int), ("--max-steps", int),
        ("--hop-max", int), ("--n-max", int),
    ):
        p.add_argument(flag, type=kind)

    p = sub.add_parser("generate", parents=[common])
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=["train", "val", "test"])
    p.add_argument("--strategy", choices=["greedy", "sample"])
    p.add_argument("--temperature", type=float)
    p.add_argument("--max-len", type=int)

    p = sub.add_parser("baseline", parents=[common])
    p.add_argument("--system", required=True, choices=["lead3", "oracle"])
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-sents", type=int)

    p = sub.add_parser("evaluate", parents=[common])
    p.add_argument("--pred", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.add_argument("--model")
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        config_path = getattr(args, "config", None)
        config = read_config(config_path) if config_path else {}
        settings = resolve(args, config)
        COMMANDS[args.command](args, settings, config)
    except (CiteSumError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
