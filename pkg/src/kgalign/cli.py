"""Command-line entry point.

Subcommands: ingest, stats, split, mine, train, eval, baseline, synth.
Options resolve as defaults < config file (`key = value` lines) < explicit
flags; the effective configuration and seed are echoed into the output
directory so any run can be reproduced bit-exactly in deterministic mode.
Environment variables are never consulted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import baselines, ranking, rules as rules_mod, synth
from .experts import PoeScorer, RELATIONAL, load_model, parse_experts, save_model
from .ntriples import parse_ntriples
from .rules import AlignmentContext
from .split import read_split, split_alignments, write_split
from .store import KG_A, KG_B, KnowledgeGraphStore
from .training import TrainConfig, train

# every configuration key and its documented default; unknown keys are rejected
DEFAULTS: dict[str, object] = {
    # shared
    "seed": 0,
    "threads": 0,                 # 0 = library default thread count
    "deterministic": False,
    "lenient": True,
    "out": "",
    # ingest paths / names
    "a_rel": "", "b_rel": "", "a_num": "", "b_num": "", "a_img": "", "b_img": "",
    "sameas": "", "attr_map": "", "a_name": "KG-A", "b_name": "KG-B",
    # artifact paths
    "store": "", "split": "", "rules": "", "model": "",
    # stats
    "top": 10,
    # split / mine
    "p": 80.0,
    "min_support": 2,
    "min_confidence": 0.1,
    # training
    "k": 100,
    "learning_rate": 0.001,
    "batch_size": 512,
    "max_epochs": 100,
    "num_negatives": 500,
    "validate_every": 5,
    "experts": "lrni",
    "negative_pool": "kg",
    "per_relation_numeric": False,
    # eval
    "hits": "1,10",
    # baseline
    "method": "concat",
    "negatives_per_positive": 10,
    # synth
    "entities_per_kg": 200,
    "relation_types": 4,
    "triples_per_kg": 600,
    "aligned_fraction": 1.0,
    "mirror_dropout": 0.2,
    "numeric_attrs": 3,
    "numeric_noise_sigma": 0.05,
    "image_dim": 16,
    "image_noise_sigma": 0.05,
}

SUBCOMMANDS = ("ingest", "stats", "split", "mine", "train", "eval", "baseline", "synth")


class CliError(RuntimeError):
    pass


def _coerce(key: str, raw: str):
    default = DEFAULTS[key]
    if isinstance(default, bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise CliError(f"config key {key!r}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def load_config_file(path: str | Path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise CliError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise CliError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, raw.strip())
    return values


def effective_config(args: argparse.Namespace) -> dict:
    config = dict(DEFAULTS)
    if getattr(args, "config", None):
        config.update(load_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    if config["deterministic"]:
        config["threads"] = 1
    return config


def echo_config(config: dict, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    lines = [f"{key} = {config[key]}" for key in sorted(config)]
    (outdir / "config.effective").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _set_threads(n: int) -> None:
    if n <= 0:
        return
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        pass


def _require(config: dict, *keys: str) -> None:
    for key in keys:
        if not config[key]:
            raise CliError(f"missing required option --{key.replace('_', '-')}")


def _parse_statements(path: str, lenient: bool):
    errors: list = []
    with open(path, "r", encoding="utf-8") as fh:
        yield from parse_ntriples(fh, lenient=lenient, errors=errors)
    if errors:
        print(f"{path}: skipped {len(errors)} malformed lines", file=sys.stderr)


def _load_store(config: dict) -> KnowledgeGraphStore:
    _require(config, "store")
    return KnowledgeGraphStore.load(config["store"])


def _train_config(config: dict) -> TrainConfig:
    return TrainConfig(
        learning_rate=config["learning_rate"],
        batch_size=config["batch_size"],
        max_epochs=config["max_epochs"],
        num_negatives=config["num_negatives"],
        validate_every=config["validate_every"],
        active_experts=parse_experts(config["experts"]),
        seed=config["seed"],
        k=config["k"],
        negative_pool=config["negative_pool"],
        deterministic=config["deterministic"],
        per_relation_numeric=config["per_relation_numeric"],
    )


# -- subcommands ---------------------------------------------------------------

def cmd_ingest(config: dict) -> int:
    _require(config, "a_rel", "b_rel", "out")
    lenient = config["lenient"]
    strict = not lenient
    store = KnowledgeGraphStore(kg_names={KG_A: config["a_name"], KG_B: config["b_name"]})
    store.ingest_relational(_parse_statements(config["a_rel"], lenient), KG_A, strict=strict)
    store.ingest_relational(_parse_statements(config["b_rel"], lenient), KG_B, strict=strict)
    for key, kg in (("a_num", KG_A), ("b_num", KG_B)):
        if config[key]:
            store.ingest_numeric(_parse_statements(config[key], lenient), kg, strict=strict)
    for key, kg in (("a_img", KG_A), ("b_img", KG_B)):
        if config[key]:
            store.ingest_embeddings(config[key], kg, strict=strict)
    if config["sameas"]:
        store.ingest_alignments(_parse_statements(config["sameas"], lenient), strict=strict)
    if config["attr_map"]:
        store.load_attr_map(config["attr_map"], strict=strict)
    out = Path(config["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    store.save(out)
    _print_counts(store)
    return 0


def _print_counts(store: KnowledgeGraphStore) -> None:
    report = store.stats()
    for kg in (KG_A, KG_B):
        row = report["kg"][kg]
        print(f"KG {kg} ({row['name']}): {row['entities']} entities, "
              f"{row['relations']} relations, {row['triples']} triples, "
              f"{row['numeric_literals']} numeric literals, {row['images']} images")
    print(f"alignments: {report['alignments']}")


def cmd_stats(config: dict) -> int:
    store = _load_store(config)
    report = store.stats()
    _print_counts(store)
    top = config["top"]
    for kg in (KG_A, KG_B):
        row = report["kg"][kg]
        print(f"top entities {kg}: "
              + ", ".join(f"{iri} ({c})" for iri, c in row["entity_freq"][:top]))
        print(f"top relations {kg}: "
              + ", ".join(f"{iri} ({c})" for iri, c in row["relation_freq"][:top]))
    if report["skipped"]:
        print(f"skipped: {report['skipped']}")
    if config["out"]:
        outdir = Path(config["out"])
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "stats.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def cmd_split(config: dict) -> int:
    _require(config, "out")
    store = _load_store(config)
    result = split_alignments(store.alignments(), config["p"], config["seed"])
    outdir = Path(config["out"])
    write_split(result, store, outdir)
    echo_config(config, outdir)
    print(f"split {len(result.train)}/{len(result.valid)}/{len(result.test)} "
          f"at P={config['p']}% seed={config['seed']}")
    return 0


def cmd_mine(config: dict) -> int:
    _require(config, "split", "out")
    store = _load_store(config)
    split = read_split(store, config["split"])
    mined = rules_mod.mine_rules(store, split.train,
                                 min_support=config["min_support"],
                                 min_confidence=config["min_confidence"])
    out = Path(config["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    rules_mod.write_rules(store, mined, out)
    print(f"mined {len(mined)} rules")
    return 0


def cmd_train(config: dict) -> int:
    _require(config, "out")
    store = _load_store(config)
    outdir = Path(config["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    if config["split"]:
        split = read_split(store, config["split"])
    else:
        split = split_alignments(store.alignments(), config["p"], config["seed"])
        write_split(split, store, outdir / "split")
    active = parse_experts(config["experts"])
    rules = []
    if RELATIONAL in active:
        if not config["rules"]:
            raise CliError("training with the relational expert requires --rules")
        rules = rules_mod.read_rules(store, config["rules"])
    result = train(store, rules, split, _train_config(config))
    save_model(result.model, outdir / "model.kgm")
    (outdir / "train.log").write_text("\n".join(result.log_lines) + "\n", encoding="utf-8")
    echo_config(config, outdir)
    print(f"trained PoE-{config['experts']}: best validation MRR "
          f"{result.best_mrr!r} at epoch {result.best_epoch}")
    return 0


def _split_and_context(store, config):
    _require(config, "split")
    split = read_split(store, config["split"])
    context = AlignmentContext.from_alignments(store, split.train, label="train")
    return split, context


def cmd_eval(config: dict) -> int:
    _require(config, "model", "out")
    store = _load_store(config)
    model = load_model(config["model"])
    split, context = _split_and_context(store, config)
    rules = rules_mod.read_rules(store, config["rules"]) if config["rules"] else []
    scorer = PoeScorer(model, store, rules, context)
    hits_ns = tuple(int(x) for x in str(config["hits"]).split(",") if x)
    report = ranking.evaluate(scorer, split.test, store, hits_ns=hits_ns)
    outdir = Path(config["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.csv").write_text(ranking.report_csv(report), encoding="utf-8")
    (outdir / "report.txt").write_text(ranking.report_table(report) + "\n", encoding="utf-8")
    echo_config(config, outdir)
    print(ranking.report_table(report))
    print("MRR\tHits@1\tHits@10 (x100): " + ranking.paper_style_row(report))
    return 0


def cmd_baseline(config: dict) -> int:
    _require(config, "out")
    store = _load_store(config)
    split, context = _split_and_context(store, config)
    rules = rules_mod.read_rules(store, config["rules"]) if config["rules"] else []
    hits_ns = tuple(int(x) for x in str(config["hits"]).split(",") if x)
    outdir = Path(config["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    tconfig = _train_config(config)
    if config["method"] == "concat":
        classifier = baselines.concat_train(
            store, rules, split, tconfig,
            negatives_per_positive=config["negatives_per_positive"])
        baselines.save_classifier(classifier, outdir / "concat.kgc")
        scorer = baselines.ConcatScorer(classifier, store, rules, context)
    elif config["method"] == "ensemble":
        results = baselines.train_ensemble(store, rules, split, tconfig)
        models = {family: res.model for family, res in results.items()}
        for family, model in models.items():
            save_model(model, outdir / f"ensemble_{family.lower()}.kgm")
        scorer = baselines.EnsembleScorer(models, store, rules, context)
    else:
        raise CliError(f"unknown baseline method {config['method']!r}")
    report = ranking.evaluate(scorer, split.test, store, hits_ns=hits_ns)
    (outdir / "report.csv").write_text(ranking.report_csv(report), encoding="utf-8")
    (outdir / "report.txt").write_text(ranking.report_table(report) + "\n", encoding="utf-8")
    echo_config(config, outdir)
    print(ranking.report_table(report))
    print("MRR\tHits@1\tHits@10 (x100): " + ranking.paper_style_row(report))
    return 0


def cmd_synth(config: dict) -> int:
    _require(config, "out")
    scfg = synth.SynthConfig(
        entities_per_kg=config["entities_per_kg"],
        relation_types=config["relation_types"],
        triples_per_kg=config["triples_per_kg"],
        aligned_fraction=config["aligned_fraction"],
        mirror_dropout=config["mirror_dropout"],
        numeric_attrs=config["numeric_attrs"],
        numeric_noise_sigma=config["numeric_noise_sigma"],
        image_dim=config["image_dim"],
        image_noise_sigma=config["image_noise_sigma"],
        seed=config["seed"],
    )
    outdir = Path(config["out"])
    manifest = synth.emit(scfg, outdir)
    echo_config(config, outdir)
    counts = manifest["counts"]
    print(f"synth: {counts['entities_A']}+{counts['entities_B']} entities, "
          f"{counts['triples_A']}+{counts['triples_B']} triples, "
          f"{counts['alignments']} alignments -> {outdir}")
    return 0


# -- argument wiring -------------------------------------------------------------

def _add_option(parser: argparse.ArgumentParser, key: str, help_text: str = "") -> None:
    flag = "--" + key.replace("_", "-")
    default = DEFAULTS[key]
    if isinstance(default, bool):
        parser.add_argument(flag, dest=key, action="store_const", const=True,
                            default=None, help=help_text or f"default: {default}")
    else:
        parser.add_argument(flag, dest=key, type=type(default), default=None,
                            help=help_text or f"default: {default!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgalign",
        description="Multi-modal sameAs link prediction between two knowledge graphs.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="|".join(SUBCOMMANDS))

    def common(p: argparse.ArgumentParser, *keys: str) -> None:
        p.add_argument("--config", default=None, help="flat 'key = value' config file")
        for key in keys:
            _add_option(p, key)

    p = sub.add_parser("ingest", help="build a store snapshot from N-Triples/MMKE files")
    common(p, "a_rel", "b_rel", "a_num", "b_num", "a_img", "b_img", "sameas",
           "attr_map", "a_name", "b_name", "lenient", "out", "threads", "deterministic",
           "seed")
    p.add_argument("--strict", dest="lenient", action="store_const", const=False,
                   default=None, help="abort on malformed input instead of skipping")

    p = sub.add_parser("stats", help="counts and frequency histograms of a store")
    common(p, "store", "top", "out", "threads", "deterministic", "seed")

    p = sub.add_parser("split", help="seeded train/valid/test alignment split")
    common(p, "store", "p", "seed", "out", "threads", "deterministic")

    p = sub.add_parser("mine", help="mine cross-KG sameAs horn rules")
    common(p, "store", "split", "min_support", "min_confidence", "out", "threads",
           "deterministic", "seed")

    p = sub.add_parser("train", help="train the product-of-experts model")
    common(p, "store", "split", "p", "rules", "experts", "k", "learning_rate",
           "batch_size", "max_epochs", "num_negatives", "validate_every",
           "negative_pool", "per_relation_numeric", "seed", "deterministic",
           "threads", "out")

    p = sub.add_parser("eval", help="rank sameAs completions and report MR/MRR/Hits")
    common(p, "store", "model", "split", "rules", "hits", "out", "threads",
           "deterministic", "seed")

    p = sub.add_parser("baseline", help="Concat or Ensemble comparison methods")
    common(p, "store", "split", "rules", "method", "negatives_per_positive",
           "experts", "k", "learning_rate", "batch_size", "max_epochs",
           "num_negatives", "validate_every", "negative_pool", "hits", "seed",
           "deterministic", "threads", "out")

    p = sub.add_parser("synth", help="generate paired synthetic multi-modal KGs")
    common(p, "entities_per_kg", "relation_types", "triples_per_kg",
           "aligned_fraction", "mirror_dropout", "numeric_attrs",
           "numeric_noise_sigma", "image_dim", "image_noise_sigma", "seed",
           "out", "threads", "deterministic")

    return parser


_HANDLERS = {
    "ingest": cmd_ingest,
    "stats": cmd_stats,
    "split": cmd_split,
    "mine": cmd_mine,
    "train": cmd_train,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
    "synth": cmd_synth,
}


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = effective_config(args)
        _set_threads(config["threads"])
        return _HANDLERS[args.command](config)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv: list[str] | None = None) -> int:
    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
