"""Command-line front end: synth, featurize, train, evaluate, explain, and
pipeline (all stages in sequence).

Every failure exits nonzero after printing a single line of the form
`toolwear: error: [stage] message` to stderr. A JSON file passed with
--config overrides the corresponding command-line flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dataio, report, synth
from .forest import Forest, Hyperparams, train
from .metrics import evaluate
from .rng import Rng, substream
from .shapley import (InterventionalValue, RetrainingValue, explain,
                      explain_class, global_importance, train_subset_models)
from .signalprep import LabeledDataset, assemble_dataset, split

ERROR_PREFIX = "toolwear: error:"

CASE_NAMES = {
    (1, 1): "case_correct_worn",
    (0, 0): "case_correct_unworn",
    (0, 1): "case_false_worn",      # unworn tool predicted worn
    (1, 0): "case_false_unworn",    # worn tool predicted unworn
}


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(str(cause))
        self.stage = stage


# --- stage implementations -------------------------------------------------

def run_synth(config: synth.SynthConfig, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    runs = synth.generate(config)
    for run in runs:
        dataio.write_run_csv(run, out_dir / f"{run.run_id}.csv")
    entries = synth.manifest_entries(runs)
    manifest = out_dir / "manifest.csv"
    dataio.write_manifest(entries, manifest)
    with open(out_dir / "synth_config.json", "w", encoding="utf-8") as fh:
        fh.write(config.to_json())
    print(f"synth: wrote {len(runs)} runs and manifest to {out_dir}")
    return manifest


def run_featurize(manifest_path: Path, out_csv: Path) -> LabeledDataset:
    runs = dataio.load_runs(manifest_path)
    if not runs:
        raise ValueError(f"manifest {manifest_path} lists no runs")
    dataset = assemble_dataset(runs)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    dataio.write_dataset_csv(dataset, out_csv)
    print(f"featurize: {dataset.n} rows -> {out_csv}")
    return dataset


def run_train(dataset: LabeledDataset, train_fraction: float,
              split_seed: int, train_seed: int, hp: Hyperparams,
              model_path: Path, split_path: Path):
    parts = split(dataset, train_fraction, split_seed)
    model = train(parts.train, hp, seed=train_seed)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    model.save(model_path)
    dataio.write_split_csv(parts.train_indices, parts.test_indices,
                           split_path)
    print(f"train: {len(parts.train)}/{len(parts.test)} train/test split, "
          f"{model.tree_count} trees -> {model_path}")
    return model, parts


def run_evaluate(model: Forest, dataset: LabeledDataset,
                 test_indices: list[int], positive_class: int,
                 out_dir: Path):
    test = dataset.subset(test_indices)
    if test.M != model.m:
        raise ValueError(f"feature count mismatch: model expects {model.m}, "
                         f"dataset has {test.M}")
    scores = model.vote_fractions(test.X)
    y_pred = (scores * 2 > 1.0).astype(np.int64)
    rep = evaluate(test.y, y_pred, scores, positive_class)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "report.txt", "w", encoding="utf-8") as fh:
        fh.write(rep.to_text())
    with open(out_dir / "metrics.csv", "w", encoding="utf-8") as fh:
        fh.write("acc,tpr,fpr,mcc,auc\n")
        fh.write(f"{rep.metrics.acc!r},{rep.metrics.tpr!r},"
                 f"{rep.metrics.fpr!r},{rep.metrics.mcc!r},{rep.roc.auc!r}\n")
    with open(out_dir / "confusion.csv", "w", encoding="utf-8") as fh:
        fh.write("tp,fp,tn,fn,positive_class\n")
        fh.write(f"{rep.cm.tp},{rep.cm.fp},{rep.cm.tn},{rep.cm.fn},"
                 f"{rep.cm.positive_class}\n")
    with open(out_dir / "roc.csv", "w", encoding="utf-8") as fh:
        fh.write("fpr,tpr\n")
        for f, t in rep.roc.points:
            fh.write(f"{f!r},{t!r}\n")
    print(f"evaluate: ACC={rep.metrics.acc:.3f} TPR={rep.metrics.tpr:.3f} "
          f"FPR={rep.metrics.fpr:.3f} MCC={rep.metrics.mcc:.3f}")
    print(f"evaluate: AUC={rep.roc.auc:.3f} -> {out_dir}")
    return rep


def run_explain(model: Forest, dataset: LabeledDataset,
                train_indices: list[int], test_indices: list[int],
                backend: str, background_sample: int, background_seed: int,
                retrain_seed: int, hp: Hyperparams, target_class: int,
                out_dir: Path) -> None:
    if dataset.M != model.m:
        raise ValueError(f"feature count mismatch: model expects {model.m}, "
                         f"dataset has {dataset.M}")
    train_set = dataset.subset(train_indices)
    if backend == "interventional":
        background = train_set.X
        if 0 < background_sample < background.shape[0]:
            rng = Rng(substream(background_seed, 0))
            keep = rng.sample_indices(background.shape[0], background_sample)
            background = background[keep]
        value_fn = InterventionalValue(model, background)
    elif backend == "retraining":
        table = train_subset_models(train_set, hp, seed=retrain_seed)
        value_fn = RetrainingValue(table)
    else:
        raise ValueError(f"unknown backend {backend!r}")

    out_dir.mkdir(parents=True, exist_ok=True)
    names = model.feature_names
    explanations = []
    cases: dict[tuple[int, int], int] = {}
    for row in test_indices:
        x = dataset.X[row]
        expl = explain(value_fn, x)
        # re-assert additivity at emit time
        residual = expl.base_value + float(expl.phi.sum()) \
            - expl.explained_output
        if abs(residual) > 1e-9:
            raise AssertionError(
                f"row {row}: attribution residual {residual:.3e}")
        explanations.append(expl)
        shown = explain_class(expl, target_class)
        pred = int(model.vote_fraction(x) * 2 > 1.0)
        true = int(dataset.y[row])
        stem = f"instance_{row:04d}"
        report.write_explanation_csv(out_dir / f"{stem}.csv", shown, names,
                                     x, pred, true)
        with open(out_dir / f"{stem}.svg", "w", encoding="utf-8") as fh:
            fh.write(report.waterfall_svg(shown, names, x, pred, true))
        cases.setdefault((true, pred), row)

    with open(out_dir / "cases.csv", "w", encoding="utf-8") as fh:
        fh.write("case,row_index,true_label,predicted_label\n")
        for key in sorted(CASE_NAMES):
            if key in cases:
                fh.write(f"{CASE_NAMES[key]},{cases[key]},{key[0]},{key[1]}\n")
    for key, row in sorted(cases.items()):
        stem = f"instance_{row:04d}"
        for ext in (".csv", ".svg"):
            src = (out_dir / f"{stem}{ext}").read_text(encoding="utf-8")
            (out_dir / f"{CASE_NAMES[key]}{ext}").write_text(
                src, encoding="utf-8")

    gi = global_importance(explanations, names)
    report.write_global_importance_csv(out_dir / "global_importance.csv", gi)
    with open(out_dir / "global_importance.svg", "w", encoding="utf-8") as fh:
        fh.write(report.importance_svg(gi))
    top = names[gi.ranking[0]]
    low = names[gi.ranking[-1]]
    print(f"explain: {len(explanations)} instances ({backend}); "
          f"most important {top}, least {low} -> {out_dir}")


# --- argument plumbing ------------------------------------------------------

def _add_config_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="JSON file whose entries override these flags")


def _add_forest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trees", type=int, default=100,
                   help="number of trees (default 100)")
    p.add_argument("--max-depth", type=int, default=None,
                   help="depth cap; omit to grow to purity")
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--features-per-split", type=int, default=None,
                   help="candidate features per split; default floor(sqrt(M))")
    p.add_argument("--no-bootstrap", dest="bootstrap", action="store_false",
                   help="train every tree on the full sample")


def _add_split_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train-fraction", type=float, default=0.6)
    p.add_argument("--split-seed", type=int, default=7)
    p.add_argument("--train-seed", type=int, default=7)


def _add_explain_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=("interventional", "retraining"),
                   default="interventional")
    p.add_argument("--background-sample", type=int, default=0,
                   help="subsample the background to this many rows "
                        "(0 = use the full training set)")
    p.add_argument("--background-seed", type=int, default=7)
    p.add_argument("--retrain-seed", type=int, default=11,
                   help="seed for the retraining backend's subset models")
    p.add_argument("--explain-class", type=int, choices=(0, 1), default=1,
                   help="class whose score the emitted attributions explain")


def _add_synth_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", default="paper",
                   help="named synth profile (default: paper)")
    p.add_argument("--synth-config", type=Path, default=None,
                   help="JSON SynthConfig file; overrides --profile")
    p.add_argument("--seed", type=int, default=None,
                   help="override the profile's generator seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toolwear",
        description="tool-wear classification and Shapley explanation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic sensor runs")
    _add_synth_flags(p)
    p.add_argument("--out", type=Path, required=True)
    _add_config_flag(p)

    p = sub.add_parser("featurize", help="manifest of raw runs -> dataset CSV")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_config_flag(p)

    p = sub.add_parser("train", help="split a dataset and train the forest")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out-model", type=Path, required=True)
    p.add_argument("--out-split", type=Path, required=True)
    _add_split_flags(p)
    _add_forest_flags(p)
    _add_config_flag(p)

    p = sub.add_parser("evaluate", help="metrics and ROC on the test split")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--split", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--positive-class", type=int, choices=(0, 1), default=0)
    _add_config_flag(p)

    p = sub.add_parser("explain", help="Shapley explanations for the test split")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--split", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_explain_flags(p)
    _add_forest_flags(p)
    _add_config_flag(p)

    p = sub.add_parser("pipeline", help="synth -> featurize -> train -> "
                                        "evaluate -> explain")
    p.add_argument("--out", type=Path, required=True)
    _add_synth_flags(p)
    _add_split_flags(p)
    _add_forest_flags(p)
    _add_explain_flags(p)
    p.add_argument("--positive-class", type=int, choices=(0, 1), default=0)
    _add_config_flag(p)

    return parser


def _apply_config(args: argparse.Namespace) -> None:
    """Apply JSON config entries on top of the parsed flags."""
    if getattr(args, "config", None) is None:
        return
    with open(args.config, "r", encoding="utf-8") as fh:
        overrides = json.load(fh)
    if not isinstance(overrides, dict):
        raise ValueError(f"{args.config}: config must be a JSON object")
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest) or dest in ("command", "func", "config"):
            raise ValueError(f"{args.config}: unknown config key {key!r}")
        if dest in ("out", "manifest", "dataset", "model", "split",
                    "out_model", "out_split", "synth_config"):
            value = Path(value)
        setattr(args, dest, value)


def _resolve_synth_config(args) -> synth.SynthConfig:
    if args.synth_config is not None:
        with open(args.synth_config, "r", encoding="utf-8") as fh:
            config = synth.SynthConfig.from_json(fh.read())
    else:
        try:
            config = synth.PROFILES[args.profile]()
        except KeyError:
            raise ValueError(f"unknown synth profile {args.profile!r} "
                             f"(expected one of {sorted(synth.PROFILES)})") \
                from None
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _hp_from_args(args) -> Hyperparams:
    hp = Hyperparams(tree_count=args.trees, max_depth=args.max_depth,
                     min_samples_leaf=args.min_samples_leaf,
                     features_per_split=args.features_per_split,
                     bootstrap=args.bootstrap)
    hp.validate()
    return hp


# --- subcommands ------------------------------------------------------------

def cmd_synth(args) -> int:
    run_synth(_resolve_synth_config(args), args.out)
    return 0


def cmd_featurize(args) -> int:
    run_featurize(args.manifest, args.out)
    return 0


def cmd_train(args) -> int:
    dataset = dataio.read_dataset_csv(args.dataset)
    run_train(dataset, args.train_fraction, args.split_seed, args.train_seed,
              _hp_from_args(args), args.out_model, args.out_split)
    return 0


def cmd_evaluate(args) -> int:
    model = Forest.load(args.model)
    dataset = dataio.read_dataset_csv(args.dataset)
    _, test_idx = dataio.read_split_csv(args.split)
    run_evaluate(model, dataset, test_idx, args.positive_class, args.out)
    return 0


def cmd_explain(args) -> int:
    model = Forest.load(args.model)
    dataset = dataio.read_dataset_csv(args.dataset)
    train_idx, test_idx = dataio.read_split_csv(args.split)
    run_explain(model, dataset, train_idx, test_idx, args.backend,
                args.background_sample, args.background_seed,
                args.retrain_seed, _hp_from_args(args), args.explain_class,
                args.out)
    return 0


def cmd_pipeline(args) -> int:
    out: Path = args.out
    hp = _hp_from_args(args)
    stage = "synth"
    try:
        manifest = run_synth(_resolve_synth_config(args), out / "data")
        stage = "featurize"
        dataset = run_featurize(manifest, out / "features.csv")
        stage = "train"
        model, parts = run_train(dataset, args.train_fraction,
                                 args.split_seed, args.train_seed, hp,
                                 out / "model.txt", out / "split.csv")
        stage = "evaluate"
        run_evaluate(model, dataset, parts.test_indices, args.positive_class,
                     out / "eval")
        stage = "explain"
        run_explain(model, dataset, parts.train_indices, parts.test_indices,
                    args.backend, args.background_sample,
                    args.background_seed, args.retrain_seed, hp,
                    args.explain_class, out / "explain")
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc
    print(f"pipeline: complete -> {out}")
    return 0


COMMANDS = {"synth": cmd_synth, "featurize": cmd_featurize,
            "train": cmd_train, "evaluate": cmd_evaluate,
            "explain": cmd_explain, "pipeline": cmd_pipeline}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    stage = args.command
    try:
        _apply_config(args)
        return COMMANDS[args.command](args)
    except StageError as exc:
        _print_error(exc.stage, exc)
        return 1
    except Exception as exc:
        _print_error(stage, exc)
        return 1


def _print_error(stage: str, exc: BaseException) -> None:
    message = " ".join(str(exc).split()) or exc.__class__.__name__
    print(f"{ERROR_PREFIX} [{stage}] {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
