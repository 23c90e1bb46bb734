"""
Command-line Interface
Subcommands for each pipeline stage plus full experiment runs; exit 0 success, 1 partial model failure, 2 error
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from dataset.audit import audit
from dataset.loader import load_dataset, write_dataset
from evaluation.reports import compare_report, evaluate, load_report
from imputation.imputer import CartImputer
from pipeline.artifacts import load_model, save_model
from pipeline.experiment import fingerprint, run_experiment, train_model
from pipeline.partition import PartitionSpec, split
from utils.config import ENV_LOG_LEVEL, MODEL_NAMES, ExperimentConfig, load_config, setup_logging
from utils.errors import MammoError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_ERROR = 2


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None


def _name_list(text: str) -> List[str]:
    return [part.strip().lower() for part in text.split(",") if part.strip()]


@dataclass(frozen=True)
class FlagSpec:
    """One long-form flag mapped onto a dotted ExperimentConfig key"""
    flag: str
    key: str
    help: str
    type: Optional[Callable[[str], Any]] = None
    const: Any = None  # set for switches

    def default(self) -> Any:
        value: Any = ExperimentConfig().to_dict()
        for part in self.key.split("."):
            value = value[part]
        if isinstance(value, list):
            return ",".join(str(v) for v in value)
        return value

    def add_to(self, parser: argparse.ArgumentParser):
        dest = self.key.replace(".", "__")
        text = f"{self.help} (default: {self.default()})"
        if self.const is not None:
            parser.add_argument(self.flag, dest=dest, action="store_const", const=self.const,
                                default=None, help=text)
        else:
            parser.add_argument(self.flag, dest=dest, type=self.type, default=None, help=text)


CHAID_FLAGS = (
    FlagSpec("--alpha-merge", "chaid.alpha_merge", "CHAID merge significance level", float),
    FlagSpec("--alpha-split", "chaid.alpha_split", "CHAID split significance level", float),
    FlagSpec("--max-depth", "chaid.max_depth", "CHAID maximum tree depth", int),
    FlagSpec("--min-parent", "chaid.min_parent", "smallest node CHAID may split (None = 2%% of records)", int),
    FlagSpec("--min-child", "chaid.min_child", "smallest CHAID child node (None = 1%% of records)", int),
    FlagSpec("--bin-count", "chaid.bin_count", "equal-frequency bins for continuous attributes", int),
)

MLP_FLAGS = (
    FlagSpec("--learning-rate", "mlp.train.learning_rate", "backpropagation learning rate", float),
    FlagSpec("--momentum", "mlp.train.momentum", "backpropagation momentum", float),
    FlagSpec("--max-epochs", "mlp.train.max_epochs", "maximum training epochs", int),
    FlagSpec("--patience", "mlp.train.patience", "epochs without validation improvement before stopping", int),
    FlagSpec("--hidden", "mlp.train.hidden_layers", "hidden layer sizes, comma-separated", _int_list),
    FlagSpec("--max-seconds", "mlp.train.max_seconds", "wall-clock training limit in seconds", float),
    FlagSpec("--no-prune", "mlp.prune.enabled", "skip neuron pruning", const=False),
    FlagSpec("--prune-fraction", "mlp.prune.prune_fraction", "fraction of neurons removed per round", float),
    FlagSpec("--prune-rounds", "mlp.prune.max_rounds", "maximum pruning rounds", int),
    FlagSpec("--prune-tolerance", "mlp.prune.tolerance", "allowed validation loss against the unpruned network", float),
)

SVM_FLAGS = (
    FlagSpec("--c", "svm.solver.c", "SVM regularization C", float),
    FlagSpec("--kkt-tolerance", "svm.solver.kkt_tolerance", "SMO KKT tolerance", float),
    FlagSpec("--max-passes", "svm.solver.max_passes", "SMO stalled full passes before stopping", int),
    FlagSpec("--step-eps", "svm.solver.step_eps", "SMO smallest relative multiplier step", float),
    FlagSpec("--gamma", "svm.kernel.gamma", "polynomial kernel gamma", float),
    FlagSpec("--coef", "svm.kernel.coef_r", "polynomial kernel constant r", float),
    FlagSpec("--degree", "svm.kernel.degree", "polynomial kernel degree", int),
)

DATA_FLAGS = (
    FlagSpec("--include-birads", "data.include_non_predictive", "use BI-RADS as a predictor", const=True),
)

RUN_FLAGS = (
    FlagSpec("--data", "data.path", "dataset path", str),
    FlagSpec("--output-dir", "output_dir", "root directory for run outputs", str),
    FlagSpec("--models", "models", "models to run, comma-separated", _name_list),
    FlagSpec("--train-fraction", "partition.train_fraction", "training share of the partition", float),
    FlagSpec("--no-stratify", "partition.stratified", "split without stratification", const=False),
)

MODEL_FLAGS = CHAID_FLAGS + MLP_FLAGS + SVM_FLAGS + DATA_FLAGS

IMPUTE_FLAGS = (
    FlagSpec("--cart-max-depth", "imputation.max_depth", "imputation tree maximum depth", int),
    FlagSpec("--cart-min-leaf", "imputation.min_leaf", "imputation tree minimum leaf size", int),
    FlagSpec("--use-label", "imputation.include_label", "use severity as an imputation predictor", const=True),
)

SPLIT_FLAGS = (
    FlagSpec("--train-fraction", "partition.train_fraction", "training share of the partition", float),
    FlagSpec("--no-stratify", "partition.stratified", "split without stratification", const=False),
)


def _overrides(args: argparse.Namespace, specs: Sequence[FlagSpec]) -> Dict[str, Any]:
    return {spec.key: getattr(args, spec.key.replace(".", "__")) for spec in specs}


def cmd_audit(args: argparse.Namespace) -> int:
    report = audit(load_dataset(args.data))
    print(report.render_text())
    if args.json:
        report.write_json(args.json)
        logger.info(f"Audit written to {args.json}")
    return EXIT_OK


def cmd_impute(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args, IMPUTE_FLAGS))
    imputer = CartImputer(cfg.imputation.params(), cfg.imputation.include_label)
    filled = imputer.fit_transform(load_dataset(args.data))
    write_dataset(filled, args.out)
    if args.log:
        imputer.write_log(args.log)
    counts = imputer.filled_counts()
    print(f"Filled {sum(counts.values())} cells: "
          + (", ".join(f"{name}={count}" for name, count in counts.items()) or "none"))
    return EXIT_OK


def cmd_split(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args, SPLIT_FLAGS))
    seed = cfg.partition.seed if args.seed is None else args.seed
    spec = PartitionSpec(cfg.partition.train_fraction, cfg.partition.stratified, seed)
    train, test = split(load_dataset(args.data), spec)
    write_dataset(train, args.train_out)
    write_dataset(test, args.test_out)
    print(f"{len(train)} train records -> {args.train_out}; {len(test)} test records -> {args.test_out}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args, MODEL_FLAGS))
    seed = cfg.mlp.train.seed if args.seed is None else args.seed
    trained = train_model(args.model, load_dataset(args.data), cfg, seed)
    save_model(trained, args.model_out, fingerprint(cfg))
    print(f"{args.model} model written to {args.model_out}: {json.dumps(trained.details)}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    trained = load_model(args.model)
    ds = load_dataset(args.data)
    preds, scores = trained.predict(ds)
    report = evaluate(trained.kind, args.partition, preds, scores, ds.labels())
    print(compare_report([report]).render_text())
    if args.report:
        report.write_json(args.report)
    if args.curves_dir:
        report.write_curves(args.curves_dir)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    overrides = _overrides(args, MODEL_FLAGS + RUN_FLAGS)
    if args.log_level:
        overrides["log_level"] = args.log_level
    cfg = load_config(args.config, overrides)
    logging.getLogger().setLevel(cfg.log_level.upper())
    manifest = run_experiment(cfg, seed_override=args.seed_override)
    print(manifest.summary_text)
    print(f"Outputs: {manifest.run_dir}")
    if manifest.failed_models:
        failed = ", ".join(f"{model} (seed {seed})" for seed, model in manifest.failed_models)
        print(f"Failed models: {failed}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    comparison = compare_report([load_report(path) for path in args.reports])
    print(comparison.render_text())
    if args.json:
        path = Path(args.json)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(comparison.to_dict(), indent=2), encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mammo",
        description="Mammographic mass severity toolkit: audit, impute, split, train, evaluate, run, compare",
    )
    parser.add_argument("--log-level", default=None,
                        help=f"logging level (default: ${ENV_LOG_LEVEL} or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="summarize attribute values and missing cells")
    p.add_argument("data", help="UCI-format data file")
    p.add_argument("--json", default=None, help="also write the audit as JSON (default: None)")
    p.set_defaults(handler=cmd_audit)

    p = sub.add_parser("impute", help="fill missing cells with C&RT predictions")
    p.add_argument("data", help="UCI-format data file")
    p.add_argument("out", help="output data file")
    p.add_argument("--log", default=None, help="write the imputation log as JSON (default: None)")
    p.add_argument("--config", default=None, help="JSON experiment config (default: None)")
    for spec in IMPUTE_FLAGS:
        spec.add_to(p)
    p.set_defaults(handler=cmd_impute)

    p = sub.add_parser("split", help="partition a data file into train and test files")
    p.add_argument("data", help="UCI-format data file")
    p.add_argument("train_out", help="training output file")
    p.add_argument("test_out", help="test output file")
    p.add_argument("--seed", type=int, default=None, help="partition seed (default: partition.seed of the config)")
    p.add_argument("--config", default=None, help="JSON experiment config (default: None)")
    for spec in SPLIT_FLAGS:
        spec.add_to(p)
    p.set_defaults(handler=cmd_split)

    p = sub.add_parser("train", help="train one model on a complete data file")
    p.add_argument("--model", required=True, choices=MODEL_NAMES, help="model kind")
    p.add_argument("data", help="complete (imputed) training file")
    p.add_argument("model_out", help="output model file (JSON)")
    p.add_argument("--seed", type=int, default=None, help="training seed (default: mlp.train.seed of the config)")
    p.add_argument("--config", default=None, help="JSON experiment config (default: None)")
    for spec in MODEL_FLAGS:
        spec.add_to(p)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", help="score a data file with a saved model")
    p.add_argument("model", help="model file written by train")
    p.add_argument("data", help="complete data file")
    p.add_argument("--partition", default="test", help="partition name recorded in the report (default: test)")
    p.add_argument("--report", default=None, help="write the report as JSON (default: None)")
    p.add_argument("--curves-dir", default=None, help="write ROC and gain CSVs here (default: None)")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("run", help="run the full experiment")
    p.add_argument("--config", default=None, help="JSON experiment config (default: None)")
    p.add_argument("--seed-override", type=int, default=None, help="run only this seed (default: None)")
    for spec in RUN_FLAGS + MODEL_FLAGS:
        spec.add_to(p)
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("compare", help="compare saved evaluation reports")
    p.add_argument("reports", nargs="+", help="report JSON files")
    p.add_argument("--json", default=None, help="write the comparison as JSON (default: None)")
    p.set_defaults(handler=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_ERROR

    setup_logging(args.log_level or os.getenv(ENV_LOG_LEVEL) or "INFO")
    try:
        return args.handler(args)
    except (MammoError, OSError, ValueError) as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error ({args.command}): {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
