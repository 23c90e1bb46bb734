"""
Experiment Runner
Load, audit and impute once, then per seed partition, encode, train, evaluate and write artifacts
"""

import hashlib
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from classifiers import mlp
from classifiers.chaid import grow_tree
from classifiers.svm import train_svm
from dataset.audit import audit
from dataset.encoding import EncodingConfig, FeatureEncoder, FeatureMatrix
from dataset.loader import load_dataset
from dataset.schema import Dataset
from evaluation.metrics import summarize
from evaluation.reports import EvalReport, compare_report, evaluate
from imputation.imputer import CartImputer
from pipeline.artifacts import TrainedModel, save_model
from pipeline.partition import PartitionSpec, split, split_indices
from utils.config import ExperimentConfig, add_file_handler
from utils.errors import ConfigError, MammoError, StageError

logger = logging.getLogger(__name__)

SUMMARY_METRICS = ("accuracy", "sensitivity", "specificity", "auc")


class SeedLoggerAdapter(logging.LoggerAdapter):
    """Prefixes every message with the seed it belongs to"""

    def process(self, msg, kwargs):
        return f"[seed {self.extra['seed']}] {msg}", kwargs


def _normalize(value: Any) -> Any:
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, dict):
        return {str(k): _normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    return str(value)


def fingerprint(cfg: ExperimentConfig) -> str:
    """
    Content hash of the result-relevant configuration

    Args:
        cfg: experiment configuration

    Returns:
        64 lowercase hex characters; independent of key order and of int/float spelling
    """
    canonical = json.dumps(_normalize(cfg.canonical_dict()), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@contextmanager
def _stage(name: str):
    try:
        yield
    except (MammoError, OSError, ValueError) as e:
        logger.error(f"Stage '{name}' failed: {e}")
        raise StageError(name, str(e)) from e


def _subset(fm: FeatureMatrix, indices: List[int]) -> FeatureMatrix:
    return FeatureMatrix(rows=fm.rows[indices], labels=fm.labels[indices], columns=fm.columns)


def train_model(kind: str, train: Dataset, cfg: ExperimentConfig, seed: int) -> TrainedModel:
    """
    Fit one classifier on an imputed training partition

    Args:
        kind: "chaid", "mlp" or "svm"
        train: complete training dataset
        cfg: experiment configuration supplying the hyperparameters
        seed: run seed; drives the MLP initialization and its validation carve-out

    Returns:
        TrainedModel
    """
    include = cfg.data.include_non_predictive
    if kind == "chaid":
        tree = grow_tree(train, cfg.chaid, include_non_predictive=include)
        return TrainedModel(kind, tree, train.attribute_names, details=tree.summary())

    encoder = FeatureEncoder(config=EncodingConfig(include_non_predictive=include)).fit(train)
    fm = encoder.transform(train)

    if kind == "mlp":
        train_cfg = replace(cfg.mlp.train, seed=seed)
        carve = PartitionSpec(1.0 - train_cfg.validation_fraction, stratified=True, seed=seed)
        fit_idx, valid_idx = split_indices(fm.labels, carve)
        fit_fm, valid_fm = _subset(fm, fit_idx), _subset(fm, valid_idx)
        result = mlp.train(fit_fm, valid_fm, train_cfg)
        network = result.network
        details: Dict[str, Any] = {
            "initial_topology": list(network.layer_sizes),
            "best_epoch": result.best_epoch,
            "epochs_run": len(result.history),
            "stopped_by": result.stopped_by,
        }
        if cfg.mlp.prune.enabled:
            pruned = mlp.prune(network, fit_fm, valid_fm, cfg.mlp.prune, train_cfg)
            network = pruned.network
            details["prune_rounds_accepted"] = pruned.accepted_rounds
        details["topology"] = list(network.layer_sizes)
        return TrainedModel(kind, network, train.attribute_names, encoder, details)

    if kind == "svm":
        model = train_svm(fm, cfg.svm.solver, cfg.svm.kernel)
        details = {"support_vectors": int(len(model.alphas)), "converged": model.converged,
                   "full_passes": model.full_passes}
        return TrainedModel(kind, model, train.attribute_names, encoder, details)

    raise ConfigError(f"unknown model '{kind}'")


@dataclass
class ModelRun:
    """Outcome of one model on one seed"""
    model: str
    status: str = "ok"
    model_path: Optional[str] = None
    report_paths: List[str] = field(default_factory=list)
    curve_paths: List[str] = field(default_factory=list)
    started_at: Optional[str] = None
    duration_seconds: Optional[float] = None
    error: Optional[str] = None


@dataclass
class SeedRun:
    seed: int
    train_size: int
    test_size: int
    class_sizes: Dict[str, Dict[str, int]]
    models: List[ModelRun] = field(default_factory=list)


@dataclass
class RunManifest:
    """Index of everything a run wrote"""
    fingerprint: str
    run_dir: str
    partition: Dict[str, Any]
    seed_override: Optional[int] = None
    started_at: Optional[str] = None
    finished_at: Optional[str] = None
    seeds: List[SeedRun] = field(default_factory=list)
    summary_path: Optional[str] = None
    summary_text: str = ""

    @property
    def failed_models(self) -> List[Tuple[int, str]]:
        return [(s.seed, m.model) for s in self.seeds for m in s.models if m.status != "ok"]

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload.pop("summary_text")
        return payload

    def write_json(self, path: Path) -> Path:
        path.write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")
        return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_json(path: Path, payload: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    return path


def aggregate(reports: List[EvalReport]) -> Dict[str, Any]:
    """
    Mean and sample standard deviation of each measure over seeds

    Args:
        reports: per-seed reports of any models and partitions

    Returns:
        {model: {partition: {measure: {mean, std, n}}}} plus an AUC ranking on test means
    """
    grouped: Dict[str, Dict[str, List[EvalReport]]] = {}
    for r in reports:
        grouped.setdefault(r.model, {}).setdefault(r.partition, []).append(r)

    models: Dict[str, Any] = {}
    for model, partitions in grouped.items():
        models[model] = {}
        for partition, items in partitions.items():
            models[model][partition] = {
                "accuracy": summarize([r.metrics.accuracy for r in items]),
                "sensitivity": summarize([r.metrics.sensitivity for r in items]),
                "specificity": summarize([r.metrics.specificity for r in items]),
                "auc": summarize([r.auc for r in items]),
            }

    ranking = sorted(
        ((m, p["test"]["auc"]["mean"]) for m, p in models.items()
         if "test" in p and p["test"]["auc"]["mean"] is not None),
        key=lambda item: (-item[1], item[0]),
    )
    return {"models": models, "auc_ranking": [{"model": m, "mean_auc": a} for m, a in ranking]}


def render_summary(summary: Dict[str, Any]) -> str:
    """Mean +/- std table, one row per model and partition"""
    rows = []
    for model, partitions in summary["models"].items():
        for partition in ("train", "test"):
            if partition not in partitions:
                continue
            row = {"model": model, "partition": partition}
            for measure in SUMMARY_METRICS:
                stats = partitions[partition][measure]
                if stats["mean"] is None:
                    row[measure] = "undefined"
                elif measure == "auc":
                    row[measure] = f"{stats['mean']:.3f} ± {stats['std']:.3f}"
                else:
                    row[measure] = f"{100 * stats['mean']:.2f}% ± {100 * stats['std']:.2f}"
            rows.append(row)
    if not rows:
        return "No model produced a report"
    lines = [f"Seed-averaged results over {summary['seed_count']} seed(s)", pd.DataFrame(rows).to_string(index=False)]
    if summary["auc_ranking"]:
        ranking = ", ".join(f"{r['model']} ({r['mean_auc']:.3f})" for r in summary["auc_ranking"])
        lines.append(f"AUC ranking (test): {ranking}")
    return "\n".join(lines)


def _run_model(kind: str, train: Dataset, test: Dataset, cfg: ExperimentConfig, seed: int,
               seed_dir: Path, fp: str, log: logging.LoggerAdapter) -> Tuple[ModelRun, List[EvalReport]]:
    run = ModelRun(model=kind, started_at=_now())
    started = time.perf_counter()
    reports: List[EvalReport] = []
    try:
        trained = train_model(kind, train, cfg, seed)
        run.model_path = str(save_model(trained, seed_dir / "models" / f"{kind}.json", fp))
        for partition, ds in (("train", train), ("test", test)):
            preds, scores = trained.predict(ds)
            report = evaluate(kind, partition, preds, scores, ds.labels())
            run.report_paths.append(str(report.write_json(seed_dir / "reports" / f"{kind}_{partition}.json")))
            run.curve_paths.extend(str(p) for p in report.write_curves(seed_dir / "curves"))
            reports.append(report)
            log.info(f"{kind} {partition}: accuracy {report.metrics.accuracy:.4f}"
                     + (f", AUC {report.auc:.4f}" if report.auc is not None else ""))
    except Exception as e:
        log.exception(f"{kind} failed: {e}")
        run.status = "failed"
        run.error = f"{type(e).__name__}: {e}"
        reports = []
    run.duration_seconds = round(time.perf_counter() - started, 3)
    return run, reports


def run_experiment(cfg: ExperimentConfig, seed_override: Optional[int] = None) -> RunManifest:
    """
    Execute the full pipeline

    Args:
        cfg: experiment configuration; data.path is required
        seed_override: run this single seed instead of cfg.seeds, writing under <fingerprint>/seed_<n>/

    Returns:
        RunManifest; per-model failures are recorded there, data and config errors raise StageError
    """
    if not cfg.data.path:
        raise StageError("config", "data.path is not set (config file, --data or MAMMO_DATA_PATH)")

    fp = fingerprint(cfg)
    run_dir = Path(cfg.output_dir) / fp
    # single-seed runs get their own directory beside the full run
    if seed_override is not None:
        run_dir = run_dir / f"seed_{seed_override}"
    run_dir.mkdir(parents=True, exist_ok=True)
    seeds = (seed_override,) if seed_override is not None else cfg.seeds
    manifest = RunManifest(
        fingerprint=fp,
        run_dir=str(run_dir),
        partition={"train_fraction": cfg.partition.train_fraction, "stratified": cfg.partition.stratified},
        seed_override=seed_override,
        started_at=_now(),
    )
    handler = add_file_handler(run_dir / "run.log")
    try:
        logger.info(f"Run {fp[:12]}: models {', '.join(cfg.models)}, seeds {list(seeds)}")
        _write_json(run_dir / "config.json", cfg.to_dict())

        with _stage("load"):
            raw = load_dataset(cfg.data.path)
            if len(raw) == 0:
                raise ValueError(f"{cfg.data.path} holds no records")
        with _stage("audit"):
            report = audit(raw)
            report.write_json(run_dir / "audit.json")
            logger.info(f"Audit: {report.record_count} records, {report.total_missing} missing cells")
        with _stage("impute"):
            imputer = CartImputer(cfg.imputation.params(), cfg.imputation.include_label)
            data = imputer.fit_transform(raw)
            imputer.write_log(run_dir / "imputation_log.json")

        all_reports: List[EvalReport] = []
        for seed in seeds:
            log = SeedLoggerAdapter(logger, {"seed": seed})
            seed_dir = run_dir / str(seed)
            with _stage(f"partition (seed {seed})"):
                train, test = split(data, replace(cfg.partition, seed=seed))
            train_counts = train.class_counts()
            test_counts = test.class_counts()
            seed_run = SeedRun(
                seed=seed,
                train_size=len(train),
                test_size=len(test),
                class_sizes={
                    "train": {k.name.lower(): v for k, v in train_counts.items()},
                    "test": {k.name.lower(): v for k, v in test_counts.items()},
                },
            )
            log.info(f"Partition: {len(train)} train / {len(test)} test")

            seed_reports: List[EvalReport] = []
            for kind in cfg.models:
                model_run, reports = _run_model(kind, train, test, cfg, seed, seed_dir, fp, log)
                seed_run.models.append(model_run)
                seed_reports.extend(reports)
            if seed_reports:
                comparison = compare_report(seed_reports)
                _write_json(seed_dir / "reports" / "comparison.json", comparison.to_dict())
                (seed_dir / "reports" / "comparison.txt").write_text(comparison.render_text() + "\n",
                                                                   encoding="utf-8")
            all_reports.extend(seed_reports)
            manifest.seeds.append(seed_run)

        summary = aggregate(all_reports)
        summary["fingerprint"] = fp
        summary["seed_count"] = len(seeds)
        summary["seeds"] = list(seeds)
        manifest.summary_path = str(_write_json(run_dir / "summary.json", summary))
        manifest.summary_text = render_summary(summary)
        manifest.finished_at = _now()
        manifest.write_json(run_dir / "manifest.json")

        if manifest.failed_models:
            logger.warning(f"Run finished with failed models: {manifest.failed_models}")
        else:
            logger.info(f"Run finished: {run_dir}")
        return manifest
    finally:
        logging.getLogger().removeHandler(handler)
        handler.close()
