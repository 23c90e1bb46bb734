"""
Tests for partitioning, model artifacts and the experiment runner
"""

import json

import numpy as np
import pytest

from dataset.loader import load_dataset, write_dataset
from dataset.schema import Severity
from pipeline import experiment
from pipeline.artifacts import load_model, save_model
from pipeline.experiment import fingerprint, run_experiment, train_model
from pipeline.partition import PartitionSpec, class_allocation, split, split_indices
from utils.config import ExperimentConfig, load_config
from utils.errors import ConfigError, ModelFormatError, StageError

from conftest import ROOT

FAST_MODELS = {
    "mlp": {"train": {"max_epochs": 15, "patience": 5, "hidden_layers": [4]}, "prune": {"enabled": False}},
    "svm": {"solver": {"c": 1, "max_passes": 20}},
}

# (centre, half-width) of the seed-averaged bands the UCI replication config must land in
UCI_BANDS = {
    "chaid": {
        ("test", "accuracy"): (0.781, 0.03),
        ("train", "accuracy"): (0.814, 0.03),
        ("test", "auc"): (0.808, 0.05),
    },
    "mlp": {("test", "accuracy"): (0.806, 0.03), ("test", "auc"): (0.812, 0.05)},
    "svm": {
        ("test", "accuracy"): (0.8125, 0.03),
        ("train", "accuracy"): (0.837, 0.03),
        ("test", "sensitivity"): (0.846, 0.04),
        ("test", "specificity"): (0.783, 0.04),
        ("test", "auc"): (0.831, 0.05),
    },
}


def _fast_config(**payload) -> ExperimentConfig:
    merged = dict(FAST_MODELS)
    merged.update(payload)
    return ExperimentConfig.from_dict(merged)


@pytest.fixture
def data_file(tmp_path, incomplete_dataset):
    return write_dataset(incomplete_dataset, tmp_path / "masses.data")


class TestPartition:

    def test_uci_allocation(self):
        allocation = class_allocation({0: 516, 1: 445}, 0.7)
        assert allocation == {0: 361, 1: 312}
        assert sum(allocation.values()) == 673

    def test_stratified_sizes(self):
        labels = [0] * 516 + [1] * 445
        train, test = split_indices(labels, PartitionSpec(seed=3))
        assert len(train) == 673
        assert len(test) == 288
        assert sum(labels[i] for i in train) == 312

    def test_disjoint_and_complete(self, complete_dataset):
        for seed in range(5):
            train_idx, test_idx = split_indices(complete_dataset.labels(), PartitionSpec(seed=seed))
            assert set(train_idx).isdisjoint(test_idx)
            assert sorted(train_idx + test_idx) == list(range(len(complete_dataset)))

    def test_class_proportions_preserved(self, complete_dataset):
        train, test = split(complete_dataset, PartitionSpec(seed=1))
        total = complete_dataset.class_counts()
        for side in (train, test):
            counts = side.class_counts()
            share = counts[Severity.MALIGNANT] / len(side)
            assert abs(share - total[Severity.MALIGNANT] / len(complete_dataset)) <= 1.0 / len(side)

    def test_seed_determinism(self, complete_dataset):
        a = split_indices(complete_dataset.labels(), PartitionSpec(seed=7))
        b = split_indices(complete_dataset.labels(), PartitionSpec(seed=7))
        c = split_indices(complete_dataset.labels(), PartitionSpec(seed=8))
        assert a == b
        assert a != c

    def test_unstratified_size(self):
        train, test = split_indices([0, 1] * 10, PartitionSpec(train_fraction=0.5, stratified=False))
        assert len(train) == 10

    def test_positions_ascending(self, complete_dataset):
        train_idx, test_idx = split_indices(complete_dataset.labels(), PartitionSpec(seed=0))
        assert train_idx == sorted(train_idx)
        assert test_idx == sorted(test_idx)

    def test_errors(self):
        with pytest.raises(ValueError, match="empty"):
            split_indices([], PartitionSpec())
        with pytest.raises(ValueError, match="at least 2"):
            split_indices([0, 0, 0, 1], PartitionSpec())
        with pytest.raises(ValueError):
            split_indices([0, 1, 0, 1], PartitionSpec(train_fraction=0.01, stratified=False))
        for fraction in (0.0, 1.0, 1.5):
            with pytest.raises(ConfigError):
                PartitionSpec(train_fraction=fraction)


class TestFingerprint:

    def test_hex_digest(self):
        value = fingerprint(ExperimentConfig())
        assert len(value) == 64
        assert all(ch in "0123456789abcdef" for ch in value)

    def test_key_order_and_number_spelling(self):
        a = ExperimentConfig.from_dict({"svm": {"solver": {"c": 10, "max_passes": 10}}, "seeds": [0, 1]})
        b = ExperimentConfig.from_dict({"seeds": [0, 1], "svm": {"solver": {"max_passes": 10, "c": 10.0}}})
        assert fingerprint(a) == fingerprint(b)

    def test_result_fields_change_it(self):
        base = fingerprint(ExperimentConfig())
        assert fingerprint(ExperimentConfig.from_dict({"svm": {"kernel": {"degree": 3}}})) != base
        assert fingerprint(ExperimentConfig.from_dict({"seeds": [0]})) != base

    def test_output_location_does_not(self):
        base = fingerprint(ExperimentConfig())
        assert fingerprint(ExperimentConfig(output_dir="elsewhere", log_level="DEBUG")) == base

    def test_single_run_seeds_do_not(self):
        base = fingerprint(ExperimentConfig())
        assert fingerprint(ExperimentConfig.from_dict({"partition": {"seed": 5}})) == base
        assert fingerprint(ExperimentConfig.from_dict({"mlp": {"train": {"seed": 5}}})) == base


class TestArtifacts:

    @pytest.mark.parametrize("kind", ["chaid", "mlp", "svm"])
    def test_saved_model_predicts_identically(self, kind, complete_dataset, tmp_path):
        train, test = split(complete_dataset, PartitionSpec(seed=0))
        trained = train_model(kind, train, _fast_config(), seed=0)
        restored = load_model(save_model(trained, tmp_path / f"{kind}.json", "f" * 64))
        preds, scores = trained.predict(test)
        restored_preds, restored_scores = restored.predict(test)
        assert np.array_equal(preds, restored_preds)
        assert np.allclose(scores, restored_scores, atol=1e-12)
        assert set(np.unique(preds)) <= {0, 1}

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_model(tmp_path / "absent.json")

    def test_not_json(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("not json", encoding="utf-8")
        with pytest.raises(ModelFormatError):
            load_model(path)

    @pytest.mark.parametrize("field,value", [("artifact_version", 99), ("kind", "forest"), ("encoder", None)])
    def test_bad_header(self, field, value, complete_dataset, tmp_path):
        trained = train_model("svm", complete_dataset, _fast_config(), seed=0)
        path = save_model(trained, tmp_path / "svm.json")
        payload = json.loads(path.read_text(encoding="utf-8"))
        payload[field] = value
        path.write_text(json.dumps(payload), encoding="utf-8")
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_schema_mismatch(self, complete_dataset, tmp_path):
        trained = train_model("chaid", complete_dataset, _fast_config(), seed=0)
        trained.attribute_names = ["other"] * 5
        with pytest.raises(ModelFormatError):
            trained.predict(complete_dataset)

    def test_unknown_kind(self, complete_dataset):
        with pytest.raises(ConfigError):
            train_model("forest", complete_dataset, _fast_config(), seed=0)


class TestRunExperiment:

    def test_layout(self, data_file, tmp_path):
        cfg = _fast_config(data={"path": str(data_file)}, models=["chaid", "svm"], seeds=[0, 1],
                           output_dir=str(tmp_path / "runs"))
        manifest = run_experiment(cfg)
        run_dir = tmp_path / "runs" / fingerprint(cfg)
        assert manifest.run_dir == str(run_dir)
        for name in ("config.json", "audit.json", "imputation_log.json", "summary.json", "manifest.json",
                     "run.log"):
            assert (run_dir / name).exists(), name
        for seed in ("0", "1"):
            for kind in ("chaid", "svm"):
                assert (run_dir / seed / "models" / f"{kind}.json").exists()
                for partition in ("train", "test"):
                    assert (run_dir / seed / "reports" / f"{kind}_{partition}.json").exists()
                    assert (run_dir / seed / "curves" / f"{kind}_{partition}_roc.csv").exists()
            assert (run_dir / seed / "reports" / "comparison.txt").exists()
        assert manifest.failed_models == []
        assert [s.seed for s in manifest.seeds] == [0, 1]
        assert manifest.seeds[0].train_size + manifest.seeds[0].test_size == 120

        summary = json.loads((run_dir / "summary.json").read_text(encoding="utf-8"))
        assert summary["seed_count"] == 2
        assert summary["models"]["svm"]["test"]["accuracy"]["n"] == 2
        assert "Seed-averaged results over 2 seed(s)" in manifest.summary_text

    def test_imputation_runs_once(self, data_file, tmp_path, monkeypatch):
        calls = []
        original = experiment.CartImputer.fit_transform

        def counting(self, ds):
            calls.append(len(ds))
            return original(self, ds)

        monkeypatch.setattr(experiment.CartImputer, "fit_transform", counting)
        cfg = _fast_config(data={"path": str(data_file)}, models=["chaid"], seeds=[0, 1, 2],
                           output_dir=str(tmp_path / "runs"))
        run_experiment(cfg)
        assert calls == [120]
        log = json.loads((tmp_path / "runs" / fingerprint(cfg) / "imputation_log.json").read_text(encoding="utf-8"))
        assert len(log["filled"]) == 24

    def test_reruns_are_identical(self, data_file, tmp_path):
        reports = []
        for name in ("a", "b"):
            cfg = _fast_config(data={"path": str(data_file)}, models=["chaid", "mlp", "svm"], seeds=[4],
                               output_dir=str(tmp_path / name))
            manifest = run_experiment(cfg)
            seed_dir = tmp_path / name / manifest.fingerprint / "4"
            reports.append([(seed_dir / folder / f"{kind}{suffix}.json").read_bytes()
                            for kind in ("chaid", "mlp", "svm")
                            for folder, suffix in (("reports", "_train"), ("reports", "_test"), ("models", ""))])
        assert reports[0] == reports[1]

    def test_seed_override(self, data_file, tmp_path):
        cfg = _fast_config(data={"path": str(data_file)}, models=["chaid"], seeds=[0, 1],
                           output_dir=str(tmp_path / "runs"))
        manifest = run_experiment(cfg, seed_override=9)
        assert [s.seed for s in manifest.seeds] == [9]
        assert manifest.seed_override == 9
        assert manifest.run_dir == str(tmp_path / "runs" / fingerprint(cfg) / "seed_9")

    def test_seed_override_keeps_full_run(self, data_file, tmp_path):
        cfg = _fast_config(data={"path": str(data_file)}, models=["chaid"], seeds=[0, 1],
                           output_dir=str(tmp_path / "runs"))
        full_dir = tmp_path / "runs" / fingerprint(cfg)
        run_experiment(cfg)
        before = (full_dir / "summary.json").read_bytes()
        run_experiment(cfg, seed_override=1)
        assert (full_dir / "summary.json").read_bytes() == before
        assert json.loads(before)["seed_count"] == 2
        single = json.loads((full_dir / "seed_1" / "summary.json").read_text(encoding="utf-8"))
        assert single["seeds"] == [1]

    def test_failed_model_is_recorded(self, data_file, tmp_path, monkeypatch):
        def broken(*args, **kwargs):
            raise RuntimeError("solver exploded")

        monkeypatch.setattr(experiment, "train_svm", broken)
        cfg = _fast_config(data={"path": str(data_file)}, models=["chaid", "svm"], seeds=[0],
                           output_dir=str(tmp_path / "runs"))
        manifest = run_experiment(cfg)
        assert manifest.failed_models == [(0, "svm")]
        failed = manifest.seeds[0].models[1]
        assert failed.status == "failed"
        assert "solver exploded" in failed.error
        assert manifest.seeds[0].models[0].status == "ok"

    def test_missing_data_path(self, tmp_path):
        with pytest.raises(StageError) as info:
            run_experiment(_fast_config(output_dir=str(tmp_path)))
        assert info.value.stage == "config"

    def test_unreadable_data(self, tmp_path):
        cfg = _fast_config(data={"path": str(tmp_path / "absent.data")}, output_dir=str(tmp_path / "runs"))
        with pytest.raises(StageError) as info:
            run_experiment(cfg)
        assert info.value.stage == "load"

    def test_empty_data(self, tmp_path):
        path = tmp_path / "empty.data"
        path.write_text("", encoding="utf-8")
        cfg = _fast_config(data={"path": str(path)}, output_dir=str(tmp_path / "runs"))
        with pytest.raises(StageError, match="no records"):
            run_experiment(cfg)

    def test_seed_averaged_summary_for_every_model(self, data_file, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "data": {"path": str(data_file)},
            "mlp": {"train": {"max_epochs": 60, "patience": 20, "hidden_layers": [6]},
                    "prune": {"max_rounds": 2, "retrain_epochs": 5}},
            "svm": {"solver": {"c": 1}},
            "seeds": [0, 1, 2],
            "output_dir": str(tmp_path / "runs"),
        })
        manifest = run_experiment(cfg)
        assert manifest.failed_models == []
        summary = json.loads((tmp_path / "runs" / manifest.fingerprint / "summary.json").read_text(encoding="utf-8"))
        for kind in ("chaid", "mlp", "svm"):
            test = summary["models"][kind]["test"]
            assert test["accuracy"]["n"] == 3
            assert test["accuracy"]["mean"] > 0.7, kind
            assert test["auc"]["mean"] > 0.75, kind


@pytest.mark.slow
class TestUciRun:

    def test_partition_sizes(self, uci_path):
        raw = load_dataset(uci_path)
        train, test = split(raw, PartitionSpec(seed=0))
        assert (len(train), len(test)) == (673, 288)
        assert train.class_counts() == {Severity.BENIGN: 361, Severity.MALIGNANT: 312}

    def test_single_seed_run(self, uci_path, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "data": {"path": str(uci_path)},
            "models": ["chaid", "svm"],
            "seeds": [0],
            "output_dir": str(tmp_path / "runs"),
        })
        manifest = run_experiment(cfg)
        assert manifest.failed_models == []
        summary = json.loads((tmp_path / "runs" / manifest.fingerprint / "summary.json").read_text(encoding="utf-8"))
        for kind in ("chaid", "svm"):
            test = summary["models"][kind]["test"]
            assert test["accuracy"]["mean"] > 0.7
            assert test["auc"]["mean"] > 0.75

    def test_replication_bands(self, uci_path, tmp_path):
        cfg = load_config(ROOT / "configs" / "uci_replication.json",
                          overrides={"data.path": str(uci_path), "output_dir": str(tmp_path / "runs")})
        assert len(cfg.seeds) >= 10
        manifest = run_experiment(cfg)
        assert manifest.failed_models == []
        summary = json.loads((tmp_path / "runs" / manifest.fingerprint / "summary.json").read_text(encoding="utf-8"))
        for kind, bands in UCI_BANDS.items():
            for (partition, measure), (centre, width) in bands.items():
                mean = summary["models"][kind][partition][measure]["mean"]
                assert abs(mean - centre) <= width, f"{kind} {partition} {measure}: {mean:.4f}"
