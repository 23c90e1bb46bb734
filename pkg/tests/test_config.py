"""
Tests for configuration loading and precedence
"""

import json
import logging

import pytest

from utils.config import (
    ConfigManager,
    ExperimentConfig,
    add_file_handler,
    apply_overrides,
    load_config,
    setup_logging,
)
from utils.errors import ConfigError

from conftest import ROOT


def _write(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


class TestDefaults:

    def test_documented_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.partition.train_fraction == 0.7
        assert cfg.partition.stratified
        assert (cfg.chaid.alpha_merge, cfg.chaid.alpha_split, cfg.chaid.max_depth) == (0.1, 0.1, 5)
        assert cfg.mlp.train.hidden_layers == (30, 18)
        assert (cfg.mlp.train.learning_rate, cfg.mlp.train.momentum) == (0.1, 0.9)
        assert (cfg.svm.solver.c, cfg.svm.kernel.degree, cfg.svm.kernel.coef_r) == (10.0, 4, 0.1)
        assert cfg.models == ("chaid", "mlp", "svm")
        assert cfg.seeds == tuple(range(10))
        assert cfg.data.path is None

    def test_dict_round_trip(self):
        cfg = ExperimentConfig.from_dict({"svm": {"kernel": {"degree": 3}}, "seeds": [5]})
        assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg

    def test_canonical_dict_drops_location(self):
        payload = ExperimentConfig().canonical_dict()
        assert "output_dir" not in payload
        assert "log_level" not in payload
        assert "seed" not in payload["partition"]
        assert "seed" not in payload["mlp"]["train"]

    def test_shipped_config_loads(self):
        cfg = load_config(ROOT / "configs" / "uci_replication.json")
        assert cfg == ExperimentConfig(data=cfg.data)


class TestValidation:

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="valid keys"):
            ExperimentConfig.from_dict({"modles": ["svm"]})

    def test_unknown_section_key(self):
        with pytest.raises(ConfigError, match="alpha_merge"):
            ExperimentConfig.from_dict({"chaid": {"alpha": 0.2}})

    @pytest.mark.parametrize("payload", [
        {"models": []},
        {"models": ["svm", "svm"]},
        {"models": ["forest"]},
        {"seeds": []},
        {"log_level": "CHATTY"},
        {"chaid": {"alpha_merge": 0}},
        {"svm": {"kernel": {"gamma": -1}}},
        {"imputation": {"min_leaf": 0}},
        {"partition": {"train_fraction": 1.2}},
    ])
    def test_invalid_values(self, payload):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(payload)

    def test_section_must_be_object(self):
        with pytest.raises(ConfigError, match="must be an object"):
            ExperimentConfig.from_dict({"svm": {"solver": 3}})

    def test_models_normalized(self):
        assert ExperimentConfig(models=("SVM", "Chaid")).models == ("svm", "chaid")


class TestPrecedence:

    def test_file_over_defaults(self, tmp_path):
        path = _write(tmp_path / "cfg.json", {"seeds": [1, 2], "svm": {"solver": {"c": 2}}})
        cfg = load_config(path)
        assert cfg.seeds == (1, 2)
        assert cfg.svm.solver.c == 2

    def test_environment_over_file(self, tmp_path, monkeypatch):
        path = _write(tmp_path / "cfg.json", {"data": {"path": "from_file.data"}, "output_dir": "file_runs"})
        monkeypatch.setenv("MAMMO_DATA_PATH", "from_env.data")
        monkeypatch.setenv("MAMMO_LOG_LEVEL", "DEBUG")
        cfg = load_config(path)
        assert cfg.data.path == "from_env.data"
        assert cfg.output_dir == "file_runs"
        assert cfg.log_level == "DEBUG"

    def test_overrides_over_environment(self, monkeypatch):
        monkeypatch.setenv("MAMMO_OUTPUT_DIR", "env_runs")
        cfg = load_config(overrides={"output_dir": "cli_runs", "svm.kernel.degree": 2, "chaid.max_depth": None})
        assert cfg.output_dir == "cli_runs"
        assert cfg.svm.kernel.degree == 2
        assert cfg.chaid.max_depth == 5

    def test_dotenv_file(self, tmp_path, monkeypatch):
        (tmp_path / ".env").write_text("MAMMO_OUTPUT_DIR=dotenv_runs\n", encoding="utf-8")
        # registered so the value load_dotenv exports is undone after the test
        monkeypatch.setenv("MAMMO_OUTPUT_DIR", "")
        monkeypatch.delenv("MAMMO_OUTPUT_DIR")
        cfg = ConfigManager(env_file=str(tmp_path / ".env")).experiment
        assert cfg.output_dir == "dotenv_runs"

    def test_unknown_override(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            apply_overrides(ExperimentConfig(), {"svm.kernel.sigma": 1.0})
        with pytest.raises(ConfigError, match="unknown config section"):
            apply_overrides(ExperimentConfig(), {"forest.depth": 3})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(path)
        _write(path, [1, 2])
        with pytest.raises(ConfigError, match="JSON object"):
            load_config(path)


class TestLogging:

    def test_setup_and_file_handler(self, tmp_path):
        root = setup_logging("WARNING")
        assert root.level == logging.WARNING
        handler = add_file_handler(tmp_path / "logs" / "run.log")
        try:
            logging.getLogger("pipeline.experiment").warning("partition ready")
            handler.flush()
            text = (tmp_path / "logs" / "run.log").read_text(encoding="utf-8")
            assert " - pipeline.experiment - WARNING - partition ready" in text
        finally:
            root.removeHandler(handler)
            handler.close()
