"""
Configuration Management for Severity Experiments
Dataclass sections with defaults, JSON config files, .env loading and environment overrides
"""

import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from classifiers.chaid import ChaidParams
from classifiers.mlp import MlpTrainConfig, PruneConfig
from classifiers.svm import KernelParams, SvmParams
from imputation.cart import CartParams
from pipeline.partition import PartitionSpec
from utils.errors import ConfigError

MODEL_NAMES = ("chaid", "mlp", "svm")
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

ENV_LOG_LEVEL = "MAMMO_LOG_LEVEL"
ENV_OUTPUT_DIR = "MAMMO_OUTPUT_DIR"
ENV_DATA_PATH = "MAMMO_DATA_PATH"


@dataclass
class DataConfig:
    """Input file and encoding options"""
    path: Optional[str] = None
    include_non_predictive: bool = False


@dataclass
class ImputationConfig:
    """C&RT imputation settings"""
    max_depth: int = 5
    min_leaf: int = 5
    min_impurity_decrease: float = 1e-7
    include_label: bool = False

    def __post_init__(self):
        self.params()

    def params(self) -> CartParams:
        return CartParams(self.max_depth, self.min_leaf, self.min_impurity_decrease)


@dataclass
class MlpConfig:
    """Training and pruning of the perceptron"""
    train: MlpTrainConfig = field(default_factory=MlpTrainConfig)
    prune: PruneConfig = field(default_factory=PruneConfig)


@dataclass
class SvmConfig:
    """Solver and kernel of the support vector machine"""
    solver: SvmParams = field(default_factory=SvmParams)
    kernel: KernelParams = field(default_factory=KernelParams)


@dataclass
class ExperimentConfig:
    """Everything one run needs; per-seed partitions reuse partition.train_fraction and stratified"""
    data: DataConfig = field(default_factory=DataConfig)
    imputation: ImputationConfig = field(default_factory=ImputationConfig)
    partition: PartitionSpec = field(default_factory=PartitionSpec)
    chaid: ChaidParams = field(default_factory=ChaidParams)
    mlp: MlpConfig = field(default_factory=MlpConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    models: Tuple[str, ...] = MODEL_NAMES
    seeds: Tuple[int, ...] = tuple(range(10))
    output_dir: str = "runs"
    log_level: str = "INFO"

    def __post_init__(self):
        self.models = tuple(str(m).lower() for m in self.models)
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.models:
            raise ConfigError(f"at least one model must be selected; valid models: {', '.join(MODEL_NAMES)}")
        unknown = [m for m in self.models if m not in MODEL_NAMES]
        if unknown:
            raise ConfigError(f"unknown model(s) {', '.join(unknown)}; valid models: {', '.join(MODEL_NAMES)}")
        if len(set(self.models)) != len(self.models):
            raise ConfigError(f"duplicate model names in {self.models}")
        if not self.seeds:
            raise ConfigError("seed list must not be empty")
        if getattr(logging, str(self.log_level).upper(), None) is None:
            raise ConfigError(f"unknown log level '{self.log_level}'")

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["models"] = list(self.models)
        payload["seeds"] = list(self.seeds)
        payload["mlp"]["train"]["hidden_layers"] = list(self.mlp.train.hidden_layers)
        return payload

    def canonical_dict(self) -> Dict[str, Any]:
        """The fields that decide results; output location, verbosity and the single-run seeds are left out"""
        payload = self.to_dict()
        payload.pop("output_dir")
        payload.pop("log_level")
        # runs take their seeds from the seed list
        payload["partition"].pop("seed")
        payload["mlp"]["train"].pop("seed")
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ExperimentConfig":
        payload = dict(payload)
        _reject_unknown(cls, payload, "experiment")
        kwargs: Dict[str, Any] = {}
        if "data" in payload:
            kwargs["data"] = _build(DataConfig, payload["data"], "data")
        if "imputation" in payload:
            kwargs["imputation"] = _build(ImputationConfig, payload["imputation"], "imputation")
        if "partition" in payload:
            kwargs["partition"] = _build(PartitionSpec, payload["partition"], "partition")
        if "chaid" in payload:
            kwargs["chaid"] = _build(ChaidParams, payload["chaid"], "chaid")
        if "mlp" in payload:
            section = dict(payload["mlp"])
            _reject_unknown(MlpConfig, section, "mlp")
            kwargs["mlp"] = MlpConfig(
                train=_build(MlpTrainConfig, section.get("train", {}), "mlp.train"),
                prune=_build(PruneConfig, section.get("prune", {}), "mlp.prune"),
            )
        if "svm" in payload:
            section = dict(payload["svm"])
            _reject_unknown(SvmConfig, section, "svm")
            kwargs["svm"] = SvmConfig(
                solver=_build(SvmParams, section.get("solver", {}), "svm.solver"),
                kernel=_build(KernelParams, section.get("kernel", {}), "svm.kernel"),
            )
        for key in ("models", "seeds", "output_dir", "log_level"):
            if key in payload:
                kwargs[key] = payload[key]
        return cls(**kwargs)


def _reject_unknown(cls, payload: Dict[str, Any], section: str):
    if not isinstance(payload, dict):
        raise ConfigError(f"config section '{section}' must be an object")
    valid = [f.name for f in fields(cls)]
    unknown = sorted(set(payload) - set(valid))
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(unknown)} in section '{section}'; "
                          f"valid keys: {', '.join(valid)}")


def _build(cls, payload: Dict[str, Any], section: str):
    _reject_unknown(cls, payload, section)
    try:
        return cls(**payload)
    except TypeError as e:
        raise ConfigError(f"invalid section '{section}': {e}") from e


class ConfigManager:
    """
    Assembles an ExperimentConfig
    Precedence: explicit overrides (CLI flags) > environment > JSON file > dataclass defaults
    """

    def __init__(self, config_path: Union[str, Path, None] = None, env_file: str = ".env",
                 overrides: Optional[Dict[str, Any]] = None):
        self.config_path = Path(config_path) if config_path else None
        self.env_file = env_file
        self.logger = logging.getLogger(__name__)
        self.load_environment()
        self.experiment = self._load_experiment(overrides or {})

    def load_environment(self):
        """Load environment variables from .env file if it exists"""
        env_path = Path(self.env_file)
        if env_path.exists():
            from dotenv import load_dotenv
            load_dotenv(env_path)
            self.logger.info(f"Loaded environment from {env_path}")

    def _read_file(self) -> Dict[str, Any]:
        if self.config_path is None:
            return {}
        if not self.config_path.exists():
            raise ConfigError(f"config file not found: {self.config_path}")
        try:
            payload = json.loads(self.config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {self.config_path} is not valid JSON: {e}") from e
        if not isinstance(payload, dict):
            raise ConfigError(f"config file {self.config_path} must hold a JSON object")
        return payload

    def _load_experiment(self, overrides: Dict[str, Any]) -> ExperimentConfig:
        cfg = ExperimentConfig.from_dict(self._read_file())

        data_path = os.getenv(ENV_DATA_PATH)
        if data_path:
            cfg = replace(cfg, data=replace(cfg.data, path=data_path))
        output_dir = os.getenv(ENV_OUTPUT_DIR)
        if output_dir:
            cfg = replace(cfg, output_dir=output_dir)
        log_level = os.getenv(ENV_LOG_LEVEL)
        if log_level:
            cfg = replace(cfg, log_level=log_level)

        return apply_overrides(cfg, overrides)


def apply_overrides(cfg: ExperimentConfig, overrides: Dict[str, Any]) -> ExperimentConfig:
    """Apply flat overrides such as {"data.path": ..., "seeds": [7]}; None values are skipped"""
    payload = cfg.to_dict()
    for dotted, value in overrides.items():
        if value is None:
            continue
        target = payload
        parts = dotted.split(".")
        for part in parts[:-1]:
            if part not in target:
                raise ConfigError(f"unknown config section '{part}' in override '{dotted}'")
            target = target[part]
        if parts[-1] not in target:
            raise ConfigError(f"unknown config key '{dotted}'")
        target[parts[-1]] = value
    return ExperimentConfig.from_dict(payload)


def load_config(config_path: Union[str, Path, None] = None,
                overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    return ConfigManager(config_path, overrides=overrides).experiment


def setup_logging(level: str = "INFO") -> logging.Logger:
    """Root logger writing the standard format to standard error"""
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )
    return logging.getLogger()


def add_file_handler(path: Union[str, Path]) -> logging.Handler:
    """Attach a run.log handler; the caller removes it when the run ends"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, encoding="utf-8")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.getLogger().addHandler(handler)
    return handler
