"""
Model Artifacts
Uniform prediction over the three classifiers and versioned JSON files holding a model with its encoder
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from classifiers import mlp, svm
from classifiers.chaid import ChaidTree
from dataset.encoding import FeatureEncoder
from dataset.schema import Dataset
from utils.errors import ModelFormatError

logger = logging.getLogger(__name__)

ARTIFACT_VERSION = 1


@dataclass
class TrainedModel:
    """A fitted classifier plus what it needs to score raw records"""
    kind: str
    model: Any
    attribute_names: List[str]
    encoder: Optional[FeatureEncoder] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def _check_schema(self, ds: Dataset):
        if ds.attribute_names != self.attribute_names:
            raise ModelFormatError(
                f"dataset attributes {ds.attribute_names} do not match the model's {self.attribute_names}"
            )

    def predict(self, ds: Dataset) -> Tuple[np.ndarray, np.ndarray]:
        """
        Classify every record

        Args:
            ds: complete dataset with the training schema

        Returns:
            (predicted classes, graded scores where higher means more malignant)
        """
        self._check_schema(ds)
        if self.kind == "chaid":
            return self.model.predict_scores(ds)
        rows = self.encoder.transform(ds).rows
        if self.kind == "mlp":
            scores = mlp.predict_scores(self.model, rows)
            return mlp.classify(scores), scores
        values = svm.decision_values(self.model, rows)
        return svm.classify(values), values

    def to_dict(self, fingerprint: Optional[str] = None) -> Dict[str, Any]:
        if self.kind == "mlp":
            model_payload = self.model.to_dict(fingerprint)
        else:
            model_payload = self.model.to_dict()
        return {
            "artifact_version": ARTIFACT_VERSION,
            "kind": self.kind,
            "attribute_names": list(self.attribute_names),
            "config_fingerprint": fingerprint,
            "encoder": self.encoder.to_dict() if self.encoder is not None else None,
            "model": model_payload,
            "details": self.details,
        }


_LOADERS = {
    "chaid": ChaidTree.from_dict,
    "mlp": mlp.MlpNetwork.from_dict,
    "svm": svm.SvmModel.from_dict,
}


def save_model(trained: TrainedModel, path: Union[str, Path], fingerprint: Optional[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(trained.to_dict(fingerprint), indent=1, sort_keys=True), encoding="utf-8")
    logger.debug(f"Saved {trained.kind} model to {path}")
    return path


def load_model(path: Union[str, Path]) -> TrainedModel:
    """
    Read a model file written by save_model

    Args:
        path: JSON model file

    Returns:
        TrainedModel ready to predict
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path} is not a JSON model file: {e}") from e

    if payload.get("artifact_version") != ARTIFACT_VERSION:
        raise ModelFormatError(f"{path}: unsupported artifact version {payload.get('artifact_version')}")
    kind = payload.get("kind")
    if kind not in _LOADERS:
        raise ModelFormatError(f"{path}: unknown model kind '{kind}'")

    encoder = FeatureEncoder.from_dict(payload["encoder"]) if payload.get("encoder") else None
    if kind != "chaid" and encoder is None:
        raise ModelFormatError(f"{path}: {kind} model has no encoder")
    return TrainedModel(
        kind=kind,
        model=_LOADERS[kind](payload["model"]),
        attribute_names=list(payload["attribute_names"]),
        encoder=encoder,
        details=payload.get("details", {}),
    )
