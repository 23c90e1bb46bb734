"""
Multilayer Perceptron
Sigmoid feed-forward network trained by per-sample backpropagation with momentum, then pruned neuron by neuron
"""

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from dataset.encoding import FeatureMatrix
from utils.errors import ConfigError, ModelFormatError, TrainingError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DECISION_THRESHOLD = 0.5


@dataclass
class MlpTrainConfig:
    """Backpropagation settings"""
    learning_rate: float = 0.1
    momentum: float = 0.9
    max_epochs: int = 2000
    patience: int = 100
    seed: int = 0
    hidden_layers: Tuple[int, ...] = (30, 18)
    shuffle: bool = True
    max_seconds: Optional[float] = None
    validation_fraction: float = 0.2

    def __post_init__(self):
        self.hidden_layers = tuple(int(h) for h in self.hidden_layers)
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if any(h < 1 for h in self.hidden_layers):
            raise ConfigError(f"hidden layer sizes must be positive, got {self.hidden_layers}")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise ConfigError(f"max_seconds must be positive, got {self.max_seconds}")
        if not 0 < self.validation_fraction < 1:
            raise ConfigError(f"validation_fraction must be in (0, 1), got {self.validation_fraction}")


@dataclass
class PruneConfig:
    """Neuron pruning schedule"""
    enabled: bool = True
    prune_fraction: float = 0.1
    max_rounds: int = 10
    tolerance: float = 0.01
    retrain_epochs: int = 50

    def __post_init__(self):
        if not 0 < self.prune_fraction < 1:
            raise ConfigError(f"prune_fraction must be in (0, 1), got {self.prune_fraction}")
        if self.max_rounds < 0:
            raise ConfigError(f"max_rounds must be >= 0, got {self.max_rounds}")
        if self.retrain_epochs < 1:
            raise ConfigError(f"retrain_epochs must be >= 1, got {self.retrain_epochs}")


@dataclass
class MlpNetwork:
    """
    Layered network; weights[l] has shape (size of layer l, size of layer l+1)
    input_indices lists the encoded columns that survived pruning, so forward always takes the full encoding
    """
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    input_indices: np.ndarray
    input_width: int

    def __post_init__(self):
        if not self.weights or len(self.weights) != len(self.biases):
            raise ValueError("network needs one bias vector per weight matrix")
        self.input_indices = np.asarray(self.input_indices, dtype=int)
        if self.weights[0].shape[0] != len(self.input_indices):
            raise ValueError(f"first layer expects {self.weights[0].shape[0]} inputs, "
                             f"{len(self.input_indices)} input columns kept")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (w.shape[1],):
                raise ValueError(f"layer {l}: bias shape {b.shape} does not match weights {w.shape}")
            if l > 0 and self.weights[l - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {l}: weight shapes do not chain")
        if self.weights[-1].shape[1] != 1:
            raise ValueError("output layer must have exactly one neuron")

    @property
    def layer_sizes(self) -> Tuple[int, ...]:
        return (len(self.input_indices),) + tuple(w.shape[1] for w in self.weights)

    @property
    def neuron_count(self) -> int:
        """Input plus hidden neurons, the prunable ones"""
        return int(sum(self.layer_sizes[:-1]))

    def copy(self) -> "MlpNetwork":
        return MlpNetwork(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            input_indices=self.input_indices.copy(),
            input_width=self.input_width,
        )

    def to_dict(self, fingerprint: Optional[str] = None) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "layer_sizes": list(self.layer_sizes),
            "input_width": self.input_width,
            "input_indices": self.input_indices.tolist(),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "config_fingerprint": fingerprint,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "MlpNetwork":
        if payload.get("format_version") != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported MLP format version {payload.get('format_version')}")
        try:
            return cls(
                weights=[np.asarray(w, dtype=float).reshape(len(w), -1) for w in payload["weights"]],
                biases=[np.asarray(b, dtype=float) for b in payload["biases"]],
                input_indices=np.asarray(payload["input_indices"], dtype=int),
                input_width=int(payload["input_width"]),
            )
        except (KeyError, ValueError) as e:
            raise ModelFormatError(f"invalid MLP payload: {e}") from e


def initialize_network(input_width: int, hidden_layers: Sequence[int],
                       rng: np.random.Generator) -> MlpNetwork:
    """Weights and biases drawn uniformly from [-0.5, 0.5]"""
    sizes = [input_width] + list(hidden_layers) + [1]
    weights = [rng.uniform(-0.5, 0.5, size=(a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
    biases = [rng.uniform(-0.5, 0.5, size=b) for b in sizes[1:]]
    return MlpNetwork(weights, biases, np.arange(input_width), input_width)


def _check_width(net: MlpNetwork, width: int):
    if width != net.input_width:
        raise ValueError(f"input has {width} features, network expects {net.input_width}")


def _activations(net: MlpNetwork, x: np.ndarray) -> List[np.ndarray]:
    outputs = [x[..., net.input_indices]]
    for w, b in zip(net.weights, net.biases):
        outputs.append(expit(outputs[-1] @ w + b))
    return outputs


def forward(net: MlpNetwork, x: Sequence[float]) -> float:
    """
    Propagate one encoded sample

    Args:
        net: network
        x: encoded feature vector of the full input width

    Returns:
        output neuron activation in (0, 1)
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a feature vector, got shape {x.shape}")
    _check_width(net, len(x))
    return float(_activations(net, x)[-1][0])


def predict_scores(net: MlpNetwork, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    _check_width(net, rows.shape[1])
    return _activations(net, rows)[-1][:, 0]


def mlp_score(net: MlpNetwork, x: Sequence[float]) -> float:
    """Malignancy score; the sample is classified malignant iff score >= 0.5"""
    return forward(net, x)


def classify(scores: np.ndarray) -> np.ndarray:
    return (np.asarray(scores) >= DECISION_THRESHOLD).astype(int)


def accuracy(net: MlpNetwork, fm: FeatureMatrix) -> float:
    if len(fm) == 0:
        return 0.0
    return float(np.mean(classify(predict_scores(net, fm.rows)) == fm.labels))


def sse(desired: Sequence[float], actual: Sequence[float]) -> float:
    """E = 1/2 * sum (desired - actual)^2"""
    desired = np.asarray(desired, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if desired.shape != actual.shape:
        raise ValueError(f"length mismatch: {desired.shape} vs {actual.shape}")
    return 0.5 * float(np.sum((desired - actual) ** 2))


def validation_error(net: MlpNetwork, fm: FeatureMatrix) -> float:
    """Mean per-sample E over an encoded partition"""
    if len(fm) == 0:
        return 0.0
    return sse(fm.labels, predict_scores(net, fm.rows)) / len(fm)


def gradients(net: MlpNetwork, x: np.ndarray, target: float
              ) -> Tuple[List[np.ndarray], List[np.ndarray], float]:
    """
    Analytic gradient of the per-sample squared error

    Args:
        net: network
        x: encoded feature vector of the full input width
        target: desired output (0 or 1)

    Returns:
        (weight gradients, bias gradients, error E)
    """
    outputs = _activations(net, np.asarray(x, dtype=float))
    out = outputs[-1]
    error = sse([target], out)

    delta = (out - target) * out * (1.0 - out)
    grad_w: List[np.ndarray] = [None] * len(net.weights)
    grad_b: List[np.ndarray] = [None] * len(net.biases)
    for l in range(len(net.weights) - 1, -1, -1):
        grad_w[l] = np.outer(outputs[l], delta)
        grad_b[l] = delta
        if l > 0:
            a = outputs[l]
            delta = (net.weights[l] @ delta) * a * (1.0 - a)
    return grad_w, grad_b, error


@dataclass
class Velocity:
    """Momentum terms, one per weight matrix and bias vector"""
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    @classmethod
    def zeros_like(cls, net: MlpNetwork) -> "Velocity":
        return cls([np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases])


def backprop_epoch(net: MlpNetwork, rows: np.ndarray, labels: np.ndarray, cfg: MlpTrainConfig,
                   rng: Optional[np.random.Generator] = None, velocity: Optional[Velocity] = None,
                   epoch: int = 0) -> float:
    """
    One pass of per-sample gradient descent with momentum; updates net (and velocity) in place

    Args:
        net: network to update
        rows: encoded samples
        labels: targets 0/1
        cfg: learning rate, momentum and shuffle flag
        rng: generator for the presentation order
        velocity: momentum state carried across epochs
        epoch: index reported in training errors

    Returns:
        summed error E over the epoch, each term taken before its sample's update
    """
    rows = np.asarray(rows, dtype=float)
    _check_width(net, rows.shape[1])
    velocity = velocity or Velocity.zeros_like(net)

    order = np.arange(len(rows))
    if cfg.shuffle and rng is not None:
        order = rng.permutation(len(rows))

    total = 0.0
    for i in order:
        grad_w, grad_b, error = gradients(net, rows[i], float(labels[i]))
        if not np.isfinite(error) or not all(np.all(np.isfinite(g)) for g in grad_w):
            raise TrainingError("non-finite activation or gradient", epoch)
        total += error
        for l in range(len(net.weights)):
            velocity.weights[l] = cfg.momentum * velocity.weights[l] - cfg.learning_rate * grad_w[l]
            velocity.biases[l] = cfg.momentum * velocity.biases[l] - cfg.learning_rate * grad_b[l]
            net.weights[l] += velocity.weights[l]
            net.biases[l] += velocity.biases[l]
    return total


@dataclass
class EpochRecord:
    epoch: int
    error: float
    train_accuracy: float
    validation_accuracy: float
    validation_error: float = 0.0


@dataclass
class TrainResult:
    """Best-validation network and the per-epoch history"""
    network: MlpNetwork
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    validation_accuracy: float = 0.0
    validation_error: float = 0.0
    stopped_by: str = "max_epochs"


def _fit(net: MlpNetwork, train: FeatureMatrix, validation: FeatureMatrix, cfg: MlpTrainConfig,
         rng: np.random.Generator, max_epochs: int, patience: int) -> TrainResult:
    best_accuracy = accuracy(net, validation)
    best_error = validation_error(net, validation)
    result = TrainResult(network=net.copy(), validation_accuracy=best_accuracy, validation_error=best_error)
    velocity = Velocity.zeros_like(net)
    started = time.monotonic()
    stale = 0

    for epoch in range(1, max_epochs + 1):
        error = backprop_epoch(net, train.rows, train.labels, cfg, rng, velocity, epoch)
        valid_accuracy = accuracy(net, validation)
        valid_error = validation_error(net, validation)
        result.history.append(EpochRecord(epoch, error, accuracy(net, train), valid_accuracy, valid_error))

        # higher accuracy resets patience; equal accuracy with lower error only moves the snapshot
        improved = valid_accuracy > best_accuracy
        if improved or (valid_accuracy == best_accuracy and valid_error < best_error):
            best_accuracy, best_error = valid_accuracy, valid_error
            result.network = net.copy()
            result.best_epoch = epoch
            result.validation_accuracy = valid_accuracy
            result.validation_error = valid_error
        stale = 0 if improved else stale + 1

        if stale >= patience:
            result.stopped_by = "patience"
            break
        if cfg.max_seconds is not None and time.monotonic() - started >= cfg.max_seconds:
            result.stopped_by = "max_seconds"
            break
    return result


def train(train_set: FeatureMatrix, validation: FeatureMatrix, cfg: MlpTrainConfig = None,
          net: Optional[MlpNetwork] = None) -> TrainResult:
    """
    Train a network with early stopping on validation accuracy

    Args:
        train_set: encoded training samples
        validation: encoded validation samples
        cfg: training settings
        net: starting network; a fresh one is drawn from cfg.seed when omitted

    Returns:
        TrainResult holding the best-validation snapshot (the starting network counts as epoch 0);
        ties in validation accuracy go to the lower validation error
    """
    cfg = cfg or MlpTrainConfig()
    if len(train_set) == 0 or len(validation) == 0:
        raise ValueError("MLP training needs non-empty training and validation partitions")

    rng = np.random.default_rng(cfg.seed)
    if net is None:
        net = initialize_network(train_set.width, cfg.hidden_layers, rng)
    else:
        net = net.copy()

    result = _fit(net, train_set, validation, cfg, rng, cfg.max_epochs, cfg.patience)
    logger.info(f"MLP {'-'.join(str(s) for s in result.network.layer_sizes)} trained: "
                f"best validation accuracy {result.validation_accuracy:.4f} at epoch {result.best_epoch}, "
                f"stopped by {result.stopped_by} after {len(result.history)} epochs")
    return result


def neuron_strengths(net: MlpNetwork) -> List[Tuple[float, int, int]]:
    """(sum of |outgoing weights|, layer, index) for every input and hidden neuron"""
    strengths = []
    for layer, w in enumerate(net.weights):
        for index, value in enumerate(np.sum(np.abs(w), axis=1)):
            strengths.append((float(value), layer, index))
    return strengths


def _drop_neuron(net: MlpNetwork, layer: int, index: int):
    net.weights[layer] = np.delete(net.weights[layer], index, axis=0)
    if layer == 0:
        net.input_indices = np.delete(net.input_indices, index)
    else:
        net.weights[layer - 1] = np.delete(net.weights[layer - 1], index, axis=1)
        net.biases[layer - 1] = np.delete(net.biases[layer - 1], index)


def remove_weakest(net: MlpNetwork, count: int) -> Tuple[MlpNetwork, List[Tuple[int, int]]]:
    """
    Remove the weakest input and hidden neurons, keeping at least one per layer

    Args:
        net: network (unchanged)
        count: number of neurons to remove

    Returns:
        (pruned copy, removed (layer, original index) pairs)
    """
    sizes = list(net.layer_sizes[:-1])
    chosen: List[Tuple[int, int]] = []
    for _, layer, index in sorted(neuron_strengths(net)):
        if len(chosen) >= count:
            break
        if sizes[layer] > 1:
            sizes[layer] -= 1
            chosen.append((layer, index))

    pruned = net.copy()
    # highest index first so earlier positions stay valid
    for layer, index in sorted(chosen, key=lambda c: (c[0], -c[1])):
        _drop_neuron(pruned, layer, index)
    return pruned, chosen


@dataclass
class PruneRound:
    round: int
    removed: List[Tuple[int, int]]
    layer_sizes: Tuple[int, ...]
    validation_accuracy: float
    accepted: bool
    validation_error: float = 0.0


@dataclass
class PruneResult:
    network: MlpNetwork
    rounds: List[PruneRound] = field(default_factory=list)

    @property
    def accepted_rounds(self) -> int:
        return sum(1 for r in self.rounds if r.accepted)


def prune(net: MlpNetwork, train_set: FeatureMatrix, validation: FeatureMatrix,
          pcfg: PruneConfig = None, cfg: MlpTrainConfig = None) -> PruneResult:
    """
    Iteratively remove the weakest neurons and retrain briefly

    Args:
        net: trained network (unchanged)
        train_set: encoded training samples used for retraining
        validation: encoded samples that decide whether a round is kept; each round is measured
            against the unpruned network
        pcfg: pruning schedule
        cfg: training settings for the retraining epochs

    Returns:
        PruneResult with the last accepted network
    """
    pcfg = pcfg or PruneConfig()
    cfg = cfg or MlpTrainConfig()
    current = net.copy()
    baseline_accuracy = accuracy(current, validation)
    baseline_error = validation_error(current, validation)
    result = PruneResult(network=current)

    for round_index in range(1, pcfg.max_rounds + 1):
        removable = current.neuron_count - (len(current.layer_sizes) - 1)
        if removable <= 0:
            break
        count = max(1, int(pcfg.prune_fraction * current.neuron_count))
        candidate, removed = remove_weakest(current, count)

        rng = np.random.default_rng(cfg.seed + round_index)
        retrained = _fit(candidate, train_set, validation, cfg, rng,
                         pcfg.retrain_epochs, pcfg.retrain_epochs)
        candidate_accuracy = retrained.validation_accuracy
        candidate_error = retrained.validation_error
        accepted = (baseline_accuracy - candidate_accuracy <= pcfg.tolerance
                    and candidate_error - baseline_error <= pcfg.tolerance)
        result.rounds.append(PruneRound(round_index, removed, retrained.network.layer_sizes,
                                        candidate_accuracy, accepted, candidate_error))
        if not accepted:
            logger.info(f"Prune round {round_index} rejected: validation accuracy "
                        f"{baseline_accuracy:.4f} -> {candidate_accuracy:.4f}, "
                        f"error {baseline_error:.4f} -> {candidate_error:.4f}")
            break
        current = retrained.network
        logger.info(f"Prune round {round_index} accepted: removed {len(removed)} neurons, "
                    f"topology {'-'.join(str(s) for s in current.layer_sizes)}, "
                    f"validation accuracy {candidate_accuracy:.4f}, error {candidate_error:.4f}")

    result.network = current
    return result


def train_config_dict(cfg: MlpTrainConfig) -> Dict[str, Any]:
    payload = asdict(cfg)
    payload["hidden_layers"] = list(cfg.hidden_layers)
    return payload
