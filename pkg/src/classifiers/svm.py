"""
Polynomial-kernel Support Vector Machine
Soft-margin classifier solved in dual form by sequential minimal optimization, with margin, slack and KKT diagnostics
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from dataset.encoding import FeatureMatrix
from utils.errors import ConfigError, DegenerateLabelsError, ModelFormatError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
_SNAP = 1e-8
_BOUND_EPS = 1e-12
_STALL_RTOL = 1e-6
_MAX_UNBOUNDED_SWEEPS = 1000
_MAX_FULL_PASSES = 1000


@dataclass(frozen=True)
class KernelParams:
    """K(a, b) = (gamma * <a, b> + coef_r) ** degree"""
    gamma: float = 1.0
    coef_r: float = 0.1
    degree: int = 4

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigError(f"kernel gamma must be > 0, got {self.gamma}")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ConfigError(f"kernel degree must be an integer >= 1, got {self.degree}")


@dataclass(frozen=True)
class SvmParams:
    """Regularization and stopping settings"""
    c: float = 10.0
    kkt_tolerance: float = 1e-3
    max_passes: int = 10  # consecutive stalled full passes before stopping
    step_eps: float = 1e-3  # smallest accepted multiplier change, relative to its size

    def __post_init__(self):
        if self.c <= 0:
            raise ConfigError(f"C must be > 0, got {self.c}")
        if self.kkt_tolerance <= 0:
            raise ConfigError(f"kkt_tolerance must be > 0, got {self.kkt_tolerance}")
        if self.max_passes < 1:
            raise ConfigError(f"max_passes must be >= 1, got {self.max_passes}")
        if self.step_eps <= 0:
            raise ConfigError(f"step_eps must be > 0, got {self.step_eps}")


def poly_kernel(a: Sequence[float], b: Sequence[float], k: KernelParams) -> float:
    """
    Polynomial kernel of two vectors

    Args:
        a: first vector
        b: second vector of the same length
        k: kernel parameters

    Returns:
        (gamma * <a, b> + r) ** d
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"kernel arguments differ in length: {a.shape} vs {b.shape}")
    return float((k.gamma * np.dot(a, b) + k.coef_r) ** k.degree)


def kernel_matrix(a: np.ndarray, b: np.ndarray, k: KernelParams) -> np.ndarray:
    return (k.gamma * (np.atleast_2d(a) @ np.atleast_2d(b).T) + k.coef_r) ** k.degree


def to_signed(labels: Sequence[int]) -> np.ndarray:
    """benign 0 -> -1, malignant 1 -> +1"""
    return np.where(np.asarray(labels) == 1, 1.0, -1.0)


@dataclass
class SvmModel:
    """Support vectors with their multipliers, bias and kernel"""
    support_vectors: np.ndarray
    support_labels: np.ndarray
    alphas: np.ndarray
    bias: float
    kernel: KernelParams
    params: SvmParams
    support_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    dual_trace: List[float] = field(default_factory=list)
    converged: bool = True
    full_passes: int = 0

    @property
    def width(self) -> int:
        return int(self.support_vectors.shape[1])

    def weight_norm_squared(self) -> float:
        coef = self.alphas * self.support_labels
        gram = kernel_matrix(self.support_vectors, self.support_vectors, self.kernel)
        return float(coef @ gram @ coef)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "kernel": asdict(self.kernel),
            "params": asdict(self.params),
            "bias": self.bias,
            "support_vectors": self.support_vectors.tolist(),
            "support_labels": self.support_labels.tolist(),
            "alphas": self.alphas.tolist(),
            "support_indices": self.support_indices.tolist(),
            "converged": self.converged,
            "full_passes": self.full_passes,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "SvmModel":
        if payload.get("format_version") != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported SVM format version {payload.get('format_version')}")
        try:
            vectors = np.asarray(payload["support_vectors"], dtype=float)
            return cls(
                support_vectors=vectors.reshape(len(payload["alphas"]), -1),
                support_labels=np.asarray(payload["support_labels"], dtype=float),
                alphas=np.asarray(payload["alphas"], dtype=float),
                bias=float(payload["bias"]),
                kernel=KernelParams(**payload["kernel"]),
                params=SvmParams(**payload["params"]),
                support_indices=np.asarray(payload["support_indices"], dtype=int),
                converged=bool(payload["converged"]),
                full_passes=int(payload["full_passes"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"invalid SVM payload: {e}") from e


class SmoSolver:
    """
    Pairwise dual optimizer over a full Gram matrix
    Decision values are D = f + b with f = K (alpha * y); the error cache holds E = D - y
    """

    def __init__(self, rows: np.ndarray, y: np.ndarray, params: SvmParams, kernel: KernelParams):
        self.rows = rows
        self.y = y
        self.c = params.c
        self.tol = params.kkt_tolerance
        self.step_eps = params.step_eps
        self.params = params
        self.gram = kernel_matrix(rows, rows, kernel)
        self.alpha = np.zeros(len(y))
        self.b = 0.0
        self.f = np.zeros(len(y))
        self.errors = -y.copy()
        self.dual_trace: List[float] = [0.0]
        self.full_passes = 0
        self.logger = logging.getLogger(__name__)

    def dual_objective(self) -> float:
        return float(np.sum(self.alpha) - 0.5 * np.dot(self.alpha * self.y, self.f))

    def _unbounded(self) -> np.ndarray:
        return np.flatnonzero((self.alpha > 0) & (self.alpha < self.c))

    def take_step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        a1, a2 = self.alpha[i1], self.alpha[i2]
        y1, y2 = self.y[i1], self.y[i2]
        e1, e2 = self.errors[i1], self.errors[i2]
        s = y1 * y2
        c = self.c

        if y1 != y2:
            low, high = max(0.0, a2 - a1), min(c, c + a2 - a1)
        else:
            low, high = max(0.0, a1 + a2 - c), min(c, a1 + a2)
        # feasible segment for alpha2
        if high - low <= _BOUND_EPS:
            return False

        # unclipped optimum along the constraint line, then clip
        k11, k12, k22 = self.gram[i1, i1], self.gram[i1, i2], self.gram[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2_new = min(high, max(low, a2 + y2 * (e1 - e2) / eta))
        else:
            # objective is linear along the constraint line: take the better end
            f1 = y1 * (e1 - self.b) - a1 * k11 - s * a2 * k12
            f2 = y2 * (e2 - self.b) - s * a1 * k12 - a2 * k22
            l1 = a1 + s * (a2 - low)
            h1 = a1 + s * (a2 - high)
            l_obj = l1 * f1 + low * f2 + 0.5 * l1 * l1 * k11 + 0.5 * low * low * k22 + s * low * l1 * k12
            h_obj = h1 * f1 + high * f2 + 0.5 * h1 * h1 * k11 + 0.5 * high * high * k22 + s * high * h1 * k12
            if l_obj < h_obj - _BOUND_EPS:
                a2_new = low
            elif l_obj > h_obj + _BOUND_EPS:
                a2_new = high
            else:
                a2_new = a2

        if a2_new < _SNAP * c:
            a2_new = 0.0
        elif a2_new > c - _SNAP * c:
            a2_new = c
        # reject steps too small to matter
        if abs(a2_new - a2) < self.step_eps * (a2_new + a2 + self.step_eps):
            return False

        a1_new = min(c, max(0.0, a1 + s * (a2 - a2_new)))
        d1, d2 = a1_new - a1, a2_new - a2

        # threshold from whichever multiplier ended strictly inside the box
        b1 = self.b - e1 - y1 * d1 * k11 - y2 * d2 * k12
        b2 = self.b - e2 - y1 * d1 * k12 - y2 * d2 * k22
        if 0 < a1_new < c:
            b_new = b1
        elif 0 < a2_new < c:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        # refresh the error cache
        self.alpha[i1], self.alpha[i2] = a1_new, a2_new
        self.f += y1 * d1 * self.gram[:, i1] + y2 * d2 * self.gram[:, i2]
        self.b = b_new
        self.errors = self.f + self.b - self.y
        self.dual_trace.append(self.dual_objective())
        return True

    def examine(self, i2: int) -> bool:
        y2, a2 = self.y[i2], self.alpha[i2]
        r2 = self.errors[i2] * y2
        if not ((r2 < -self.tol and a2 < self.c) or (r2 > self.tol and a2 > 0)):
            return False

        unbounded = self._unbounded()
        if len(unbounded) > 1:
            i1 = int(unbounded[np.argmax(np.abs(self.errors[i2] - self.errors[unbounded]))])
            if self.take_step(i1, i2):
                return True
        for i1 in unbounded:
            if self.take_step(int(i1), i2):
                return True
        for i1 in range(len(self.y)):
            if self.take_step(i1, i2):
                return True
        return False

    def max_residual(self) -> float:
        """Largest KKT residual over the cached errors; y * E = y * D - 1"""
        r = self.y * self.errors
        residuals = np.where(self.alpha <= 0, np.maximum(0.0, -r),
                             np.where(self.alpha >= self.c, np.maximum(0.0, r), np.abs(r)))
        return float(np.max(residuals)) if len(residuals) else 0.0

    def solve(self) -> bool:
        """
        Alternate full and unbounded sweeps
        Stops when a full sweep accepts no step or max_passes consecutive cycles barely move the dual;
        converged when every sample then meets the KKT tolerance
        """
        examine_all = True
        stalled = 0
        unbounded_sweeps = 0
        cycle_start = self.dual_trace[-1]
        while True:
            if examine_all:
                if self.full_passes >= _MAX_FULL_PASSES:
                    self.logger.warning(f"SMO hit the safety cap of {_MAX_FULL_PASSES} full passes")
                    break
                self.full_passes += 1
                cycle_start = self.dual_trace[-1]
                changed = sum(self.examine(i) for i in range(len(self.y)))
                self.logger.debug(f"SMO full pass {self.full_passes}: {changed} updates")
                if changed == 0:
                    break
                examine_all = False
                unbounded_sweeps = 0
            else:
                changed = sum(self.examine(int(i)) for i in self._unbounded())
                unbounded_sweeps += 1
                if changed == 0 or unbounded_sweeps >= _MAX_UNBOUNDED_SWEEPS:
                    examine_all = True
                    # cycle done: count it as stalled when the dual hardly rose
                    gain = self.dual_trace[-1] - cycle_start
                    stalled = stalled + 1 if gain <= _STALL_RTOL * (1.0 + abs(self.dual_trace[-1])) else 0
                    if stalled >= self.params.max_passes:
                        self.logger.debug(f"SMO stalled for {stalled} consecutive passes")
                        break
        return self.max_residual() <= self.tol


def train_svm(train: FeatureMatrix, p: SvmParams = None, k: KernelParams = None) -> SvmModel:
    """
    Fit a soft-margin SVM

    Args:
        train: encoded samples with 0/1 labels (mapped to -1/+1)
        p: C and stopping settings
        k: kernel parameters

    Returns:
        SvmModel keeping only samples with alpha > 0
    """
    p = p or SvmParams()
    k = k or KernelParams()
    y = to_signed(train.labels)
    if len(y) == 0 or np.all(y == y[0]):
        raise DegenerateLabelsError("degenerate labels: SVM training needs samples of both classes")
    if not 1.0 <= p.c <= 10.0:
        logger.warning(f"C={p.c} lies outside the recommended range [1, 10]")

    solver = SmoSolver(np.asarray(train.rows, dtype=float), y, p, k)
    converged = solver.solve()
    if not converged:
        logger.warning(f"SMO stopped after {solver.full_passes} full passes with KKT residual "
                       f"{solver.max_residual():.2e} above tolerance {p.kkt_tolerance}")

    support = np.flatnonzero(solver.alpha > 0)
    model = SvmModel(
        support_vectors=solver.rows[support].copy(),
        support_labels=y[support].copy(),
        alphas=solver.alpha[support].copy(),
        bias=float(solver.b),
        kernel=k,
        params=p,
        support_indices=support,
        dual_trace=solver.dual_trace,
        converged=converged,
        full_passes=solver.full_passes,
    )
    logger.info(f"SVM trained: {len(support)} support vectors of {len(y)} samples, "
                f"bias {model.bias:.4f}, converged={converged}")
    return model


def decision_values(m: SvmModel, rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[1] != m.width:
        raise ValueError(f"input has {rows.shape[1]} features, model expects {m.width}")
    return kernel_matrix(rows, m.support_vectors, m.kernel) @ (m.alphas * m.support_labels) + m.bias


def decision_value(m: SvmModel, x: Sequence[float]) -> float:
    """D(x) = sum alpha_i y_i K(x_i, x) + b; malignant iff D(x) >= 0"""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a feature vector, got shape {x.shape}")
    return float(decision_values(m, x[None, :])[0])


def classify(values: np.ndarray) -> np.ndarray:
    return (np.asarray(values) >= 0).astype(int)


def margin(m: SvmModel) -> float:
    """Geometric margin 1 / ||w||"""
    norm_squared = m.weight_norm_squared()
    if norm_squared <= 0:
        raise ValueError("margin undefined: ||w|| = 0")
    return 1.0 / float(np.sqrt(norm_squared))


def slack_values(m: SvmModel, rows: np.ndarray, labels: Sequence[int]) -> np.ndarray:
    """xi_i = max(0, 1 - y_i D(x_i))"""
    return np.maximum(0.0, 1.0 - to_signed(labels) * decision_values(m, rows))


def primal_objective(m: SvmModel, rows: np.ndarray, labels: Sequence[int]) -> float:
    return float(m.params.c * np.sum(slack_values(m, rows, labels)) + 0.5 * m.weight_norm_squared())


def dual_objective(m: SvmModel) -> float:
    return float(np.sum(m.alphas) - 0.5 * m.weight_norm_squared())


@dataclass
class KktReport:
    residuals: np.ndarray
    max_residual: float
    alpha_y_sum: float
    violations: int

    def to_dict(self) -> Dict[str, Any]:
        return {"max_residual": self.max_residual, "alpha_y_sum": self.alpha_y_sum,
                "violations": self.violations}


def kkt_report(m: SvmModel, rows: np.ndarray, labels: Sequence[int],
               p: Optional[SvmParams] = None) -> KktReport:
    """
    Per-sample KKT residuals against the training rows the model was fitted on

    Args:
        m: trained model
        rows: the training rows, in training order
        labels: their 0/1 labels
        p: supplies C and the tolerance (defaults to the model's own)

    Returns:
        KktReport; a residual above the tolerance is a violation
    """
    p = p or m.params
    y = to_signed(labels)
    alpha = np.zeros(len(y))
    alpha[m.support_indices] = m.alphas
    margins = y * decision_values(m, rows)

    residuals = np.where(
        alpha <= 0,
        np.maximum(0.0, 1.0 - margins),
        np.where(alpha >= p.c, np.maximum(0.0, margins - 1.0), np.abs(margins - 1.0)),
    )
    return KktReport(
        residuals=residuals,
        max_residual=float(np.max(residuals)) if len(residuals) else 0.0,
        alpha_y_sum=float(np.sum(alpha * y)),
        violations=int(np.sum(residuals > p.kkt_tolerance)),
    )
