"""
Single-hidden-layer perceptron: ReLU hidden layer, softmax output and
class-weighted categorical cross-entropy.
"""
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from dataset.prep import ScalerParams
from utils.errors import DomainError, ModelError
from utils.seeding import rng_for

PROB_FLOOR = 1e-12


def hidden_layer_size(n_samples: int, alpha: float, n_inputs: int, n_outputs: int) -> int:
    """floor(N_s / (alpha * (N_i + N_o))), never below 1."""
    if n_samples <= 0 or alpha <= 0 or n_inputs <= 0 or n_outputs <= 0:
        raise DomainError(
            f"hidden_layer_size needs positive inputs, got N_s={n_samples} alpha={alpha} N_i={n_inputs} N_o={n_outputs}"
        )
    return max(1, math.floor(n_samples / (alpha * (n_inputs + n_outputs))))


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_inputs: int = Field(default=16, gt=0)
    n_outputs: int = Field(default=7, gt=0)
    alpha: float = Field(default=2.0, gt=0)
    n_train_samples: int = Field(default=4968, gt=0)
    # Explicit width; None applies the sample-count rule
    hidden_override: Optional[int] = Field(default=None, gt=0)
    learning_rate: float = Field(default=0.00001, ge=0)
    batch_size: int = Field(default=32, gt=0)
    epochs: int = Field(default=300, gt=0)
    patience: int = Field(default=30, gt=0)
    seed: int = 0

    @property
    def hidden_size(self) -> int:
        if self.hidden_override is not None:
            return self.hidden_override
        return hidden_layer_size(self.n_train_samples, self.alpha, self.n_inputs, self.n_outputs)


@dataclass
class MlpModel:
    config: ModelConfig
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    class_names: List[str]
    columns: List[str]
    scaler: Optional[ScalerParams] = None

    def parameters(self) -> List[np.ndarray]:
        return [self.W1, self.b1, self.W2, self.b2]

    def with_parameters(self, params: Sequence[np.ndarray]) -> "MlpModel":
        W1, b1, W2, b2 = (np.array(p, dtype=np.float64) for p in params)
        return MlpModel(self.config, W1, b1, W2, b2, list(self.class_names), list(self.columns), self.scaler)

    def check(self) -> None:
        h, i = self.W1.shape
        o = self.W2.shape[0]
        if self.b1.shape != (h,) or self.W2.shape != (o, h) or self.b2.shape != (o,):
            raise ModelError(f"inconsistent weight shapes W1{self.W1.shape} W2{self.W2.shape}")
        if o != len(self.class_names) or i != len(self.columns):
            raise ModelError(f"weights {o}x{i} do not match {len(self.class_names)} classes / {len(self.columns)} columns")
        if not all(np.isfinite(p).all() for p in self.parameters()):
            raise ModelError("model has non-finite weights")


class Gradients(NamedTuple):
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray


def init_model(config: ModelConfig, class_names: Sequence[str], columns: Sequence[str]) -> MlpModel:
    """Glorot-uniform weights from the config seed, zero biases."""
    if len(class_names) != config.n_outputs or len(columns) != config.n_inputs:
        raise ModelError(
            f"config expects {config.n_inputs} inputs/{config.n_outputs} outputs, "
            f"got {len(columns)} columns/{len(class_names)} classes"
        )
    rng = rng_for(config.seed, "init")
    n_h = config.hidden_size

    def glorot(fan_out, fan_in):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_out, fan_in))

    return MlpModel(
        config=config,
        W1=glorot(n_h, config.n_inputs),
        b1=np.zeros(n_h),
        W2=glorot(config.n_outputs, n_h),
        b2=np.zeros(config.n_outputs),
        class_names=list(class_names),
        columns=list(columns),
    )


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, x)


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=-1, keepdims=True)


def _as_batch(model: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    batch = x.reshape(1, -1) if x.ndim == 1 else x
    if batch.ndim != 2 or batch.shape[1] != model.W1.shape[1]:
        raise ModelError(f"input has {batch.shape[-1]} features, model expects {model.W1.shape[1]}")
    return batch


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one row (1-D) or a batch of rows (2-D)."""
    batch = _as_batch(model, x)
    hidden = relu(batch @ model.W1.T + model.b1)
    probs = softmax(hidden @ model.W2.T + model.b2)
    return probs[0] if np.ndim(x) == 1 else probs


def loss(p: np.ndarray, y: int, w: float = 1.0) -> float:
    return -w * math.log(max(float(p[y]), PROB_FLOOR))


def batch_loss(model: MlpModel, X: np.ndarray, y: np.ndarray, w: Optional[np.ndarray] = None) -> float:
    """Mean of per-row weighted cross-entropy."""
    if len(y) == 0:
        return 0.0
    probs = forward(model, X)
    picked = np.maximum(probs[np.arange(len(y)), y], PROB_FLOOR)
    weights = np.ones(len(y)) if w is None else np.asarray(w, dtype=np.float64)
    return float(np.mean(-weights * np.log(picked)))


def backward(model: MlpModel, X: np.ndarray, y: np.ndarray, w: Optional[np.ndarray] = None) -> Gradients:
    """Analytic gradients of batch_loss with respect to every parameter."""
    X = _as_batch(model, X)
    n = X.shape[0]
    if n == 0:
        raise ModelError("backward needs a non-empty batch")
    weights = np.ones(n) if w is None else np.asarray(w, dtype=np.float64)

    pre_hidden = X @ model.W1.T + model.b1
    hidden = relu(pre_hidden)
    probs = softmax(hidden @ model.W2.T + model.b2)

    delta_out = probs.copy()
    delta_out[np.arange(n), y] -= 1.0
    delta_out *= (weights / n)[:, None]

    dW2 = delta_out.T @ hidden
    db2 = delta_out.sum(axis=0)
    delta_hidden = (delta_out @ model.W2) * (pre_hidden > 0)
    dW1 = delta_hidden.T @ X
    db1 = delta_hidden.sum(axis=0)
    return Gradients(dW1, db1, dW2, db2)
