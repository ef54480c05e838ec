import logging
import math
from typing import Optional, Tuple

import numpy as np

from dataset.prep import ClassWeights
from features.matrix import FeatureMatrix
from models.experiment import TrainingOverrides
from models.report import TrainingCurve
from neuralnet.adam import AdamState, adam_step
from neuralnet.mlp import PROB_FLOOR, MlpModel, ModelConfig, backward, forward, init_model
from utils.errors import ModelError
from utils.seeding import rng_for

logger = logging.getLogger(__name__)

MIN_IMPROVEMENT = 1e-4


def config_for(train: FeatureMatrix, training: TrainingOverrides, seed: int) -> ModelConfig:
    """Architecture sized from the training partition (N_s = its row count)."""
    if train.n_rows == 0:
        raise ModelError("training matrix is empty")
    return ModelConfig(
        n_inputs=len(train.columns),
        n_outputs=len(train.class_names),
        alpha=training.alpha,
        n_train_samples=train.n_rows,
        learning_rate=training.learning_rate,
        batch_size=training.batch_size,
        epochs=training.epochs,
        patience=training.patience,
        seed=seed,
    )


def _loss_and_accuracy(model: MlpModel, X: np.ndarray, y: np.ndarray, w: np.ndarray) -> Tuple[float, float]:
    """Weighted cross-entropy and accuracy from a single forward pass."""
    if len(y) == 0:
        return 0.0, 0.0
    probs = forward(model, X)
    picked = np.maximum(probs[np.arange(len(y)), y], PROB_FLOOR)
    return float(np.mean(-w * np.log(picked))), float(np.mean(probs.argmax(axis=1) == y))


def train(
    config: ModelConfig,
    train_matrix: FeatureMatrix,
    validation: FeatureMatrix,
    weights: Optional[ClassWeights] = None,
) -> Tuple[MlpModel, TrainingCurve]:
    """Mini-batch Adam training; returns the lowest-validation-loss snapshot.

    Batches are reshuffled each epoch from the config seed. Training stops
    after `patience` epochs in which the validation loss has not dropped by
    at least MIN_IMPROVEMENT.
    """
    if train_matrix.n_rows == 0:
        raise ModelError("training matrix is empty")
    class_names = list(train_matrix.class_names)
    X = train_matrix.values
    y = train_matrix.label_indices(class_names)
    w = weights.for_rows(train_matrix) if weights is not None else np.ones(len(y))
    if validation.n_rows:
        if validation.columns != train_matrix.columns:
            raise ModelError("validation columns differ from training columns")
        X_val, y_val = validation.values, validation.label_indices(class_names)
        w_val = weights.for_rows(validation) if weights is not None else np.ones(len(y_val))
    else:
        logger.warning("Empty validation partition; selecting on training loss")
        X_val, y_val, w_val = X, y, w

    model = init_model(config, class_names, train_matrix.columns)
    params = model.parameters()
    state = AdamState.zeros_like(params)
    shuffle_rng = rng_for(config.seed, "shuffle")
    curve = TrainingCurve()
    best_params, best_loss = [p.copy() for p in params], math.inf

    logger.info(
        f"Training MLP {config.n_inputs}-{config.hidden_size}-{config.n_outputs} on {len(y)} rows "
        f"(lr={config.learning_rate}, batch={config.batch_size}, epochs<={config.epochs})"
    )
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(y))
        for start in range(0, len(y), config.batch_size):
            idx = order[start:start + config.batch_size]
            grads = backward(model, X[idx], y[idx], w[idx])
            params = adam_step(state, params, grads, config.learning_rate)
            model = model.with_parameters(params)

        train_loss, train_accuracy = _loss_and_accuracy(model, X, y, w)
        val_loss, val_accuracy = _loss_and_accuracy(model, X_val, y_val, w_val)
        curve.train_loss.append(train_loss)
        curve.train_accuracy.append(train_accuracy)
        curve.validation_loss.append(val_loss)
        curve.validation_accuracy.append(val_accuracy)

        if val_loss < best_loss - MIN_IMPROVEMENT:
            best_loss = val_loss
            best_params = [p.copy() for p in params]
            curve.best_epoch = epoch
        if epoch % 25 == 0:
            logger.info(f"epoch {epoch}: loss {train_loss:.4f}, val loss {val_loss:.4f}, val acc {val_accuracy:.3f}")
        if epoch - curve.best_epoch >= config.patience:
            logger.info(f"Early stop at epoch {epoch}; best epoch {curve.best_epoch} (val loss {best_loss:.4f})")
            break

    return model.with_parameters(best_params), curve
