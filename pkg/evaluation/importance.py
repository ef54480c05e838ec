import logging
from typing import Dict, Sequence

import numpy as np

from features.matrix import FEATURE_COLUMNS, FeatureMatrix
from neuralnet.inference import predict
from neuralnet.mlp import MlpModel
from utils.seeding import rng_for

logger = logging.getLogger(__name__)


def _accuracy(model: MlpModel, X: np.ndarray, truth: np.ndarray) -> float:
    return float(np.mean(predict(model, X) == truth))


def permutation_importance(
    model: MlpModel,
    matrix: FeatureMatrix,
    repeats: int = 3,
    seed: int = 0,
    report_columns: Sequence[str] = FEATURE_COLUMNS,
) -> Dict[str, float]:
    """Mean drop in row accuracy when one column is shuffled.

    importance[f] = baseline accuracy - accuracy with column f permuted,
    averaged over `repeats`. Columns the model never saw (dropped while
    cleaning) are reported as 0.
    """
    importance = {name: 0.0 for name in report_columns}
    if matrix.n_rows == 0 or repeats < 1:
        return importance
    X = matrix.select_columns(model.columns).values if matrix.columns != model.columns else matrix.values
    truth = np.asarray(matrix.labels, dtype=object)
    baseline = _accuracy(model, X, truth)

    for j, name in enumerate(model.columns):
        drops = []
        for r in range(repeats):
            rng = rng_for(seed, "importance", name, r)
            X_perm = X.copy()
            X_perm[:, j] = rng.permutation(X_perm[:, j])
            drops.append(baseline - _accuracy(model, X_perm, truth))
        importance[name] = float(np.mean(drops))
    ranked = sorted(importance.items(), key=lambda kv: kv[1], reverse=True)[:3]
    logger.info(f"Top features: {', '.join(f'{k}={v:.3f}' for k, v in ranked)}")
    return importance
