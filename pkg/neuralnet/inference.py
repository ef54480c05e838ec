from typing import Dict, Union

import numpy as np

from features.matrix import FeatureMatrix
from neuralnet.mlp import MlpModel, forward
from utils.errors import ModelError

Rows = Union[FeatureMatrix, np.ndarray]


def _inputs(model: MlpModel, rows: Rows) -> np.ndarray:
    if isinstance(rows, FeatureMatrix):
        if rows.columns != model.columns:
            missing = [c for c in model.columns if c not in rows.columns]
            if missing:
                raise ModelError(f"matrix lacks model columns {missing}")
            rows = rows.select_columns(model.columns)
        return rows.values
    return np.asarray(rows, dtype=np.float64)


def predict_proba(model: MlpModel, rows: Rows) -> np.ndarray:
    X = _inputs(model, rows)
    if X.shape[0] == 0:
        return np.zeros((0, len(model.class_names)))
    return forward(model, X.reshape(-1, X.shape[-1]))


def predict(model: MlpModel, rows: Rows) -> np.ndarray:
    """Per-row argmax labels."""
    probs = predict_proba(model, rows)
    return np.array([model.class_names[i] for i in probs.argmax(axis=1)], dtype=object)


def vote(probs: np.ndarray) -> int:
    """Majority class over rows; ties go to the larger summed probability."""
    if len(probs) == 0:
        raise ModelError("cannot vote on an empty flow")
    counts = np.bincount(probs.argmax(axis=1), minlength=probs.shape[1])
    tied = np.flatnonzero(counts == counts.max())
    if len(tied) == 1:
        return int(tied[0])
    mass = probs[:, tied].sum(axis=0)
    return int(tied[int(np.argmax(mass))])


def predict_flow(model: MlpModel, rows: Rows) -> str:
    return model.class_names[vote(predict_proba(model, rows))]


def predict_flows(model: MlpModel, matrix: FeatureMatrix) -> Dict[str, str]:
    probs = predict_proba(model, matrix)
    return {fid: model.class_names[vote(probs[idx])] for fid, idx in matrix.flow_groups().items()}
