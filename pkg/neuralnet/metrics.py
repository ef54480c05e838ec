import logging
from typing import Sequence

import numpy as np
from sklearn.metrics import accuracy_score, confusion_matrix, precision_recall_fscore_support

from features.matrix import FeatureMatrix
from models.report import ClassMetrics, EvalReport
from neuralnet.inference import predict, predict_flows
from neuralnet.mlp import MlpModel
from utils.errors import ModelError

logger = logging.getLogger(__name__)


def class_metrics(truth: Sequence[str], predicted: Sequence[str], class_names: Sequence[str]) -> ClassMetrics:
    """Precision/recall per class from label lists; empty denominators give 0."""
    names = list(class_names)
    k = len(names)
    if not len(truth):
        return ClassMetrics(
            class_names=names, precision=[0.0] * k, recall=[0.0] * k, support=[0] * k,
            accuracy=0.0, macro_accuracy=0.0, confusion=np.zeros((k, k), dtype=int).tolist(),
        )
    precision, recall, _, support = precision_recall_fscore_support(
        truth, predicted, labels=names, zero_division=0
    )
    present = support > 0
    return ClassMetrics(
        class_names=names,
        precision=precision.tolist(),
        recall=recall.tolist(),
        support=support.astype(int).tolist(),
        accuracy=float(accuracy_score(truth, predicted)),
        macro_accuracy=float(recall[present].mean()) if present.any() else 0.0,
        confusion=confusion_matrix(truth, predicted, labels=names).astype(int).tolist(),
    )


def evaluate(model: MlpModel, test: FeatureMatrix) -> EvalReport:
    foreign = sorted(set(test.labels) - set(model.class_names))
    if foreign:
        raise ModelError(f"labels {foreign} are not classes of the model ({', '.join(model.class_names)})")
    row_predictions = predict(model, test) if test.n_rows else np.array([], dtype=object)
    rows = class_metrics(list(test.labels), list(row_predictions), model.class_names)

    flow_truth = test.flow_labels()
    flow_predictions = predict_flows(model, test) if test.n_rows else {}
    flow_ids = list(flow_truth)
    flows = class_metrics(
        [flow_truth[f] for f in flow_ids], [flow_predictions[f] for f in flow_ids], model.class_names
    )
    logger.info(
        f"Evaluated {test.n_rows} rows / {len(flow_ids)} flows: "
        f"row acc {rows.accuracy:.3f}, flow macro acc {flows.macro_accuracy:.3f}"
    )
    return EvalReport(rows=rows, flows=flows)
