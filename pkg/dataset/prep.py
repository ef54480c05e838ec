import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import MinMaxScaler
from sklearn.utils.class_weight import compute_class_weight

from features.matrix import FeatureMatrix
from models.experiment import SplitSpec
from utils.errors import DatasetError
from utils.files import read_json, write_json

logger = logging.getLogger(__name__)

MIN_ROWS_PER_CLASS = 5


class CleanReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dropped_columns: List[str] = Field(default_factory=list)
    dropped_rows: int = 0


class ScalerParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    columns: List[str]
    minimum: List[float]
    maximum: List[float]

    def save(self, path) -> int:
        return write_json(path, self.model_dump())

    @classmethod
    def load(cls, path) -> "ScalerParams":
        return cls.model_validate(read_json(path))

    def to_scaler(self) -> MinMaxScaler:
        """A fitted MinMaxScaler holding these statistics."""
        return MinMaxScaler().fit(np.array([self.minimum, self.maximum], dtype=np.float64))


class ClassWeights(BaseModel):
    model_config = ConfigDict(extra="forbid")

    weights: Dict[str, float]

    def for_rows(self, matrix: FeatureMatrix) -> np.ndarray:
        return np.array([self.weights.get(label, 1.0) for label in matrix.labels], dtype=np.float64)


@dataclass
class PreparedData:
    train: FeatureMatrix
    validation: FeatureMatrix
    test: FeatureMatrix
    scaler: ScalerParams
    weights: ClassWeights
    clean_report: CleanReport

    @property
    def class_names(self) -> List[str]:
        return list(self.train.class_names)


def clean(matrix: FeatureMatrix) -> Tuple[FeatureMatrix, CleanReport]:
    """Drop rows with non-finite values, then columns constant on every row."""
    finite = np.isfinite(matrix.values).all(axis=1)
    dropped_rows = int((~finite).sum())
    if dropped_rows:
        logger.warning(f"Dropping {dropped_rows} rows with non-finite values")
        matrix = matrix.select_rows(finite)

    values = matrix.values
    if values.shape[0] == 0:
        raise DatasetError("no informative features: matrix has no rows")
    constant = [name for j, name in enumerate(matrix.columns) if np.all(values[:, j] == values[0, j])]
    if len(constant) == len(matrix.columns):
        raise DatasetError("no informative features: every column is constant")
    if constant:
        logger.info(f"Dropping constant columns: {', '.join(constant)}")
        matrix = matrix.select_columns([c for c in matrix.columns if c not in constant])
    return matrix, CleanReport(dropped_columns=constant, dropped_rows=dropped_rows)


def fit_scaler(train: FeatureMatrix) -> ScalerParams:
    if train.n_rows == 0:
        raise DatasetError("cannot fit a scaler on an empty training matrix")
    scaler = MinMaxScaler().fit(train.values)
    return ScalerParams(
        columns=list(train.columns),
        minimum=scaler.data_min_.tolist(),
        maximum=scaler.data_max_.tolist(),
    )


def apply_scaler(params: ScalerParams, matrix: FeatureMatrix) -> FeatureMatrix:
    """Min-max scale with training statistics; unseen rows may leave [0, 1]."""
    missing = [c for c in params.columns if c not in matrix.columns]
    if missing:
        raise DatasetError(f"matrix lacks scaled columns {missing}")
    if matrix.columns != params.columns:
        matrix = matrix.select_columns(params.columns)
    if matrix.n_rows == 0:
        return matrix
    return matrix.with_values(params.to_scaler().transform(matrix.values))


def _split_flows(flow_ids: np.ndarray, labels: Optional[np.ndarray], fraction: float, seed: int):
    seed = seed & 0xFFFFFFFF  # sklearn's random_state accepts only [0, 2**32)
    if labels is not None:
        try:
            return train_test_split(flow_ids, test_size=fraction, stratify=labels, random_state=seed)
        except ValueError as e:
            logger.warning(f"Stratified split impossible ({e}); splitting without stratification")
    try:
        return train_test_split(flow_ids, test_size=fraction, random_state=seed)
    except ValueError as e:
        raise DatasetError(f"cannot split {len(flow_ids)} flows: {e}")


def stratified_split(matrix: FeatureMatrix, spec: SplitSpec) -> Tuple[FeatureMatrix, FeatureMatrix, FeatureMatrix]:
    """Flow-atomic stratified split into (train, validation, test).

    Whole flows are split twice with train_test_split: test_fraction of them
    go to test, then validation_fraction_of_train of the rest to validation.
    """
    counts: Dict[str, int] = {}
    for label in matrix.labels:
        counts[label] = counts.get(label, 0) + 1
    short = sorted(label for label, n in counts.items() if n < MIN_ROWS_PER_CLASS)
    if short:
        raise DatasetError(
            f"class {short[0]} has {counts[short[0]]} rows, at least {MIN_ROWS_PER_CLASS} needed to split"
        )

    flow_labels = matrix.flow_labels()
    flow_ids = np.array(list(flow_labels), dtype=object)
    labels = np.array([flow_labels[f] for f in flow_ids], dtype=str) if spec.stratify_by_label else None
    rest, test_flows = _split_flows(flow_ids, labels, spec.test_fraction, spec.seed)
    rest_labels = np.array([flow_labels[f] for f in rest], dtype=str) if spec.stratify_by_label else None
    _, val_flows = _split_flows(rest, rest_labels, spec.validation_fraction_of_train, spec.seed)

    test_set, val_set = set(test_flows), set(val_flows)
    in_test = np.array([fid in test_set for fid in matrix.flow_ids], dtype=bool)
    in_val = np.array([fid in val_set for fid in matrix.flow_ids], dtype=bool)
    in_train = ~(in_test | in_val)
    train, validation, test = matrix.select_rows(in_train), matrix.select_rows(in_val), matrix.select_rows(in_test)
    logger.info(f"Split {matrix.n_rows} rows into {train.n_rows}/{validation.n_rows}/{test.n_rows}")
    for name, part in (("validation", validation), ("test", test)):
        if part.n_rows == 0:
            logger.warning(f"{name} partition is empty")
    return train, validation, test


def class_weights(train: FeatureMatrix) -> ClassWeights:
    """sklearn's balanced weights: total / (k * count) per class."""
    if train.n_rows == 0:
        raise DatasetError("cannot weight an empty training matrix")
    labels = train.labels.astype(str)
    classes = np.unique(labels)
    weights = compute_class_weight("balanced", classes=classes, y=labels)
    return ClassWeights(weights={str(c): float(w) for c, w in zip(classes, weights)})


def prepare(matrix: FeatureMatrix, split: SplitSpec) -> PreparedData:
    """clean -> split -> fit scaler on train -> scale all partitions -> weights."""
    cleaned, report = clean(matrix)
    train, validation, test = stratified_split(cleaned, split)
    scaler = fit_scaler(train)
    return PreparedData(
        train=apply_scaler(scaler, train),
        validation=apply_scaler(scaler, validation),
        test=apply_scaler(scaler, test),
        scaler=scaler,
        weights=class_weights(train),
        clean_report=report,
    )
