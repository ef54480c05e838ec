"""
Experiment grids: generate, transform, extract, prepare, train and evaluate
one model per sweep cell (or one pooled model across cells).
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from countermeasures.transforms import TransformParams, transform_flows
from dataset.prep import PreparedData, prepare
from emulator.dataset import generate_dataset
from evaluation.importance import permutation_importance
from evaluation.open_world import open_world_relabel
from features.extract import extract_many
from features.matrix import FeatureMatrix
from models.experiment import ExperimentSpec
from models.report import CellResult, SweepReport, TrainingCurve
from models.trace import FlowTrace
from neuralnet.metrics import evaluate
from neuralnet.mlp import MlpModel
from neuralnet.train import config_for, train
from utils.config import DEFAULT_SEED
from utils.errors import DomainError, RoboTraceError, StageError
from utils.seeding import derive_seed

logger = logging.getLogger(__name__)

BASELINE_KEY = "baseline"


@dataclass
class TrainedCell:
    model: MlpModel
    data: PreparedData
    curve: TrainingCurve


def cell_key(parameter: Optional[str], value) -> str:
    if parameter is None:
        return BASELINE_KEY
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    return f"{parameter}={value}"


def transform_params(spec: ExperimentSpec) -> TransformParams:
    return {
        "fixed-cell": spec.fixed_cell,
        "constant-rate": spec.constant_rate,
        "variable-inter-arrival": spec.vit,
    }.get(spec.channel_transform)


def cells_of(spec: ExperimentSpec) -> List[Tuple[str, object, ExperimentSpec]]:
    if spec.sweep is None:
        return [(BASELINE_KEY, None, spec)]
    parameter = spec.sweep.parameter
    return [(cell_key(parameter, v), v, spec.with_value(parameter, v)) for v in spec.sweep.values]


def build_flows(spec: ExperimentSpec, seed: int, workers: int = 1) -> List[FlowTrace]:
    """Emulated flows for the spec's grid with its channel transform applied."""
    g = spec.grid
    flows = generate_dataset(g.cells(), spec.samples_per_cell, seed, g.tls, g.robot, workers)
    return transform_flows(flows, spec.channel_transform, transform_params(spec))


def build_matrix_for(spec: ExperimentSpec, seed: int, workers: int = 1) -> Tuple[FeatureMatrix, int]:
    flows = build_flows(spec, seed, workers)
    matrix = extract_many(flows, workers)
    return open_world_relabel(matrix, spec.open_world_unknowns), len(flows)


def train_cell(matrix: FeatureMatrix, spec: ExperimentSpec, seed: int) -> TrainedCell:
    """prepare -> size the network -> train; the fitted scaler rides on the model."""
    split = spec.split.model_copy(update={"seed": derive_seed(seed, "split", spec.split.seed)})
    data = prepare(matrix, split)
    config = config_for(data.train, spec.training, derive_seed(seed, "train"))
    model, curve = train(config, data.train, data.validation, data.weights)
    model.scaler = data.scaler
    return TrainedCell(model=model, data=data, curve=curve)


def _result(key, value, spec, trained: TrainedCell, test: FeatureMatrix, n_flows: int, seed: int) -> CellResult:
    report = evaluate(trained.model, test)
    importance = permutation_importance(
        trained.model, test, spec.importance_repeats, derive_seed(seed, "importance", key)
    )
    curve = trained.curve
    return CellResult(
        key=key,
        value=value,
        transform=spec.channel_transform,
        n_flows=n_flows,
        n_train_rows=trained.data.train.n_rows,
        n_validation_rows=trained.data.validation.n_rows,
        n_test_rows=test.n_rows,
        dropped_columns=trained.data.clean_report.dropped_columns,
        hidden_size=trained.model.config.hidden_size,
        best_epoch=curve.best_epoch,
        epochs_run=curve.epochs_run,
        final_train_loss=curve.train_loss[-1] if curve.train_loss else 0.0,
        best_validation_accuracy=max(curve.validation_accuracy, default=0.0),
        report=report,
        importance=importance,
    )


def run_cell(key: str, value, spec: ExperimentSpec, seed: int, workers: int = 1) -> CellResult:
    logger.info(f"Cell {key}: {len(spec.grid.cells())} grid points x {spec.samples_per_cell} samples")
    matrix, n_flows = build_matrix_for(spec, seed, workers)
    trained = train_cell(matrix, spec, seed)
    return _result(key, value, spec, trained, trained.data.test, n_flows, seed)


def _run_pooled(spec: ExperimentSpec, seed: int, workers: int) -> List[CellResult]:
    if spec.sweep is not None and spec.sweep.parameter == "open_world_unknowns":
        raise DomainError("pooled training needs one label vocabulary; open_world_unknowns cannot be swept")
    parts, sizes = [], {}
    cells = cells_of(spec)
    for key, _, cell_spec in cells:
        flows = [replace(f, flow_id=f"{key}/{f.flow_id}") for f in build_flows(cell_spec, seed, workers)]
        parts.append(open_world_relabel(extract_many(flows, workers), cell_spec.open_world_unknowns))
        sizes[key] = len(flows)
    trained = train_cell(FeatureMatrix.concat(parts), spec, seed)
    results = []
    test = trained.data.test
    for key, value, cell_spec in cells:
        mine = np.array([str(fid).startswith(f"{key}/") for fid in test.flow_ids], dtype=bool)
        results.append(_result(key, value, cell_spec, trained, test.select_rows(mine), sizes[key], seed))
    return results


def run_experiment(spec: ExperimentSpec, workers: int = 1, seed: Optional[int] = None) -> SweepReport:
    """Run every cell of the spec; identical spec and seed give identical reports.

    Cells share the master seed so sweep columns compare matched samples.
    """
    seed = seed if seed is not None else (spec.seed if spec.seed is not None else DEFAULT_SEED)
    parameter = spec.sweep.parameter if spec.sweep else None
    logger.info(f"Experiment {spec.name}: sweep {parameter or 'none'}, seed {seed}, pooled={spec.pooled}")

    if spec.pooled:
        try:
            cells = _run_pooled(spec, seed, workers)
        except RoboTraceError as e:
            logger.error(f"Pooled experiment {spec.name} failed: {e}")
            raise StageError("sweep/pooled", e)
        return SweepReport(name=spec.name, parameter=parameter, seed=seed, cells=cells)

    results = []
    for key, value, cell_spec in cells_of(spec):
        try:
            results.append(run_cell(key, value, cell_spec, seed, workers))
        except RoboTraceError as e:
            logger.error(f"Cell {key} failed: {e}")
            raise StageError(f"sweep/cell {key}", e)
    return SweepReport(name=spec.name, parameter=parameter, seed=seed, cells=results)
