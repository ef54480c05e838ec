import logging
from typing import Dict, List, Optional, Sequence, Tuple

from countermeasures.transforms import TransformParams, apply_transform
from dataset.prep import apply_scaler
from evaluation.experiment import build_matrix_for, train_cell
from features.extract import extract_features, rows_to_matrix
from models.experiment import ExperimentSpec, GridSpec
from models.robot import MOVEMENT_NAMES, LinkParams, MovementClass, RobotModel, TlsChannelModel
from models.trace import UNKNOWN_LABEL, FlowTrace
from models.workflow import ReconstructionResult, RecoveryReport, RecoveryRow, WorkflowSampling, WorkflowTemplate
from neuralnet.inference import predict_flow
from neuralnet.mlp import MlpModel
from traffic.flows import DEFAULT_IDLE_GAP_S
from utils.errors import DomainError
from workflows.recon import generate_workflow_trace, reconstruct, recovery_rate, segment_capture, stitch_capture

logger = logging.getLogger(__name__)


def classifier_spec(sampling: WorkflowSampling, link: LinkParams, transform: str = "none",
                    samples_per_cell: int = 20, base: Optional[ExperimentSpec] = None) -> ExperimentSpec:
    """Training spec whose grid covers every distance and speed the workflows draw from."""
    base = base or ExperimentSpec()
    grid = GridSpec(
        movements=MovementClass.ordered(),
        distances_mm=list(sampling.distances_mm),
        speed_codes=list(sampling.speed_codes),
        repetitions=sampling.repetitions,
        command_interval_s=sampling.command_interval_s,
        free_mode=sampling.free_mode,
        link=link,
        robot=base.grid.robot,
        tls=base.grid.tls,
    )
    return base.model_copy(
        update={
            "name": "workflow-classifier",
            "grid": grid,
            "samples_per_cell": samples_per_cell,
            "sweep": None,
            "channel_transform": transform,
            "open_world_unknowns": 0,
        }
    )


def train_movement_classifier(spec: ExperimentSpec, seed: int, workers: int = 1) -> MlpModel:
    matrix, n_flows = build_matrix_for(spec, seed, workers)
    logger.info(f"Training movement classifier on {n_flows} flows")
    return train_cell(matrix, spec, seed).model


def classify_flow(model: MlpModel, flow: FlowTrace) -> Optional[str]:
    """Majority-vote movement label for one flow, None when it yields no rows."""
    rows = extract_features(flow)
    if not rows:
        return None
    matrix = rows_to_matrix(rows)
    if model.scaler is not None:
        matrix = apply_scaler(model.scaler, matrix)
    return predict_flow(model, matrix)


def position_changes(template: WorkflowTemplate) -> str:
    low, high = template.position_change_range
    return f"{low}-{high}" if low != high else str(low)


def run_reconstruction(
    templates: Sequence[WorkflowTemplate],
    sampling: WorkflowSampling,
    link: LinkParams,
    samples_per_workflow: int,
    seed: int,
    model: Optional[MlpModel] = None,
    oracle: bool = False,
    transform: str = "none",
    params: TransformParams = None,
    continuous: bool = False,
    idle_gap_s: float = DEFAULT_IDLE_GAP_S,
    tls: Optional[TlsChannelModel] = None,
    robot: Optional[RobotModel] = None,
) -> RecoveryReport:
    """Generate workflow samples, label each movement flow, reconstruct and score.

    Oracle mode feeds the true movement labels; otherwise `model` classifies
    each flow. Continuous mode stitches a sample's flows into one capture and
    re-segments it at idle gaps before classification.
    """
    if not oracle and model is None:
        raise DomainError("a trained model is required unless oracle mode is on")
    results: List[Tuple[ReconstructionResult, str]] = []
    confusion: Dict[str, Dict[str, int]] = {t.name: {} for t in templates}
    movement_hits, movement_total = 0, 0

    for template in templates:
        for sample in range(samples_per_workflow):
            flows, truth = generate_workflow_trace(template, sampling, link, seed, sample, tls, robot)
            true_labels = [f.label for f in flows]
            flows = [apply_transform(f, transform, params) for f in flows]
            if oracle:
                predicted = list(true_labels)
            else:
                if continuous:
                    flows = segment_capture(stitch_capture(flows, idle_gap_s + 1.0), idle_gap_s)
                predicted = [label for label in (classify_flow(model, f) for f in flows) if label is not None]
                if len(predicted) == len(true_labels):
                    movement_hits += sum(p == t for p, t in zip(predicted, true_labels))
                    movement_total += len(true_labels)

            sequence = [MovementClass(label) for label in predicted if label in MOVEMENT_NAMES]
            if sequence:
                result = reconstruct(sequence, templates)
            else:
                logger.warning(f"{template.name} sample {sample}: no movement could be labeled")
                result = ReconstructionResult(predicted=UNKNOWN_LABEL, distance=0, matched_sequence=())
            results.append((result, truth))
            row = confusion[truth]
            row[result.predicted] = row.get(result.predicted, 0) + 1

    rates = recovery_rate(results) if results else {}
    rows = []
    for template in templates:
        scored = [r for r, truth in results if truth == template.name]
        rows.append(
            RecoveryRow(
                workflow=template.name,
                position_changes=position_changes(template),
                samples=len(scored),
                correct=sum(r.predicted == template.name for r in scored),
                recovery_rate=rates.get(template.name),
            )
        )
    report = RecoveryReport(
        mode="oracle" if oracle else ("continuous" if continuous else "classifier"),
        transform=transform,
        seed=seed,
        rows=rows,
        movement_accuracy=movement_hits / movement_total if movement_total else None,
        confusion=confusion,
    )
    logger.info(f"Workflow reconstruction ({report.mode}): mean recovery {report.mean_recovery:.3f}")
    return report
