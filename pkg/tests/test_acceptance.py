"""End-to-end trend checks on full-size synthetic datasets. Run with `pytest -m slow`."""
import time
from pathlib import Path

import pytest

from evaluation.experiment import run_experiment, transform_params
from models.experiment import ExperimentSpec
from models.robot import LinkParams
from models.trace import UNKNOWN_LABEL
from models.workflow import WorkflowSampling
from utils.config import load_config
from workflows.pipeline import classifier_spec, run_reconstruction, train_movement_classifier
from workflows.templates import builtin_templates

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SEED = 2024


def config(name, **updates) -> ExperimentSpec:
    spec = load_config(CONFIGS / f"{name}.json", ExperimentSpec)
    return ExperimentSpec.model_validate({**spec.model_dump(), **updates})


def flow_accuracy(report, key):
    return report.cell(key).report.flows.macro_accuracy


def test_baseline_is_well_above_chance():
    started = time.perf_counter()
    report = run_experiment(config("baseline", samples_per_cell=500), seed=SEED)
    assert flow_accuracy(report, "baseline") >= 0.55
    assert time.perf_counter() - started < 300


def test_delay_makes_movements_separable():
    spec = config("delay", sweep={"parameter": "delay_ms", "values": [0, 100]})
    report = run_experiment(spec, seed=SEED)
    assert flow_accuracy(report, "delay_ms=100") >= flow_accuracy(report, "delay_ms=0")
    assert flow_accuracy(report, "delay_ms=100") >= 0.90


def test_loss_does_not_hide_movements():
    spec = config("loss", sweep={"parameter": "loss_pct", "values": [0, 25]})
    report = run_experiment(spec, seed=SEED)
    assert flow_accuracy(report, "loss_pct=25") >= flow_accuracy(report, "loss_pct=0")


def test_fixed_cells_blunt_the_classifier():
    padded = run_experiment(config("fixed_cell"), seed=SEED)
    plain = run_experiment(config("fixed_cell", channel_transform="none"), seed=SEED)
    assert flow_accuracy(plain, "baseline") - flow_accuracy(padded, "baseline") >= 0.15
    assert abs(padded.cell("baseline").importance["tls_record_len"]) < 0.02
    assert min(padded.cell("baseline").importance.values()) >= -0.05


def test_unknown_recall_grows_with_hidden_classes():
    spec = config("open_world", sweep={"parameter": "open_world_unknowns", "values": [2, 6]})
    report = run_experiment(spec, seed=SEED)
    recall = {c.key: c.report.flows.recall_of(UNKNOWN_LABEL) for c in report.cells}
    assert recall["open_world_unknowns=6"] >= recall["open_world_unknowns=2"]


def reconstruction_recovery(link, transform="none", base_name="delay"):
    sampling = WorkflowSampling()
    spec = classifier_spec(sampling, link, transform=transform, base=config(base_name))
    model = train_movement_classifier(spec, SEED)
    report = run_reconstruction(builtin_templates(), sampling, link, 25, SEED, model=model, transform=transform,
                                params=transform_params(spec), tls=spec.grid.tls, robot=spec.grid.robot)
    return report.mean_recovery


def test_classifier_driven_reconstruction():
    assert reconstruction_recovery(LinkParams(delay_ms=100)) >= 0.80


def test_fixed_cells_cut_workflow_recovery():
    link = LinkParams(delay_ms=100)
    plain = reconstruction_recovery(link, base_name="fixed_cell")
    padded = reconstruction_recovery(link, transform="fixed-cell", base_name="fixed_cell")
    assert plain >= 1.5 * padded
