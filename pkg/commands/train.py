import logging
from pathlib import Path

from commands.common import execute, load_spec, resolve_seed, resolve_workers
from evaluation.experiment import train_cell
from evaluation.report import render_eval
from features.matrix import FeatureMatrix
from models.experiment import ExperimentSpec, TrainingOverrides
from models.run import RunConfig
from neuralnet.metrics import evaluate
from neuralnet.serialize import save_model
from utils.config import validate_config
from utils.files import atomic_write, write_json

logger = logging.getLogger(__name__)

TRAINING_FLAGS = ("epochs", "batch_size", "learning_rate", "alpha", "patience")


def register(subparsers):
    p = subparsers.add_parser("train", help="train the movement classifier on a feature CSV")
    p.add_argument("--features", required=True, help="feature CSV from extract")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--spec", help="experiment spec supplying split and training settings")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--patience", type=int)
    p.set_defaults(handler=run)


def spec_with_training_flags(spec: ExperimentSpec, args) -> ExperimentSpec:
    overrides = {name: getattr(args, name) for name in TRAINING_FLAGS if getattr(args, name, None) is not None}
    if not overrides:
        return spec
    training = validate_config({**spec.training.model_dump(), **overrides}, TrainingOverrides, source="training flags")
    return spec.model_copy(update={"training": training})


def run(args) -> int:
    spec = load_spec(args.spec) if args.spec else ExperimentSpec()
    spec = spec_with_training_flags(spec, args)
    seed = resolve_seed(args, spec.seed)
    inputs = [Path(args.features)] + ([Path(args.spec)] if args.spec else [])
    config = RunConfig(
        command="train",
        inputs=inputs,
        output=Path(args.out),
        spec=spec,
        seed=seed,
        workers=resolve_workers(args),
        verbosity=args.verbosity,
    )

    def work():
        out = config.output
        matrix = FeatureMatrix.read_csv(args.features)
        trained = train_cell(matrix, spec, seed)
        model, data, curve = trained.model, trained.data, trained.curve
        report = evaluate(model, data.test)
        save_model(model, out / "model.json")
        data.scaler.save(out / "scaler.json")
        write_json(out / "curve.json", curve.model_dump())
        write_json(out / "eval.json", report.model_dump())
        atomic_write(out / "eval.md", render_eval(report, "held-out test partition"))
        counts = {
            "rows": matrix.n_rows,
            "train_rows": data.train.n_rows,
            "validation_rows": data.validation.n_rows,
            "test_rows": data.test.n_rows,
            "dropped_columns": data.clean_report.dropped_columns,
            "hidden_size": model.config.hidden_size,
            "best_epoch": curve.best_epoch,
            "epochs_run": curve.epochs_run,
        }
        written = [out / name for name in ("model.json", "scaler.json", "curve.json", "eval.json", "eval.md")]
        return counts, written

    return execute(config, work)
