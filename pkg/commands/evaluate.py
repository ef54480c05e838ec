import logging
from pathlib import Path

from commands.common import execute, resolve_seed, resolve_workers
from dataset.prep import apply_scaler
from evaluation.importance import permutation_importance
from evaluation.report import render_eval
from features.matrix import FeatureMatrix
from models.run import RunConfig
from neuralnet.metrics import evaluate
from neuralnet.serialize import load_model
from utils.files import atomic_write, write_json
from utils.seeding import derive_seed

logger = logging.getLogger(__name__)


def register(subparsers):
    p = subparsers.add_parser("eval", help="evaluate a trained model on a feature CSV")
    p.add_argument("--model", required=True, help="model.json from train")
    p.add_argument("--features", required=True, help="unscaled feature CSV from extract")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--importance-repeats", type=int, default=0, help="also compute permutation importance")
    p.set_defaults(handler=run)


def run(args) -> int:
    config = RunConfig(
        command="eval",
        inputs=[Path(args.model), Path(args.features)],
        output=Path(args.out),
        seed=resolve_seed(args),
        workers=resolve_workers(args),
        verbosity=args.verbosity,
    )

    def work():
        out = config.output
        model = load_model(args.model)
        matrix = FeatureMatrix.read_csv(args.features)
        if model.scaler is not None:
            matrix = apply_scaler(model.scaler, matrix)
        report = evaluate(model, matrix)
        written = [out / "eval.json", out / "eval.md"]
        write_json(out / "eval.json", report.model_dump())
        atomic_write(out / "eval.md", render_eval(report, Path(args.features).name))
        counts = {"rows": matrix.n_rows, "flows": len(matrix.flow_groups()), "accuracy": report.rows.accuracy}
        if args.importance_repeats > 0:
            importance = permutation_importance(
                model, matrix, args.importance_repeats, derive_seed(config.seed, "importance")
            )
            write_json(out / "importance.json", importance)
            written.append(out / "importance.json")
        return counts, written

    return execute(config, work)
