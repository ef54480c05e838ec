import logging
from pathlib import Path

from commands.common import execute, load_spec, output_dir, resolve_seed, resolve_workers
from commands.train import spec_with_training_flags
from evaluation.experiment import run_experiment
from evaluation.report import write_reports
from models.run import RunConfig

logger = logging.getLogger(__name__)


def register(subparsers):
    p = subparsers.add_parser("sweep", help="run an experiment grid and write its reports")
    p.add_argument("--spec", required=True, help="experiment spec JSON")
    p.add_argument("--out", help="output directory (default: <output dir>/<spec name>)")
    p.add_argument("--samples", type=int, help="samples per grid cell (overrides the spec)")
    p.add_argument("--pooled", action="store_true", help="train one model across all cells")
    p.add_argument("--formats", nargs="*", default=["svg"], choices=["svg", "pdf"], help="extra report formats")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--patience", type=int)
    p.set_defaults(handler=run)


def run(args) -> int:
    spec = spec_with_training_flags(load_spec(args.spec), args)
    updates = {}
    if args.samples is not None:
        updates["samples_per_cell"] = args.samples
    if args.pooled:
        updates["pooled"] = True
    seed = resolve_seed(args, spec.seed)
    updates["seed"] = seed
    spec = spec.model_copy(update=updates)
    config = RunConfig(
        command="sweep",
        inputs=[Path(args.spec)],
        output=output_dir(args, spec.name),
        spec=spec,
        seed=seed,
        workers=resolve_workers(args),
        verbosity=args.verbosity,
    )

    def work():
        report = run_experiment(spec, config.workers, seed)
        written = write_reports(report, config.output, args.formats)
        counts = {
            "cells": len(report.cells),
            "flows": sum(c.n_flows for c in report.cells),
            "flow_macro_accuracy": {c.key: c.report.flows.macro_accuracy for c in report.cells},
        }
        return counts, written

    return execute(config, work)
