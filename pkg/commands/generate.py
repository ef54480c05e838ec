import logging
from pathlib import Path

from commands.common import execute, load_grid_document, resolve_seed, resolve_workers
from emulator.dataset import generate_dataset
from models.experiment import ExperimentSpec
from models.run import RunConfig
from traffic.canonical import save_traces

logger = logging.getLogger(__name__)


def register(subparsers):
    p = subparsers.add_parser("generate", help="emulate labeled control sessions over a grid")
    p.add_argument("--grid", required=True, help="JSON grid or experiment spec")
    p.add_argument("--out", required=True, help="canonical trace file to write")
    p.add_argument("--samples", type=int, help="samples per grid cell (overrides the config)")
    p.set_defaults(handler=run)


def run(args) -> int:
    grid, spec = load_grid_document(args.grid)
    spec = spec or ExperimentSpec(grid=grid)
    seed = resolve_seed(args, spec.seed)
    samples = args.samples if args.samples is not None else spec.samples_per_cell
    spec = spec.model_copy(update={"samples_per_cell": samples, "seed": seed})
    config = RunConfig(
        command="generate",
        inputs=[Path(args.grid)],
        output=Path(args.out),
        spec=spec,
        seed=seed,
        workers=resolve_workers(args),
        verbosity=args.verbosity,
    )

    def work():
        cells = grid.cells()
        flows = generate_dataset(cells, samples, seed, grid.tls, grid.robot, config.workers)
        save_traces(flows, config.output)
        counts = {
            "cells": len(cells),
            "samples_per_cell": samples,
            "flows": len(flows),
            "packets": sum(len(f.packets) for f in flows),
            "failed_flows": sum(1 for f in flows if f.meta and f.meta.failed),
        }
        return counts, [config.output]

    return execute(config, work)
