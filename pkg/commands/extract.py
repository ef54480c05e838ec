import logging
from pathlib import Path

from commands.common import execute, resolve_seed, resolve_workers
from evaluation.open_world import open_world_relabel
from features.extract import HANDSHAKE_GAP_S, extract_many
from models.run import RunConfig
from traffic.canonical import load_traces
from traffic.validate import assert_valid

logger = logging.getLogger(__name__)


def register(subparsers):
    p = subparsers.add_parser("extract", help="turn canonical traces into a feature matrix CSV")
    p.add_argument("--traces", required=True, help="canonical trace file")
    p.add_argument("--out", required=True, help="feature CSV to write")
    p.add_argument("--handshake-gap", type=float, default=HANDSHAKE_GAP_S,
                   help="gap that marks the first command when flows carry no metadata")
    p.add_argument("--unknowns", type=int, default=0, help="relabel the last N movement classes as Unknown")
    p.set_defaults(handler=run)


def run(args) -> int:
    config = RunConfig(
        command="extract",
        inputs=[Path(args.traces)],
        output=Path(args.out),
        seed=resolve_seed(args),
        workers=resolve_workers(args),
        verbosity=args.verbosity,
    )

    def work():
        flows = load_traces(args.traces)
        assert_valid(flows)
        matrix = open_world_relabel(extract_many(flows, config.workers, args.handshake_gap), args.unknowns)
        matrix.write_csv(config.output)
        counts = {"flows": len(flows), "rows": matrix.n_rows, "classes": list(matrix.class_names)}
        return counts, [config.output]

    return execute(config, work)
