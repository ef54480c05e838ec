import logging
from pathlib import Path

from commands.common import execute, load_spec, output_dir, resolve_seed, resolve_workers
from evaluation.experiment import transform_params
from evaluation.report import render_recovery
from models.defense import TRANSFORM_NAMES
from models.experiment import ExperimentSpec
from models.robot import LinkParams
from models.run import RunConfig
from models.workflow import WorkflowSampling
from neuralnet.serialize import save_model
from traffic.flows import DEFAULT_IDLE_GAP_S
from utils.config import validate_config
from utils.files import atomic_write, write_json
from workflows.pipeline import classifier_spec, run_reconstruction, train_movement_classifier
from workflows.templates import builtin_templates, load_templates

logger = logging.getLogger(__name__)


def register(subparsers):
    p = subparsers.add_parser("reconstruct", help="reconstruct warehousing workflows from classified movements")
    p.add_argument("--workflows", type=int, default=100, help="samples per workflow")
    p.add_argument("--out", help="output directory (default: <output dir>/reconstruct)")
    p.add_argument("--spec", help="experiment spec supplying link, training and transform settings")
    p.add_argument("--templates", help="JSON list of workflow templates replacing the built-in four")
    p.add_argument("--oracle", action="store_true", help="feed true movement labels instead of a classifier")
    p.add_argument("--transform", choices=TRANSFORM_NAMES, help="channel transform on every workflow flow")
    p.add_argument("--delay-ms", type=float, help="one-way link delay")
    p.add_argument("--loss-pct", type=float, help="per-packet loss percentage")
    p.add_argument("--train-samples", type=int, default=20, help="classifier training flows per grid cell")
    p.add_argument("--continuous", action="store_true", help="stitch each sample into one capture and re-segment it")
    p.add_argument("--idle-gap", type=float, default=DEFAULT_IDLE_GAP_S)
    p.set_defaults(handler=run)


def run(args) -> int:
    base = load_spec(args.spec) if args.spec else ExperimentSpec()
    link_updates = {k: v for k, v in (("delay_ms", args.delay_ms), ("loss_pct", args.loss_pct)) if v is not None}
    link = validate_config({**base.grid.link.model_dump(), **link_updates}, LinkParams, source="link flags")
    transform = args.transform or base.channel_transform
    base = base.model_copy(update={"channel_transform": transform})
    seed = resolve_seed(args, base.seed)
    templates = load_templates(args.templates) if args.templates else builtin_templates()
    sampling = WorkflowSampling()
    spec = classifier_spec(sampling, link, transform, args.train_samples, base)
    inputs = [Path(p) for p in (args.spec, args.templates) if p]
    config = RunConfig(
        command="reconstruct",
        inputs=inputs,
        output=output_dir(args, "reconstruct"),
        spec=spec,
        seed=seed,
        workers=resolve_workers(args),
        verbosity=args.verbosity,
    )

    def work():
        out = config.output
        written = []
        model = None
        if not args.oracle:
            model = train_movement_classifier(spec, seed, config.workers)
            save_model(model, out / "model.json")
            written.append(out / "model.json")
        report = run_reconstruction(
            templates,
            sampling,
            link,
            args.workflows,
            seed,
            model=model,
            oracle=args.oracle,
            transform=transform,
            params=transform_params(base),
            continuous=args.continuous,
            idle_gap_s=args.idle_gap,
            tls=spec.grid.tls,
            robot=spec.grid.robot,
        )
        write_json(out / "recovery.json", report.model_dump())
        atomic_write(out / "recovery.md", render_recovery(report, "markdown"))
        atomic_write(out / "recovery.csv", render_recovery(report, "csv"))
        written += [out / "recovery.json", out / "recovery.md", out / "recovery.csv"]
        counts = {
            "workflows": len(templates),
            "samples_per_workflow": args.workflows,
            "recovery": {r.workflow: r.recovery_rate for r in report.rows},
            "mean_recovery": report.mean_recovery,
        }
        return counts, written

    return execute(config, work)
