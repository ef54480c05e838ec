import logging
from pathlib import Path

from commands.common import execute, load_spec, output_dir, resolve_seed, resolve_workers
from countermeasures.transforms import real_payload_total, transform_flows
from dataset.prep import apply_scaler
from evaluation.experiment import run_experiment, transform_params
from evaluation.report import render_comparison, render_eval, write_reports
from features.extract import extract_many
from models.defense import TRANSFORM_NAMES
from models.experiment import ExperimentSpec
from models.run import RunConfig
from neuralnet.metrics import evaluate
from neuralnet.serialize import load_model
from traffic.canonical import load_traces, save_traces
from utils.errors import ConfigError
from utils.files import atomic_write, write_json

logger = logging.getLogger(__name__)


def register(subparsers):
    p = subparsers.add_parser("defend", help="apply a padding countermeasure and measure its effect")
    p.add_argument("--transform", required=True, choices=[t for t in TRANSFORM_NAMES if t != "none"])
    p.add_argument("--spec", help="experiment spec; runs it with and without the transform")
    p.add_argument("--traces", help="canonical trace file to transform instead of running an experiment")
    p.add_argument("--model", help="with --traces: evaluate this model before and after the transform")
    p.add_argument("--out", help="output directory (default: <output dir>/defend-<transform>)")
    p.add_argument("--samples", type=int, help="samples per grid cell (overrides the spec)")
    p.add_argument("--formats", nargs="*", default=["svg"], choices=["svg", "pdf"])
    p.set_defaults(handler=run)


def _spec_work(config: RunConfig, spec: ExperimentSpec, transform: str, formats):
    def work():
        out = config.output
        before = run_experiment(spec.model_copy(update={"channel_transform": "none"}), config.workers, config.seed)
        after = run_experiment(spec.model_copy(update={"channel_transform": transform}), config.workers, config.seed)
        written = write_reports(before, out / "before", formats)
        written += write_reports(after, out / "after", formats)
        atomic_write(out / "comparison.md", render_comparison(before, after, transform))
        written.append(out / "comparison.md")
        counts = {
            "cells": len(before.cells),
            "before": {c.key: c.report.flows.macro_accuracy for c in before.cells},
            "after": {c.key: c.report.flows.macro_accuracy for c in after.cells},
        }
        return counts, written

    return work


def _trace_work(config: RunConfig, spec: ExperimentSpec, transform: str, traces: str, model_path):
    def work():
        out = config.output
        flows = load_traces(traces)
        padded = transform_flows(flows, transform, transform_params(spec))
        save_traces(padded, out / "transformed.jsonl")
        written = [out / "transformed.jsonl"]
        counts = {
            "flows": len(flows),
            "packets_before": sum(len(f.packets) for f in flows),
            "packets_after": sum(len(f.packets) for f in padded),
            "real_bytes": sum(real_payload_total(f) for f in flows),
        }
        if model_path:
            model = load_model(model_path)
            for name, batch in (("before", flows), ("after", padded)):
                matrix = extract_many(batch, config.workers)
                if model.scaler is not None:
                    matrix = apply_scaler(model.scaler, matrix)
                report = evaluate(model, matrix)
                write_json(out / f"eval-{name}.json", report.model_dump())
                atomic_write(out / f"eval-{name}.md", render_eval(report, f"{name} {transform}"))
                written += [out / f"eval-{name}.json", out / f"eval-{name}.md"]
                counts[f"accuracy_{name}"] = report.flows.macro_accuracy
        return counts, written

    return work


def run(args) -> int:
    if not args.spec and not args.traces:
        raise ConfigError("defend needs --spec or --traces")
    spec = load_spec(args.spec) if args.spec else ExperimentSpec()
    if args.samples is not None:
        spec = spec.model_copy(update={"samples_per_cell": args.samples})
    seed = resolve_seed(args, spec.seed)
    spec = spec.model_copy(update={"seed": seed, "channel_transform": args.transform})
    inputs = [Path(p) for p in (args.spec, args.traces, args.model) if p]
    config = RunConfig(
        command="defend",
        inputs=inputs,
        output=output_dir(args, f"defend-{args.transform}"),
        spec=spec,
        seed=seed,
        workers=resolve_workers(args),
        verbosity=args.verbosity,
    )
    if args.traces:
        work = _trace_work(config, spec, args.transform, args.traces, args.model)
    else:
        work = _spec_work(config, spec, args.transform, args.formats)
    return execute(config, work)
