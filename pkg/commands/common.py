import json
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from db.init import SessionLocal
from models.experiment import ExperimentSpec, GridSpec
from models.run import RunConfig, RunRecord
from utils.config import DEFAULT_SEED, OUTPUT_DIR, WORKERS, load_config, validate_config
from utils.errors import ConfigError, RoboTraceError
from utils.files import ensure_writable, read_json, write_json

logger = logging.getLogger(__name__)

# Work returns (counts, written paths)
Work = Callable[[], Tuple[Dict, List[Path]]]


def resolve_seed(args, config_seed: Optional[int] = None) -> int:
    """--seed flag, then the config's seed, then ROBOTRACE_SEED."""
    if getattr(args, "seed", None) is not None:
        return args.seed
    if config_seed is not None:
        return config_seed
    return DEFAULT_SEED


def resolve_workers(args) -> int:
    workers = getattr(args, "workers", None)
    return max(1, workers if workers is not None else WORKERS)


def load_spec(path) -> ExperimentSpec:
    return load_config(path, ExperimentSpec)


def load_grid_document(path) -> Tuple[GridSpec, Optional[ExperimentSpec]]:
    """A grid file may hold a bare grid or a whole experiment spec."""
    try:
        document = read_json(path)
    except RoboTraceError as e:
        raise ConfigError(str(e))
    if isinstance(document, dict) and "grid" in document:
        spec = validate_config(document, ExperimentSpec, source=str(path))
        return spec.grid, spec
    return validate_config(document, GridSpec, source=str(path)), None


def check_inputs(paths) -> None:
    for path in paths:
        if not Path(path).is_file():
            raise RoboTraceError(f"input not found: {path}")


def manifest_path(output: Path) -> Path:
    if output.suffix == "":
        return output / "manifest.json"
    return output.with_name(output.name + ".manifest.json")


def write_manifest(run: RunConfig, counts: Dict, outputs: List[Path]) -> Path:
    """Command, resolved config, seed and counts; no wall-clock fields."""
    target = manifest_path(run.output)
    document = {
        "command": run.command,
        "seed": run.seed,
        "inputs": [str(p) for p in run.inputs],
        "output": str(run.output),
        "spec": run.spec.model_dump(mode="json") if run.spec else None,
        "counts": counts,
        "outputs": sorted(str(p) for p in outputs),
    }
    write_json(target, document)
    return target


def record_run(run: RunConfig, outputs: List[Path], status: str, message: str = "") -> None:
    db = SessionLocal()
    try:
        db.add(
            RunRecord(
                command=run.command,
                seed=run.seed,
                config=json.dumps(run.model_dump(mode="json"), sort_keys=True),
                outputs=json.dumps([str(p) for p in outputs]),
                status=status,
                message=message[:500],
            )
        )
        db.commit()
    except Exception as e:
        db.rollback()
        logger.warning(f"Could not record run in registry: {e}")
    finally:
        db.close()


def execute(run: RunConfig, work: Work) -> int:
    """Check the output location, do the work, write the manifest, record the run."""
    if run.output is not None:
        ensure_writable(manifest_path(run.output))
    check_inputs(run.inputs)
    logger.info(f"{run.command}: seed {run.seed}, workers {run.workers}")
    try:
        counts, outputs = work()
        if run.output is not None:
            outputs = outputs + [write_manifest(run, counts, outputs)]
    except RoboTraceError as e:
        record_run(run, [], "FAILED", str(e))
        raise
    record_run(run, outputs, "OK")
    logger.info(f"{run.command}: wrote {len(outputs)} files")
    return 0


def output_dir(args, name: str) -> Path:
    """--out when given, else ROBOTRACE_OUTPUT_DIR/<name>."""
    return Path(args.out) if getattr(args, "out", None) else Path(OUTPUT_DIR) / name
