import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Union

from utils.errors import RoboTraceError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def ensure_writable(path: PathLike) -> Path:
    """Create the parent directory and check it accepts new files."""
    target = Path(path)
    parent = target.parent if str(target.parent) else Path(".")
    try:
        parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise RoboTraceError(f"cannot create output directory {parent}: {e}")
    if not os.access(parent, os.W_OK):
        raise RoboTraceError(f"output directory {parent} is not writable")
    if target.exists() and target.is_dir():
        raise RoboTraceError(f"output path {target} is a directory")
    return target


def atomic_write(path: PathLike, data: Union[str, bytes]) -> int:
    """Write via a temp file in the same directory, then rename over the target."""
    target = ensure_writable(path)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp_name, target)
    except OSError as e:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise RoboTraceError(f"failed writing {target}: {e}")
    logger.debug(f"Wrote {len(payload)} bytes to {target}")
    return len(payload)


def write_json(path: PathLike, document: Any) -> int:
    return atomic_write(path, json.dumps(document, indent=2, sort_keys=True) + "\n")


def read_json(path: PathLike) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise RoboTraceError(f"file not found: {path}")
    except json.JSONDecodeError as e:
        raise RoboTraceError(f"{path} is not valid JSON: line {e.lineno}: {e.msg}")
