import os
from dotenv import load_dotenv
from pydantic import ValidationError

from utils.errors import ConfigError, RoboTraceError
from utils.files import read_json

load_dotenv()

DEFAULT_SEED = int(os.getenv("ROBOTRACE_SEED", "7"))
OUTPUT_DIR = os.getenv("ROBOTRACE_OUTPUT_DIR", "output")
LOG_LEVEL = os.getenv("ROBOTRACE_LOG_LEVEL", "INFO").upper()
WORKERS = int(os.getenv("ROBOTRACE_WORKERS", "1"))

RUN_DATABASE_URL = os.getenv("RUN_DATABASE_URL")
if RUN_DATABASE_URL is None:
    # Local file next to the working directory unless told otherwise
    RUN_DATABASE_URL = "sqlite:///robotrace_runs.db"


def load_config(path, model_cls):
    """Read a JSON document and validate it into model_cls.

    Validation problems surface as ConfigError naming the dotted key path,
    e.g. ``grid.distances_mm.0``.
    """
    try:
        document = read_json(path)
    except RoboTraceError as e:
        raise ConfigError(str(e))
    return validate_config(document, model_cls, source=str(path))


def validate_config(document, model_cls, source="config"):
    # Accepts a model class or a pydantic TypeAdapter
    validate = getattr(model_cls, "model_validate", None) or model_cls.validate_python
    try:
        return validate(document)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise ConfigError(f"{source}: invalid value at {key}: {first['msg']}")
