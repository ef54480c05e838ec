import logging
from typing import List

from pydantic import TypeAdapter

from models.robot import MovementClass
from models.workflow import WorkflowTemplate
from utils.config import validate_config
from utils.errors import ConfigError
from utils.files import read_json

logger = logging.getLogger(__name__)

XY, X, Y, Z = MovementClass.XY, MovementClass.X, MovementClass.Y, MovementClass.Z

_PICK = (XY, Z, Z, XY, Z, Z, XY)
_PACK = (XY, Z, XY, Z, XY, Z)


def builtin_templates() -> List[WorkflowTemplate]:
    """Push, Pull, PickAndPlace and Packing as movement sequences.

    Z moves stand for both lowering and raising; movement classes carry no sign.
    """
    return [
        WorkflowTemplate(name="Push", sequences=[(XY, X), (XY, X, Z)], position_change_range=(2, 3)),
        WorkflowTemplate(name="Pull", sequences=[(XY, Y), (XY, Y, Z)], position_change_range=(2, 3)),
        WorkflowTemplate(
            name="PickAndPlace",
            sequences=[_PICK, (XY,) + _PICK, (XY,) + _PICK + (XY,)],
            position_change_range=(7, 9),
        ),
        WorkflowTemplate(
            name="Packing",
            sequences=[_PACK, _PACK + (XY,), _PACK + (XY, Z), _PACK + (XY, Z, XY)],
            position_change_range=(6, 9),
        ),
    ]


def load_templates(path) -> List[WorkflowTemplate]:
    """Template vocabulary from a JSON list of {name, sequences, position_change_range}."""
    document = read_json(path)
    if not isinstance(document, list) or not document:
        raise ConfigError(f"{path}: expected a non-empty list of templates")
    templates = validate_config(document, TypeAdapter(List[WorkflowTemplate]), source=str(path))
    names = [t.name for t in templates]
    if len(set(names)) != len(names):
        raise ConfigError(f"{path}: duplicate template names")
    logger.info(f"Loaded {len(templates)} workflow templates from {path}")
    return templates
