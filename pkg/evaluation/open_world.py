import logging

import numpy as np

from features.matrix import FeatureMatrix, vocabulary
from models.robot import MOVEMENT_NAMES
from models.trace import UNKNOWN_LABEL
from utils.errors import DomainError

logger = logging.getLogger(__name__)


def unknown_classes(unknowns: int):
    """Movement classes hidden when `unknowns` are left unlabeled; reverse declaration order."""
    if not 0 <= unknowns <= len(MOVEMENT_NAMES) - 1:
        raise DomainError(f"open-world unknowns must lie in [0, {len(MOVEMENT_NAMES) - 1}], got {unknowns}")
    return list(MOVEMENT_NAMES[len(MOVEMENT_NAMES) - unknowns:]) if unknowns else []


def open_world_relabel(matrix: FeatureMatrix, unknowns: int) -> FeatureMatrix:
    """Relabel the last `unknowns` movement classes as Unknown.

    Row count is preserved and applying it twice with the same count is a no-op.
    """
    hidden = set(unknown_classes(unknowns))
    if not hidden:
        return matrix
    labels = np.array([UNKNOWN_LABEL if label in hidden else label for label in matrix.labels], dtype=object)
    relabeled = matrix.with_labels(labels, vocabulary(list(labels) + [UNKNOWN_LABEL]))
    logger.info(f"Open world: {', '.join(sorted(hidden))} -> {UNKNOWN_LABEL} ({len(relabeled.class_names)} classes)")
    return relabeled
