import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from models.robot import MOVEMENT_NAMES
from models.trace import UNKNOWN_LABEL
from utils.errors import DatasetError, RoboTraceError
from utils.files import atomic_write

logger = logging.getLogger(__name__)

FEATURE_COLUMNS = (
    "packet_time_s",
    "inter_arrival_s",
    "direction",
    "frame_len",
    "frame_cap_len",
    "ip_len",
    "ip_hdr_len",
    "tcp_payload_len",
    "tcp_hdr_len",
    "window_size",
    "bytes_in_flight",
    "push_bytes_sent",
    "ack_rtt_s",
    "tls_record_len",
    "tls_record_count",
    "cum_bytes_same_dir",
)
LABEL_COLUMN = "label"
FLOW_COLUMN = "flow_id"


def vocabulary(labels: Iterable[str]) -> List[str]:
    """Movement classes in declaration order, then other labels, Unknown last."""
    present = set(labels)
    ordered = [m for m in MOVEMENT_NAMES if m in present]
    others = sorted(present - set(MOVEMENT_NAMES) - {UNKNOWN_LABEL})
    return ordered + others + ([UNKNOWN_LABEL] if UNKNOWN_LABEL in present else [])


@dataclass
class FeatureMatrix:
    values: np.ndarray
    labels: np.ndarray
    flow_ids: np.ndarray
    columns: List[str] = field(default_factory=lambda: list(FEATURE_COLUMNS))
    class_names: Optional[List[str]] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1, len(self.columns))
        self.labels = np.asarray(self.labels, dtype=object)
        self.flow_ids = np.asarray(self.flow_ids, dtype=object)
        if not len(self.labels) == len(self.flow_ids) == self.values.shape[0]:
            raise DatasetError(
                f"ragged matrix: {self.values.shape[0]} rows, {len(self.labels)} labels, {len(self.flow_ids)} flow ids"
            )
        if self.class_names is None:
            self.class_names = vocabulary(self.labels)

    @classmethod
    def empty(cls, columns: Sequence[str] = FEATURE_COLUMNS) -> "FeatureMatrix":
        return cls(np.zeros((0, len(columns))), [], [], list(columns), [])

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.n_rows

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def label_indices(self, class_names: Optional[Sequence[str]] = None) -> np.ndarray:
        names = list(class_names or self.class_names)
        lookup = {name: i for i, name in enumerate(names)}
        missing = set(self.labels) - set(lookup)
        if missing:
            raise DatasetError(f"labels {sorted(missing)} not in class vocabulary {names}")
        return np.array([lookup[label] for label in self.labels], dtype=np.int64)

    def select_rows(self, index) -> "FeatureMatrix":
        return FeatureMatrix(
            self.values[index], self.labels[index], self.flow_ids[index], list(self.columns), list(self.class_names)
        )

    def select_columns(self, names: Sequence[str]) -> "FeatureMatrix":
        idx = [self.columns.index(n) for n in names]
        return FeatureMatrix(self.values[:, idx], self.labels, self.flow_ids, list(names), list(self.class_names))

    def with_values(self, values: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(values, self.labels, self.flow_ids, list(self.columns), list(self.class_names))

    def with_labels(self, labels, class_names: Optional[List[str]] = None) -> "FeatureMatrix":
        return FeatureMatrix(self.values, labels, self.flow_ids, list(self.columns), class_names)

    def flow_groups(self) -> Dict[str, np.ndarray]:
        """Row indices per flow, in order of first appearance."""
        groups: Dict[str, List[int]] = {}
        for i, fid in enumerate(self.flow_ids):
            groups.setdefault(fid, []).append(i)
        return {fid: np.array(rows, dtype=np.int64) for fid, rows in groups.items()}

    def flow_labels(self) -> Dict[str, str]:
        return {fid: self.labels[rows[0]] for fid, rows in self.flow_groups().items()}

    @staticmethod
    def concat(parts: Sequence["FeatureMatrix"]) -> "FeatureMatrix":
        parts = list(parts)
        if not parts:
            return FeatureMatrix.empty()
        columns = parts[0].columns
        for part in parts[1:]:
            if part.columns != columns:
                raise DatasetError("cannot concatenate matrices with different columns")
        return FeatureMatrix(
            np.vstack([p.values for p in parts]),
            np.concatenate([p.labels for p in parts]),
            np.concatenate([p.flow_ids for p in parts]),
            list(columns),
        )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=self.columns)
        frame[LABEL_COLUMN] = self.labels
        frame[FLOW_COLUMN] = self.flow_ids
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "FeatureMatrix":
        for required in (LABEL_COLUMN, FLOW_COLUMN):
            if required not in frame.columns:
                raise DatasetError(f"feature table has no '{required}' column")
        columns = [c for c in frame.columns if c not in (LABEL_COLUMN, FLOW_COLUMN)]
        return cls(
            frame[columns].to_numpy(dtype=np.float64),
            frame[LABEL_COLUMN].astype(str).to_numpy(dtype=object),
            frame[FLOW_COLUMN].astype(str).to_numpy(dtype=object),
            columns,
        )

    def write_csv(self, path) -> int:
        return atomic_write(path, self.to_frame().to_csv(index=False, float_format="%.17g"))

    @classmethod
    def read_csv(cls, path) -> "FeatureMatrix":
        try:
            frame = pd.read_csv(path, dtype={LABEL_COLUMN: str, FLOW_COLUMN: str}, keep_default_na=False,
                                float_precision="round_trip",
                                na_values={c: ["", "nan", "NaN"] for c in FEATURE_COLUMNS})
        except FileNotFoundError:
            raise RoboTraceError(f"file not found: {path}")
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise DatasetError(f"{path}: not a feature table: {e}")
        logger.debug(f"Read {len(frame)} feature rows from {path}")
        return cls.from_frame(frame)
