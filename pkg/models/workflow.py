from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.robot import MovementClass


class WorkflowTemplate(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    sequences: List[Tuple[MovementClass, ...]]
    position_change_range: Tuple[int, int]

    @model_validator(mode="after")
    def check_sequences(self):
        low, high = self.position_change_range
        if low < 1 or high < low:
            raise ValueError(f"bad position_change_range {self.position_change_range}")
        if not self.sequences:
            raise ValueError(f"template {self.name} has no sequences")
        for seq in self.sequences:
            if not low <= len(seq) <= high:
                raise ValueError(
                    f"template {self.name}: sequence of length {len(seq)} outside {low}-{high}"
                )
        return self


class WorkflowSampling(BaseModel):
    """Grids the per-movement distance and speed are drawn from."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    distances_mm: List[float] = Field(default_factory=lambda: [1.0, 2.0, 5.0])
    speed_codes: List[int] = Field(default_factory=lambda: [25000, 50000])
    repetitions: int = Field(default=5, ge=1)
    command_interval_s: float = Field(default=1.0, gt=0)
    free_mode: bool = False


class ReconstructionResult(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    predicted: str
    distance: int = Field(ge=0)
    matched_sequence: Tuple[MovementClass, ...]
    runner_up: Optional[str] = None
    runner_up_distance: Optional[int] = None
    ambiguous: bool = False


class RecoveryRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    workflow: str
    position_changes: str
    samples: int
    correct: int
    # None when no sample of this workflow was scored
    recovery_rate: Optional[float] = None


class RecoveryReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: str
    transform: str = "none"
    seed: int
    rows: List[RecoveryRow]
    movement_accuracy: Optional[float] = None
    confusion: Dict[str, Dict[str, int]] = Field(default_factory=dict)

    @property
    def mean_recovery(self) -> float:
        rates = [r.recovery_rate for r in self.rows if r.recovery_rate is not None]
        return sum(rates) / len(rates) if rates else 0.0
