from itertools import product
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.defense import ConstantRateParams, FixedCellParams, TransformName, VitParams, TRANSFORM_NAMES
from models.robot import LinkParams, MovementClass, MovementProgram, RobotModel, TlsChannelModel

SweepParameter = Literal[
    "distance_mm",
    "speed_code",
    "delay_ms",
    "loss_pct",
    "bandwidth_mbps",
    "open_world_unknowns",
    "channel_transform",
]


class SplitSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    test_fraction: float = Field(default=0.2, gt=0, lt=1)
    validation_fraction_of_train: float = Field(default=0.2, gt=0, lt=1)
    stratify_by_label: bool = True
    seed: int = 0


class TrainingOverrides(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(default=300, ge=1)
    batch_size: int = Field(default=32, ge=1)
    learning_rate: float = Field(default=0.00001, ge=0)
    alpha: float = Field(default=2.0, gt=0)
    patience: int = Field(default=30, ge=1)


class GridSpec(BaseModel):
    """Cartesian grid of movement programs under one link condition."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    movements: List[MovementClass] = Field(default_factory=MovementClass.ordered)
    distances_mm: List[float] = Field(default_factory=lambda: [1.0])
    speed_codes: List[int] = Field(default_factory=lambda: [25000])
    repetitions: int = Field(default=10, ge=1)
    command_interval_s: float = Field(default=1.0, gt=0)
    interval_jitter_s: float = Field(default=0.0, ge=0)
    free_mode: bool = False
    link: LinkParams = LinkParams()
    robot: RobotModel = RobotModel()
    tls: TlsChannelModel = TlsChannelModel()

    @field_validator("movements", "distances_mm", "speed_codes")
    @classmethod
    def not_empty(cls, value):
        if not value:
            raise ValueError("grid axis must not be empty")
        return value

    def cells(self) -> List[Tuple[MovementProgram, LinkParams]]:
        cells = []
        for distance, speed, movement in product(self.distances_mm, self.speed_codes, self.movements):
            program = MovementProgram(
                movement=movement,
                distance_mm=distance,
                speed_code=speed,
                repetitions=self.repetitions,
                command_interval_s=self.command_interval_s,
                interval_jitter_s=self.interval_jitter_s,
                free_mode=self.free_mode,
            )
            cells.append((program, self.link))
        return cells


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    parameter: SweepParameter
    values: List[Union[float, str]]

    @model_validator(mode="after")
    def check_values(self):
        if not self.values:
            raise ValueError("sweep values must not be empty")
        if self.parameter == "channel_transform":
            bad = [v for v in self.values if v not in TRANSFORM_NAMES]
            if bad:
                raise ValueError(f"unknown transforms {bad}")
        elif any(isinstance(v, str) for v in self.values):
            raise ValueError(f"{self.parameter} values must be numeric")
        return self


class ExperimentSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "experiment"
    grid: GridSpec = GridSpec()
    samples_per_cell: int = Field(default=20, ge=1)
    sweep: Optional[SweepSpec] = None
    channel_transform: TransformName = "none"
    fixed_cell: FixedCellParams = FixedCellParams()
    constant_rate: ConstantRateParams = ConstantRateParams()
    vit: VitParams = VitParams()
    open_world_unknowns: int = Field(default=0, ge=0, le=6)
    split: SplitSpec = SplitSpec()
    training: TrainingOverrides = TrainingOverrides()
    importance_repeats: int = Field(default=3, ge=0)
    pooled: bool = False
    seed: Optional[int] = None

    @model_validator(mode="after")
    def check_unknowns(self):
        if self.open_world_unknowns >= len(self.grid.movements):
            raise ValueError(
                f"open_world_unknowns {self.open_world_unknowns} must be below the {len(self.grid.movements)} classes"
            )
        return self

    def with_value(self, parameter: str, value) -> "ExperimentSpec":
        """Copy of this spec with one sweep parameter pinned to value."""
        if parameter == "distance_mm":
            grid = self.grid.model_copy(update={"distances_mm": [float(value)]})
            return self.model_copy(update={"grid": grid})
        if parameter == "speed_code":
            grid = self.grid.model_copy(update={"speed_codes": [int(value)]})
            return self.model_copy(update={"grid": grid})
        if parameter in ("delay_ms", "loss_pct", "bandwidth_mbps"):
            link = self.grid.link.model_copy(update={parameter: float(value)})
            grid = self.grid.model_copy(update={"link": LinkParams.model_validate(link.model_dump())})
            return self.model_copy(update={"grid": grid})
        if parameter == "open_world_unknowns":
            return ExperimentSpec.model_validate({**self.model_dump(), "open_world_unknowns": int(value)})
        if parameter == "channel_transform":
            return self.model_copy(update={"channel_transform": value})
        raise ValueError(f"unknown sweep parameter {parameter}")
