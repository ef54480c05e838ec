from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

TransformName = Literal["none", "fixed-cell", "constant-rate", "variable-inter-arrival"]
TRANSFORM_NAMES = ("none", "fixed-cell", "constant-rate", "variable-inter-arrival")


class FixedCellParams(BaseModel):
    """Tor-style cells: every data payload becomes a whole number of equal cells."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    cell_size: int = Field(default=514, gt=0)
    # Transport bytes added per cell on top of cell_size (0 models bare cells)
    cell_overhead: int = Field(default=0, ge=0)
    constant_window: int = Field(default=65535, ge=0)
    # Serialization rate for back-to-back cells; None uses the flow's link
    bandwidth_mbps: Optional[float] = Field(default=None, gt=0)
    # Upper bound of uniform per-packet circuit latency; 0 disables it
    circuit_jitter_s: float = Field(default=0.0, ge=0)
    seed: int = 0


class ConstantRateParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    interval_s: float = Field(default=0.05, gt=0)
    packet_size: int = Field(default=514, gt=0)


class VitParams(BaseModel):
    """Uniform [low_s, high_s] delay added to every packet."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    low_s: float = Field(default=0.0, ge=0)
    high_s: float = Field(default=0.1, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def check_bounds(self):
        if self.high_s < self.low_s:
            raise ValueError(f"high_s {self.high_s} < low_s {self.low_s}")
        return self
