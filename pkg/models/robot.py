from enum import Enum
from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DISTANCE_GRID_MM = (1, 2, 5, 10, 25, 50)
SPEED_CODE_GRID = (25000, 50000, 100000, 150000, 200000)
DELAY_GRID_MS = (0, 10, 50, 100, 1000)
LOSS_GRID_PCT = (0, 10, 25, 50)
SPEED_CODE_DIVISOR = 2000


class MovementClass(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"
    XY = "XY"
    XZ = "XZ"
    YZ = "YZ"
    XYZ = "XYZ"

    @property
    def axes(self) -> Tuple[str, ...]:
        return tuple(self.value)

    @classmethod
    def ordered(cls):
        return list(cls)


MOVEMENT_NAMES = [m.value for m in MovementClass]


class MovementProgram(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    movement: MovementClass
    distance_mm: float = 1.0
    speed_code: int = 25000
    repetitions: int = Field(default=1, ge=1)
    command_interval_s: float = Field(default=1.0, gt=0)
    # Exponential jitter on each interval; 0 keeps the programmed cadence
    interval_jitter_s: float = Field(default=0.0, ge=0)
    free_mode: bool = False
    start_position: Optional[Tuple[float, float, float]] = None

    @model_validator(mode="after")
    def check_grid(self):
        if self.distance_mm <= 0:
            raise ValueError("distance_mm must be positive")
        mmps = self.speed_code / SPEED_CODE_DIVISOR
        if not 12.5 <= mmps <= 100:
            raise ValueError(f"speed_code {self.speed_code} maps to {mmps} mm/s, outside [12.5, 100]")
        if not self.free_mode:
            if self.distance_mm not in DISTANCE_GRID_MM:
                raise ValueError(f"distance_mm {self.distance_mm} not in {DISTANCE_GRID_MM} (set free_mode)")
            if self.speed_code not in SPEED_CODE_GRID:
                raise ValueError(f"speed_code {self.speed_code} not in {SPEED_CODE_GRID} (set free_mode)")
        return self


class LinkParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    delay_ms: float = Field(default=0.0, ge=0)
    loss_pct: float = Field(default=0.0, ge=0, lt=100)
    bandwidth_mbps: float = Field(default=100.0, gt=0)
    seed: int = 0


class TlsChannelModel(BaseModel):
    """TLSv1.2 AES-GCM record framing: 8-byte explicit nonce plus 16-byte tag."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    record_header_bytes: int = 5
    per_record_overhead_bytes: int = 24
    handshake_packet_count: int = Field(default=12, ge=0)

    def record_len(self, plaintext_len: int) -> int:
        return plaintext_len + self.record_header_bytes + self.per_record_overhead_bytes


class RobotModel(BaseModel):
    """Arm kinematics and firmware timing that shape the reply latency."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    home_position: Tuple[float, float, float] = (150.0, 0.0, 90.0)
    axis_factors: Dict[str, float] = Field(default_factory=lambda: {"X": 1.0, "Y": 1.05, "Z": 1.2})
    # Upper bound of the uniform firmware delay added after each move; 0 keeps replies exact
    firmware_jitter_s: float = Field(default=0.0, ge=0)
    # Latency governor: motion slows by 1 + round-trip budget / this constant; None disables it
    latency_slowdown_s: Optional[float] = Field(default=None, gt=0)
    setup_pause_s: float = Field(default=0.5, gt=0)
    mss: int = Field(default=1448, gt=0)
    # 20-byte base header plus the 12-byte timestamps option
    tcp_header_bytes: int = Field(default=32, ge=20)

    @field_validator("axis_factors")
    @classmethod
    def check_axes(cls, value):
        missing = {"X", "Y", "Z"} - set(value)
        if missing:
            raise ValueError(f"axis_factors missing {sorted(missing)}")
        if any(v <= 0 for v in value.values()):
            raise ValueError("axis_factors must be positive")
        return value
