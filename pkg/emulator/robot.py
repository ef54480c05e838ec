"""
Arm-side behaviour: G-code commands, status replies and how long a move takes.
"""
import math
from typing import Optional, Tuple

import numpy as np

from models.robot import SPEED_CODE_DIVISOR, MovementClass, RobotModel
from utils.errors import DomainError

Position = Tuple[float, float, float]
AXES = ("X", "Y", "Z")


def speed_code_to_mmps(code: int) -> float:
    if code <= 0:
        raise DomainError(f"speed code must be positive, got {code}")
    return code / SPEED_CODE_DIVISOR


def movement_duration(distance_mm: float, speed_code: int) -> float:
    if distance_mm <= 0:
        raise DomainError(f"distance must be positive, got {distance_mm}")
    return distance_mm / speed_code_to_mmps(speed_code)


def next_position(movement: MovementClass, distance_mm: float, position: Position) -> Position:
    active = movement.axes
    return tuple(
        coord + distance_mm if axis in active else coord
        for axis, coord in zip(AXES, position)
    )


def gcode_for_move(movement: MovementClass, distance_mm: float, speed_code: int, position: Position) -> str:
    if not all(math.isfinite(c) for c in position):
        raise DomainError(f"position must be finite, got {position}")
    x, y, z = next_position(movement, distance_mm, position)
    return f"G0 X{x:.1f} Y{y:.1f} Z{z:.1f} F{speed_code}\n"


def status_line(position: Position) -> str:
    x, y, z = position
    return f"ok P:{x:.1f},{y:.1f},{z:.1f}\n"


def path_length_mm(movement: MovementClass, distance_mm: float) -> float:
    """Straight-line travel when every active axis moves distance_mm."""
    return distance_mm * math.sqrt(len(movement.axes))


def latency_slowdown(robot: RobotModel, round_trip_s: float) -> float:
    """Motion-time multiplier the latency governor applies for a link round trip."""
    if robot.latency_slowdown_s is None:
        return 1.0
    return 1.0 + round_trip_s / robot.latency_slowdown_s


def execution_time(
    movement: MovementClass,
    distance_mm: float,
    speed_code: int,
    robot: RobotModel,
    rng: Optional[np.random.Generator] = None,
    round_trip_s: float = 0.0,
) -> float:
    """Travel along the diagonal at the mean factor of the active axes, then firmware jitter.

    The governor stretches only the motion; jitter is added afterwards.
    """
    base = movement_duration(path_length_mm(movement, distance_mm), speed_code)
    factor = sum(robot.axis_factors[a] for a in movement.axes) / len(movement.axes)
    jitter = rng.uniform(0.0, robot.firmware_jitter_s) if rng is not None and robot.firmware_jitter_s > 0 else 0.0
    return base * factor * latency_slowdown(robot, round_trip_s) + jitter
