from dataclasses import dataclass, field
from enum import Enum, IntFlag
from typing import List, Optional

from pydantic import BaseModel, ConfigDict

from models.robot import LinkParams, MovementProgram, RobotModel, TlsChannelModel

UNKNOWN_LABEL = "Unknown"


class Direction(str, Enum):
    ControllerToRobot = "c2r"
    RobotToController = "r2c"

    @property
    def code(self) -> int:
        return 0 if self is Direction.ControllerToRobot else 1

    @property
    def peer(self) -> "Direction":
        return Direction.RobotToController if self is Direction.ControllerToRobot else Direction.ControllerToRobot


class TcpFlag(IntFlag):
    FIN = 0x01
    SYN = 0x02
    RST = 0x04
    PSH = 0x08
    ACK = 0x10


# Canonical string order, e.g. "PA", "SA", "FA"
_FLAG_LETTERS = (("F", TcpFlag.FIN), ("S", TcpFlag.SYN), ("R", TcpFlag.RST), ("P", TcpFlag.PSH), ("A", TcpFlag.ACK))


def flags_to_str(flags: TcpFlag) -> str:
    return "".join(letter for letter, bit in _FLAG_LETTERS if flags & bit)


def flags_from_str(text: str) -> TcpFlag:
    flags = TcpFlag(0)
    lookup = dict(_FLAG_LETTERS)
    for letter in text:
        if letter not in lookup:
            raise ValueError(f"unknown TCP flag letter {letter!r}")
        flags |= lookup[letter]
    return flags


@dataclass(frozen=True)
class PacketRecord:
    timestamp: float
    direction: Direction
    frame_len: int
    frame_cap_len: int
    ip_len: int
    ip_hdr_len: int
    tcp_payload_len: int
    tcp_hdr_len: int
    tcp_flags: TcpFlag
    seq: int
    ack: int
    window_size: int
    tls_record_len: int = 0
    tls_record_count: int = 0
    is_retransmission: bool = False
    # Real application bytes inside the payload; None means all of it.
    # Padding transforms set this; it never leaves the process.
    carried_bytes: Optional[int] = field(default=None, compare=False, repr=False)

    @property
    def real_bytes(self) -> int:
        return self.tcp_payload_len if self.carried_bytes is None else self.carried_bytes

    @property
    def flag_str(self) -> str:
        return flags_to_str(self.tcp_flags)

    def has(self, flag: TcpFlag) -> bool:
        return bool(self.tcp_flags & flag)


class LinkStats(BaseModel):
    model_config = ConfigDict(extra="forbid")

    first_transmissions: int = 0
    dropped_first_transmissions: int = 0
    retransmissions: int = 0


class FlowMeta(BaseModel):
    """What produced a synthetic flow; absent for ingested captures."""

    model_config = ConfigDict(extra="forbid")

    program: MovementProgram
    link: LinkParams
    robot: RobotModel = RobotModel()
    tls: TlsChannelModel = TlsChannelModel()
    first_command_ts: float = 0.0
    failed: bool = False
    stats: LinkStats = LinkStats()


@dataclass
class FlowTrace:
    flow_id: str
    label: Optional[str]
    packets: List[PacketRecord]
    meta: Optional[FlowMeta] = None

    @property
    def duration(self) -> float:
        if not self.packets:
            return 0.0
        return self.packets[-1].timestamp - self.packets[0].timestamp
