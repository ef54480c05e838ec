"""
Discrete-event emulation of one controller<->robot TLS control session.

The capture point is the controller's interface: every controller
transmission attempt is recorded when it starts, robot frames are recorded
when they arrive. A frame lost on the way is resent after an RTO of 200 ms
that doubles on each retry.
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import simpy

from emulator.link import INITIAL_RTO_S, Link, round_trip_budget
from emulator.robot import execution_time, gcode_for_move, next_position, status_line
from models.robot import LinkParams, MovementProgram, RobotModel, TlsChannelModel
from models.trace import Direction, FlowMeta, FlowTrace, PacketRecord, TcpFlag
from utils.seeding import rng_for

logger = logging.getLogger(__name__)

ETH_HEADER_LEN = 14
IP_HEADER_LEN = 20
MAX_WINDOW = 65535
MAX_RETRIES = 8
SEQ_MOD = 1 << 32
CONFIG_QUERY = "M115\n"
CONFIG_REPLY = "ok FIRMWARE_NAME:uArm PROTOCOL_VERSION:3.2\n"

C2R = Direction.ControllerToRobot
R2C = Direction.RobotToController


@dataclass(frozen=True)
class Segment:
    payload_len: int = 0
    flags: TcpFlag = TcpFlag.ACK
    # Full length of each TLS record carried (header included); first one is reported
    records: Tuple[int, ...] = ()


class FlowAborted(Exception):
    pass


def handshake_script(tls: TlsChannelModel) -> List[Tuple[Direction, Segment]]:
    """TCP open, TLS 1.2 full handshake, then one configuration exchange."""
    def records(*lengths):
        return Segment(payload_len=sum(lengths), flags=TcpFlag.PSH | TcpFlag.ACK, records=tuple(lengths))

    script = [
        (C2R, Segment(flags=TcpFlag.SYN)),
        (R2C, Segment(flags=TcpFlag.SYN | TcpFlag.ACK)),
        (C2R, Segment()),
        (C2R, records(517)),                 # ClientHello
        (R2C, Segment()),
        (R2C, records(89, 1024, 300, 9)),    # ServerHello .. ServerHelloDone
        (C2R, Segment()),
        (C2R, records(75, 6, 45)),           # ClientKeyExchange, ChangeCipherSpec, Finished
        (R2C, records(6, 45)),               # ChangeCipherSpec, Finished
        (C2R, Segment()),
        (C2R, records(tls.record_len(len(CONFIG_QUERY)))),
        (R2C, records(tls.record_len(len(CONFIG_REPLY)))),
    ]
    wanted = tls.handshake_packet_count
    while len(script) < wanted:
        # Longer bursts repeat the configuration exchange
        script.append((C2R, records(tls.record_len(len(CONFIG_QUERY)))))
        script.append((R2C, records(tls.record_len(len(CONFIG_REPLY)))))
    return script[:wanted]


class Endpoint:
    """One TCP sender/receiver with just enough state for seq, ack and window."""

    def __init__(self, env, direction: Direction, link: Link, capture: list, isn: int, tcp_header_len: int):
        self.env = env
        self.direction = direction
        self.link = link
        self.capture = capture
        self.tcp_header_len = tcp_header_len
        self.snd_nxt = isn
        self.snd_una = isn
        self.rcv_nxt = 0
        self.peer: Optional["Endpoint"] = None

    def outstanding(self) -> int:
        return (self.snd_nxt - self.snd_una) % SEQ_MOD

    def record(self, timestamp: float, packet: PacketRecord) -> None:
        self.capture.append((timestamp, len(self.capture), packet))

    def transmit(self, segment: Segment):
        """Send one segment until it gets through; returns the arrival event."""
        env = self.env
        seq = self.snd_nxt
        consumed = segment.payload_len + (1 if segment.flags & (TcpFlag.SYN | TcpFlag.FIN) else 0)
        self.snd_nxt = (self.snd_nxt + consumed) % SEQ_MOD
        ip_len = IP_HEADER_LEN + self.tcp_header_len + segment.payload_len
        frame_len = ETH_HEADER_LEN + ip_len
        arrived = env.event()

        attempt = 0
        while True:
            flags = segment.flags
            packet = PacketRecord(
                timestamp=0.0,
                direction=self.direction,
                frame_len=frame_len,
                frame_cap_len=frame_len,
                ip_len=ip_len,
                ip_hdr_len=IP_HEADER_LEN,
                tcp_payload_len=segment.payload_len,
                tcp_hdr_len=self.tcp_header_len,
                tcp_flags=flags,
                seq=seq,
                ack=self.rcv_nxt if flags & TcpFlag.ACK else 0,
                window_size=max(0, MAX_WINDOW - self.outstanding()),
                tls_record_len=segment.records[0] if segment.records else 0,
                tls_record_count=len(segment.records),
                is_retransmission=attempt > 0,
            )
            started = yield env.process(self.link.serialize(self.direction, frame_len))
            if self.direction is C2R:
                self.record(started, _at(packet, started))
            if self.link.survives(first_attempt=attempt == 0):
                env.process(self.link.propagate(lambda p=packet: self._arrive(p, consumed, arrived)))
                return arrived
            attempt += 1
            if attempt > MAX_RETRIES:
                raise FlowAborted(f"{self.direction.value} segment seq={seq} lost {attempt} times")
            rto = INITIAL_RTO_S * 2 ** (attempt - 1)
            yield env.timeout(max(0.0, started + rto - env.now))

    def _arrive(self, packet: PacketRecord, consumed: int, arrived) -> None:
        now = self.env.now
        if self.direction is R2C:
            self.record(now, _at(packet, now))
        peer = self.peer
        if packet.has(TcpFlag.SYN) or packet.seq == peer.rcv_nxt:
            peer.rcv_nxt = (packet.seq + consumed) % SEQ_MOD
        if packet.has(TcpFlag.ACK):
            peer.snd_una = packet.ack
        arrived.succeed(now)


def _at(packet: PacketRecord, timestamp: float) -> PacketRecord:
    return replace(packet, timestamp=timestamp)


class ControlSession:
    def __init__(self, program: MovementProgram, link_params: LinkParams, tls: TlsChannelModel, robot: RobotModel):
        self.program = program
        self.link_params = link_params
        self.tls = tls
        self.robot = robot
        seed = link_params.seed
        self.jitter_rng = rng_for(seed, "firmware-jitter")
        self.interval_rng = rng_for(seed, "interval")
        isn_rng = rng_for(seed, "isn")

        self.env = simpy.Environment()
        self.capture: list = []
        self.link = Link(self.env, link_params, rng_for(seed, "loss"))
        self.controller = Endpoint(self.env, C2R, self.link, self.capture, int(isn_rng.integers(SEQ_MOD)), robot.tcp_header_bytes)
        self.arm = Endpoint(self.env, R2C, self.link, self.capture, int(isn_rng.integers(SEQ_MOD)), robot.tcp_header_bytes)
        self.controller.peer, self.arm.peer = self.arm, self.controller
        self.round_trip_s = round_trip_budget(link_params)
        self.first_command_ts = 0.0
        self.failed = False

    def _endpoint(self, direction: Direction) -> Endpoint:
        return self.controller if direction is C2R else self.arm

    def run_script(self):
        env = self.env
        arrived = None
        previous = None
        for sender, segment in handshake_script(self.tls):
            if previous is not None and sender is not previous:
                yield arrived
            arrived = yield env.process(self._endpoint(sender).transmit(segment))
            previous = sender
        if arrived is not None:
            yield arrived

        program = self.program
        yield env.timeout(self.robot.setup_pause_s)
        self.first_command_ts = scheduled = env.now
        position = program.start_position or self.robot.home_position
        for _ in range(program.repetitions):
            yield env.timeout(max(0.0, scheduled - env.now))
            command = gcode_for_move(program.movement, program.distance_mm, program.speed_code, position)
            delivered = yield env.process(self.controller.transmit(self._data(command)))
            yield delivered
            yield env.timeout(
                execution_time(
                    program.movement, program.distance_mm, program.speed_code, self.robot, self.jitter_rng,
                    self.round_trip_s,
                )
            )
            position = next_position(program.movement, program.distance_mm, position)
            replied = yield env.process(self.arm.transmit(self._data(status_line(position))))
            yield replied
            scheduled += program.command_interval_s
            if program.interval_jitter_s > 0:
                scheduled += float(self.interval_rng.exponential(program.interval_jitter_s))

    def _data(self, text: str) -> Segment:
        record = self.tls.record_len(len(text.encode("ascii")))
        return Segment(payload_len=record, flags=TcpFlag.PSH | TcpFlag.ACK, records=(record,))

    def run(self) -> List[PacketRecord]:
        self.env.process(self.run_script())
        try:
            self.env.run()
        except FlowAborted as e:
            self.failed = True
            logger.warning(f"Flow aborted: {e}")
        self.capture.sort(key=lambda item: (item[0], item[1]))
        return [packet for _, _, packet in self.capture]


def emulate_session(
    program: MovementProgram,
    link: LinkParams,
    tls: Optional[TlsChannelModel] = None,
    robot: Optional[RobotModel] = None,
    flow_id: str = "flow",
) -> FlowTrace:
    tls = tls or TlsChannelModel()
    robot = robot or RobotModel()
    session = ControlSession(program, link, tls, robot)
    packets = session.run()
    meta = FlowMeta(
        program=program,
        link=link,
        robot=robot,
        tls=tls,
        first_command_ts=session.first_command_ts,
        failed=session.failed,
        stats=session.link.stats,
    )
    return FlowTrace(flow_id=flow_id, label=program.movement.value, packets=packets, meta=meta)
