"""
Channel transforms that model padding defenses on captured or synthetic flows.

Transforms only change what an observer on the wire would see. The real
application bytes inside each packet are tracked in PacketRecord.carried_bytes
so byte conservation stays checkable; that marker never reaches features.
"""
import bisect
import logging
import math
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Union

from models.defense import ConstantRateParams, FixedCellParams, VitParams
from models.trace import Direction, FlowTrace, PacketRecord, TcpFlag
from utils.errors import DomainError
from utils.seeding import rng_for

logger = logging.getLogger(__name__)

SEQ_MOD = 1 << 32
MAX_WINDOW = 65535
DEFAULT_BANDWIDTH_MBPS = 100.0

TransformParams = Union[FixedCellParams, ConstantRateParams, VitParams, None]


def real_payload_total(flow: FlowTrace) -> int:
    """Application bytes carried by first transmissions."""
    return sum(p.real_bytes for p in flow.packets if not p.is_retransmission)


def _bandwidth_bps(flow: FlowTrace, override: Optional[float]) -> float:
    if override is not None:
        return override * 1e6
    if flow.meta is not None:
        return flow.meta.link.bandwidth_mbps * 1e6
    return DEFAULT_BANDWIDTH_MBPS * 1e6


def _resized(p: PacketRecord, payload_len: int) -> dict:
    ip_len = p.ip_hdr_len + p.tcp_hdr_len + payload_len
    frame_len = p.frame_len - p.ip_len + ip_len
    cap_len = frame_len if p.frame_cap_len == p.frame_len else min(p.frame_cap_len, frame_len)
    return {"tcp_payload_len": payload_len, "ip_len": ip_len, "frame_len": frame_len, "frame_cap_len": cap_len}


class _StreamMap:
    """Maps one direction's original stream offsets onto the padded stream."""

    def __init__(self):
        self.base: Optional[int] = None
        self.orig: List[int] = [0]
        self.padded: List[int] = [0]

    def offset(self, seq: int) -> int:
        return (seq - self.base) % SEQ_MOD

    def lookup(self, orig_offset: int) -> int:
        i = bisect.bisect_right(self.orig, orig_offset) - 1
        return self.padded[i] + (orig_offset - self.orig[i])

    def extend(self, orig_start: int, orig_end: int, padded_len: int) -> int:
        """Record a new segment; returns its padded start offset."""
        if orig_end <= self.orig[-1]:
            return self.lookup(orig_start)
        start = self.lookup(orig_start)
        self.orig.append(orig_end)
        self.padded.append(start + padded_len)
        return start


def apply_fixed_cells(flow: FlowTrace, params: Optional[FixedCellParams] = None) -> FlowTrace:
    """Re-chunk every payload into whole cells and freeze the advertised window."""
    params = params or FixedCellParams()
    cell_payload = params.cell_size + params.cell_overhead
    bandwidth = _bandwidth_bps(flow, params.bandwidth_mbps)
    maps: Dict[Direction, _StreamMap] = {d: _StreamMap() for d in Direction}
    for p in flow.packets:
        if maps[p.direction].base is None:
            maps[p.direction].base = p.seq

    out: List[PacketRecord] = []
    for p in flow.packets:
        own, peer = maps[p.direction], maps[p.direction.peer]
        syn_fin = 1 if p.tcp_flags & (TcpFlag.SYN | TcpFlag.FIN) else 0
        n_cells = math.ceil(p.real_bytes / params.cell_size) if p.tcp_payload_len > 0 else 0
        start = own.offset(p.seq)
        padded_start = own.extend(start, start + p.tcp_payload_len + syn_fin, n_cells * cell_payload + syn_fin)
        ack = p.ack
        if p.tcp_flags & TcpFlag.ACK and peer.base is not None:
            ack = (peer.base + peer.lookup(peer.offset(p.ack))) % SEQ_MOD
        common = {"ack": ack, "window_size": params.constant_window}

        if n_cells == 0:
            out.append(replace(p, seq=(own.base + padded_start) % SEQ_MOD, **common))
            continue
        remaining = p.real_bytes
        sizes = _resized(p, cell_payload)
        gap = sizes["frame_len"] * 8 / bandwidth
        for i in range(n_cells):
            carried = min(params.cell_size, remaining)
            remaining -= carried
            flags = p.tcp_flags if i == n_cells - 1 else p.tcp_flags & ~TcpFlag.PSH
            out.append(
                replace(
                    p,
                    timestamp=p.timestamp + i * gap,
                    seq=(own.base + padded_start + i * cell_payload) % SEQ_MOD,
                    tcp_flags=flags,
                    tls_record_len=cell_payload,
                    tls_record_count=1,
                    carried_bytes=carried,
                    **sizes,
                    **common,
                )
            )
    out.sort(key=lambda q: q.timestamp)
    result = FlowTrace(flow_id=flow.flow_id, label=flow.label, packets=out, meta=flow.meta)
    if params.circuit_jitter_s > 0:
        result = apply_vit(result, VitParams(low_s=0.0, high_s=params.circuit_jitter_s, seed=params.seed))
    return result


def apply_constant_rate(flow: FlowTrace, params: Optional[ConstantRateParams] = None) -> FlowTrace:
    """Fixed-size packets at fixed slots in both directions until the flow drains.

    Real bytes wait in a per-direction queue and fill slots head-of-line;
    empty slots carry dummies. Pure ACKs are absorbed into the slot stream.
    """
    params = params or ConstantRateParams()
    if not flow.packets:
        return FlowTrace(flow_id=flow.flow_id, label=flow.label, packets=[], meta=flow.meta)
    origin = flow.packets[0].timestamp
    template = flow.packets[0]
    arrivals: Dict[Direction, List] = {d: [] for d in Direction}
    base: Dict[Direction, int] = {}
    for p in flow.packets:
        base.setdefault(p.direction, p.seq)
        if p.real_bytes > 0 and not p.is_retransmission:
            arrivals[p.direction].append((p.timestamp, p.real_bytes))
    for d in Direction:
        base.setdefault(d, 0)

    ip_len = template.ip_hdr_len + template.tcp_hdr_len + params.packet_size
    frame_len = ip_len + (template.frame_len - template.ip_len)
    bandwidth = _bandwidth_bps(flow, None)
    if frame_len * 8 / bandwidth > params.interval_s:
        logger.warning(f"constant-rate interval {params.interval_s}s is shorter than one frame's serialization time")

    queued = {d: 0 for d in Direction}
    cursor = {d: 0 for d in Direction}
    next_arrival = {d: 0 for d in Direction}
    sent = {d: 0 for d in Direction}
    out: List[PacketRecord] = []
    slot = 0
    while True:
        t = origin + slot * params.interval_s
        for d in Direction:
            pending = arrivals[d]
            while next_arrival[d] < len(pending) and pending[next_arrival[d]][0] <= t + 1e-12:
                queued[d] += pending[next_arrival[d]][1]
                next_arrival[d] += 1
        drained = all(queued[d] == 0 and next_arrival[d] == len(arrivals[d]) for d in Direction)
        if drained and slot > 0:
            break
        previous_sent = dict(sent)
        for d in (Direction.ControllerToRobot, Direction.RobotToController):
            carried = min(queued[d], params.packet_size)
            queued[d] -= carried
            out.append(
                PacketRecord(
                    timestamp=t,
                    direction=d,
                    frame_len=frame_len,
                    frame_cap_len=frame_len,
                    ip_len=ip_len,
                    ip_hdr_len=template.ip_hdr_len,
                    tcp_payload_len=params.packet_size,
                    tcp_hdr_len=template.tcp_hdr_len,
                    tcp_flags=TcpFlag.PSH | TcpFlag.ACK,
                    seq=(base[d] + cursor[d]) % SEQ_MOD,
                    ack=(base[d.peer] + previous_sent[d.peer]) % SEQ_MOD,
                    window_size=MAX_WINDOW,
                    tls_record_len=params.packet_size,
                    tls_record_count=1,
                    is_retransmission=False,
                    carried_bytes=carried,
                )
            )
            cursor[d] += params.packet_size
            sent[d] += params.packet_size
        slot += 1
    return FlowTrace(flow_id=flow.flow_id, label=flow.label, packets=out, meta=flow.meta)


def apply_vit(flow: FlowTrace, params: Optional[VitParams] = None) -> FlowTrace:
    """Add Uniform[low_s, high_s] delay per packet, keeping each direction in order."""
    params = params or VitParams()
    if params.high_s < params.low_s:
        raise DomainError(f"high_s {params.high_s} < low_s {params.low_s}")
    rng = rng_for(params.seed, "vit", flow.flow_id)
    delays = rng.uniform(params.low_s, params.high_s, size=len(flow.packets))
    last: Dict[Direction, float] = {}
    shifted = []
    for p, delay in zip(flow.packets, delays):
        t = p.timestamp + float(delay)
        if p.direction in last and t < last[p.direction]:
            t = last[p.direction]
        last[p.direction] = t
        shifted.append(replace(p, timestamp=t))
    shifted.sort(key=lambda q: q.timestamp)
    return FlowTrace(flow_id=flow.flow_id, label=flow.label, packets=shifted, meta=flow.meta)


def apply_transform(flow: FlowTrace, name: str, params: TransformParams = None) -> FlowTrace:
    if name == "none":
        return flow
    if name == "fixed-cell":
        return apply_fixed_cells(flow, params)
    if name == "constant-rate":
        return apply_constant_rate(flow, params)
    if name == "variable-inter-arrival":
        return apply_vit(flow, params)
    raise DomainError(f"unknown channel transform {name!r}")


def transform_flows(flows: Sequence[FlowTrace], name: str, params: TransformParams = None) -> List[FlowTrace]:
    if name == "none":
        return list(flows)
    logger.info(f"Applying {name} to {len(flows)} flows")
    return [apply_transform(f, name, params) for f in flows]
