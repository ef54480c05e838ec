"""
Per-packet feature rows for the movement classifier.

Rows start after the session set-up burst. TCP bookkeeping (bytes in flight,
push bytes, ACK RTT) runs over every packet of the flow, including the burst,
so the first data rows see the correct connection state.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from features.matrix import FEATURE_COLUMNS, FeatureMatrix
from models.trace import UNKNOWN_LABEL, Direction, FlowTrace, TcpFlag

logger = logging.getLogger(__name__)

HANDSHAKE_GAP_S = 0.3
SEQ_MOD = 1 << 32


class FeatureVector(NamedTuple):
    packet_time_s: float
    inter_arrival_s: float
    direction: int
    frame_len: int
    frame_cap_len: int
    ip_len: int
    ip_hdr_len: int
    tcp_payload_len: int
    tcp_hdr_len: int
    window_size: int
    bytes_in_flight: int
    push_bytes_sent: int
    ack_rtt_s: float
    tls_record_len: int
    tls_record_count: int
    cum_bytes_same_dir: int
    label: str
    flow_id: str

    def values(self) -> tuple:
        return self[: len(FEATURE_COLUMNS)]


def _after(a: int, b: int) -> bool:
    return 0 < ((a - b) % SEQ_MOD) < (SEQ_MOD >> 1)


def _not_before(a: int, b: int) -> bool:
    return a == b or _after(a, b)


def first_row_index(flow: FlowTrace, handshake_gap_s: float = HANDSHAKE_GAP_S) -> int:
    """Index of the first packet that is not part of the set-up burst."""
    packets = flow.packets
    if flow.meta is not None:
        marker = flow.meta.first_command_ts
        return next((i for i, p in enumerate(packets) if p.timestamp >= marker), len(packets))
    for i in range(1, len(packets)):
        if packets[i].timestamp - packets[i - 1].timestamp >= handshake_gap_s:
            return i
    return 0


class _Sender:
    __slots__ = ("snd_max", "snd_una", "push_bytes", "pending")

    def __init__(self):
        self.snd_max: Optional[int] = None
        self.snd_una: Optional[int] = None
        self.push_bytes = 0
        # seq_end -> timestamp of the latest transmission, oldest first
        self.pending: Dict[int, float] = {}


def extract_features(flow: FlowTrace, handshake_gap_s: float = HANDSHAKE_GAP_S) -> List[FeatureVector]:
    packets = flow.packets
    if not packets:
        return []
    start = first_row_index(flow, handshake_gap_s)
    label = flow.label if flow.label is not None else UNKNOWN_LABEL
    senders = {d: _Sender() for d in Direction}
    rows: List[FeatureVector] = []
    cum_bytes = {d: 0 for d in Direction}
    origin = packets[start].timestamp if start < len(packets) else 0.0
    previous_ts = None

    for i, p in enumerate(packets):
        own = senders[p.direction]
        peer = senders[p.direction.peer]

        consumed = p.tcp_payload_len + (1 if p.tcp_flags & (TcpFlag.SYN | TcpFlag.FIN) else 0)
        seq_end = (p.seq + consumed) % SEQ_MOD
        if own.snd_una is None:
            own.snd_una = p.seq
        if own.snd_max is None or _after(seq_end, own.snd_max):
            own.snd_max = seq_end
        if consumed:
            own.pending.pop(seq_end, None)
            own.pending[seq_end] = p.timestamp
        if _after(own.snd_una, own.snd_max):
            in_flight = 0
        else:
            in_flight = (own.snd_max - own.snd_una) % SEQ_MOD

        own.push_bytes += p.tcp_payload_len
        push_bytes = own.push_bytes
        if p.tcp_flags & TcpFlag.PSH:
            own.push_bytes = 0

        ack_rtt = 0.0
        if p.tcp_flags & TcpFlag.ACK and (peer.snd_una is None or _after(p.ack, peer.snd_una)):
            acked = [end for end in peer.pending if _not_before(p.ack, end)]
            if acked:
                newest = max(peer.pending[end] for end in acked)
                ack_rtt = p.timestamp - newest
                for end in acked:
                    del peer.pending[end]
            peer.snd_una = p.ack

        if i < start:
            continue
        cum_bytes[p.direction] += p.tcp_payload_len
        rows.append(
            FeatureVector(
                packet_time_s=p.timestamp - origin,
                inter_arrival_s=0.0 if previous_ts is None else p.timestamp - previous_ts,
                direction=p.direction.code,
                frame_len=p.frame_len,
                frame_cap_len=p.frame_cap_len,
                ip_len=p.ip_len,
                ip_hdr_len=p.ip_hdr_len,
                tcp_payload_len=p.tcp_payload_len,
                tcp_hdr_len=p.tcp_hdr_len,
                window_size=p.window_size,
                bytes_in_flight=in_flight,
                push_bytes_sent=push_bytes,
                ack_rtt_s=ack_rtt,
                tls_record_len=p.tls_record_len,
                tls_record_count=p.tls_record_count,
                cum_bytes_same_dir=cum_bytes[p.direction],
                label=label,
                flow_id=flow.flow_id,
            )
        )
        previous_ts = p.timestamp
    return rows


def rows_to_matrix(rows: Sequence[FeatureVector]) -> FeatureMatrix:
    if not rows:
        return FeatureMatrix.empty()
    values = np.array([r.values() for r in rows], dtype=np.float64)
    return FeatureMatrix(values, [r.label for r in rows], [r.flow_id for r in rows])


def build_matrix(flows: Sequence[FlowTrace], handshake_gap_s: float = HANDSHAKE_GAP_S) -> FeatureMatrix:
    rows: List[FeatureVector] = []
    for flow in flows:
        rows.extend(extract_features(flow, handshake_gap_s))
    matrix = rows_to_matrix(rows)
    logger.info(f"Extracted {matrix.n_rows} rows from {len(flows)} flows")
    return matrix


def _extract_chunk(args) -> List[FeatureVector]:
    flows, gap = args
    rows = []
    for flow in flows:
        rows.extend(extract_features(flow, gap))
    return rows


def extract_many(flows: Sequence[FlowTrace], workers: int = 1, handshake_gap_s: float = HANDSHAKE_GAP_S) -> FeatureMatrix:
    """build_matrix over a process pool; rows keep input flow order."""
    flows = list(flows)
    if workers <= 1 or len(flows) < 2:
        return build_matrix(flows, handshake_gap_s)
    size = max(1, len(flows) // (workers * 4))
    chunks = [(flows[i:i + size], handshake_gap_s) for i in range(0, len(flows), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_extract_chunk, chunks))
    matrix = rows_to_matrix([row for part in parts for row in part])
    logger.info(f"Extracted {matrix.n_rows} rows from {len(flows)} flows with {workers} workers")
    return matrix
