from typing import Iterable, List

from models.trace import Direction, FlowTrace, PacketRecord
from utils.errors import TraceFormatError

UINT32_MAX = (1 << 32) - 1


def packet_violations(p: PacketRecord) -> List[str]:
    problems = []
    if not isinstance(p.direction, Direction):
        problems.append(f"direction {p.direction!r} is not a Direction")
    if p.timestamp < 0:
        problems.append(f"negative timestamp {p.timestamp}")
    if p.frame_len < 0 or p.frame_cap_len < 0:
        problems.append("negative frame length")
    if p.frame_cap_len > p.frame_len:
        problems.append(f"frame_cap_len {p.frame_cap_len} > frame_len {p.frame_len}")
    if p.tcp_hdr_len < 20:
        problems.append(f"tcp_hdr_len {p.tcp_hdr_len} < 20")
    if p.tcp_payload_len < 0:
        problems.append(f"negative tcp_payload_len {p.tcp_payload_len}")
    if p.ip_len > p.frame_len:
        problems.append(f"ip_len {p.ip_len} > frame_len {p.frame_len}")
    if p.ip_hdr_len + p.tcp_hdr_len + p.tcp_payload_len > p.ip_len:
        problems.append(
            f"ip_len {p.ip_len} < ip_hdr_len + tcp_hdr_len + tcp_payload_len "
            f"({p.ip_hdr_len}+{p.tcp_hdr_len}+{p.tcp_payload_len})"
        )
    if p.tls_record_len < 0 or p.tls_record_count < 0:
        problems.append("negative TLS framing")
    if (p.tls_record_count == 0) != (p.tls_record_len == 0):
        problems.append(f"tls_record_count {p.tls_record_count} inconsistent with tls_record_len {p.tls_record_len}")
    if not 0 <= p.seq <= UINT32_MAX or not 0 <= p.ack <= UINT32_MAX:
        problems.append("seq/ack outside 32 bits")
    if p.window_size < 0:
        problems.append(f"negative window_size {p.window_size}")
    if p.carried_bytes is not None and not 0 <= p.carried_bytes <= p.tcp_payload_len:
        problems.append(f"carried_bytes {p.carried_bytes} outside payload")
    return problems


def validate_trace(flow: FlowTrace) -> List[str]:
    """Every invariant violation in one flow, as readable strings."""
    problems = []
    if not flow.packets:
        problems.append(f"{flow.flow_id}: flow has no packets")
    previous = None
    for i, p in enumerate(flow.packets):
        for problem in packet_violations(p):
            problems.append(f"{flow.flow_id}[{i}]: {problem}")
        if previous is not None and p.timestamp < previous:
            problems.append(f"{flow.flow_id}[{i}]: timestamp {p.timestamp} before {previous}")
        previous = p.timestamp
    return problems


def assert_valid(flows: Iterable[FlowTrace]) -> None:
    problems = []
    for flow in flows:
        problems.extend(validate_trace(flow))
    if problems:
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        raise TraceFormatError("invalid trace: " + "; ".join(problems[:5]) + more)
