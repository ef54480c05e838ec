import logging
from dataclasses import replace
from typing import List, Sequence

from models.trace import FlowTrace, PacketRecord

logger = logging.getLogger(__name__)

DEFAULT_IDLE_GAP_S = 5.0


def rebase(packets: Sequence[PacketRecord]) -> List[PacketRecord]:
    if not packets:
        return []
    origin = packets[0].timestamp
    return [replace(p, timestamp=p.timestamp - origin) for p in packets]


def assemble_flows(
    packets: Sequence[PacketRecord],
    idle_gap_s: float = DEFAULT_IDLE_GAP_S,
    prefix: str = "flow",
) -> List[FlowTrace]:
    """Split a timestamp-ordered packet stream at idle gaps >= idle_gap_s.

    Every flow is rebased so its first packet sits at t=0.
    """
    if idle_gap_s <= 0:
        raise ValueError("idle_gap_s must be positive")
    flows: List[FlowTrace] = []
    current: List[PacketRecord] = []
    for p in packets:
        if current and p.timestamp - current[-1].timestamp >= idle_gap_s:
            flows.append(FlowTrace(flow_id=f"{prefix}-{len(flows):04d}", label=None, packets=rebase(current)))
            current = []
        current.append(p)
    if current:
        flows.append(FlowTrace(flow_id=f"{prefix}-{len(flows):04d}", label=None, packets=rebase(current)))
    logger.debug(f"Assembled {len(flows)} flows from {len(packets)} packets (gap {idle_gap_s}s)")
    return flows
