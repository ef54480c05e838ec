import logging
from collections import OrderedDict
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

from emulator.session import emulate_session
from models.robot import LinkParams, MovementClass, MovementProgram, RobotModel, TlsChannelModel
from models.trace import FlowTrace, PacketRecord
from models.workflow import ReconstructionResult, WorkflowSampling, WorkflowTemplate
from traffic.flows import DEFAULT_IDLE_GAP_S, assemble_flows
from utils.errors import DomainError
from utils.seeding import derive_seed, rng_for

logger = logging.getLogger(__name__)


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance with unit insert, delete and substitute costs."""
    previous = list(range(len(b) + 1))
    for i in range(1, len(a) + 1):
        current = [i] + [0] * len(b)
        for j in range(1, len(b) + 1):
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (0 if a[i - 1] == b[j - 1] else 1),
            )
        previous = current
    return previous[-1]


def reconstruct(sequence: Sequence[MovementClass], templates: Sequence[WorkflowTemplate]) -> ReconstructionResult:
    """Closest template by edit distance.

    Ties go to the template whose best-matching sequence is shorter, then to
    declaration order; any tie on distance marks the result ambiguous.
    """
    if not sequence:
        raise DomainError("cannot reconstruct a workflow from an empty movement sequence")
    if not templates:
        raise DomainError("no workflow templates given")
    sequence = [MovementClass(m) for m in sequence]
    ranked = []
    for order, template in enumerate(templates):
        best = min(template.sequences, key=lambda s: (edit_distance(sequence, s), len(s)))
        ranked.append((edit_distance(sequence, best), len(best), order, template.name, best))
    ranked.sort(key=lambda r: (r[0], r[1], r[2]))
    distance, _, _, name, best = ranked[0]
    runner_up = ranked[1] if len(ranked) > 1 else None
    return ReconstructionResult(
        predicted=name,
        distance=distance,
        matched_sequence=tuple(best),
        runner_up=runner_up[3] if runner_up else None,
        runner_up_distance=runner_up[0] if runner_up else None,
        ambiguous=bool(runner_up and runner_up[0] == distance),
    )


def recovery_rate(results: Sequence[Tuple[ReconstructionResult, str]]) -> Dict[str, float]:
    """Fraction of correct predictions per true workflow.

    Workflows with no samples are absent from the result.
    """
    if not results:
        raise DomainError("recovery_rate needs at least one result")
    totals: Dict[str, List[int]] = OrderedDict()
    for result, truth in results:
        bucket = totals.setdefault(truth, [0, 0])
        bucket[0] += int(result.predicted == truth)
        bucket[1] += 1
    return {name: correct / total for name, (correct, total) in totals.items()}


def generate_workflow_trace(
    template: WorkflowTemplate,
    sampling: WorkflowSampling,
    link: LinkParams,
    seed: int,
    sample_index: int = 0,
    tls: Optional[TlsChannelModel] = None,
    robot: Optional[RobotModel] = None,
) -> Tuple[List[FlowTrace], str]:
    """One flow per movement of a randomly chosen canonical sequence."""
    rng = rng_for(seed, "workflow", template.name, sample_index)
    sequence = template.sequences[int(rng.integers(len(template.sequences)))]
    flows = []
    for i, movement in enumerate(sequence):
        program = MovementProgram(
            movement=movement,
            distance_mm=float(sampling.distances_mm[int(rng.integers(len(sampling.distances_mm)))]),
            speed_code=int(sampling.speed_codes[int(rng.integers(len(sampling.speed_codes)))]),
            repetitions=sampling.repetitions,
            command_interval_s=sampling.command_interval_s,
            free_mode=sampling.free_mode,
        )
        flow_link = link.model_copy(update={"seed": derive_seed(seed, "workflow-flow", template.name, sample_index, i)})
        flow_id = f"{template.name}-{sample_index:04d}-m{i}"
        flows.append(emulate_session(program, flow_link, tls, robot, flow_id=flow_id))
    return flows, template.name


def stitch_capture(flows: Sequence[FlowTrace], gap_s: float = DEFAULT_IDLE_GAP_S + 1.0) -> List[PacketRecord]:
    """Lay flows end to end on one clock with gap_s of silence between them."""
    packets: List[PacketRecord] = []
    offset = 0.0
    for flow in flows:
        if not flow.packets:
            continue
        origin = flow.packets[0].timestamp
        packets.extend(replace(p, timestamp=p.timestamp - origin + offset) for p in flow.packets)
        offset = packets[-1].timestamp + gap_s
    return packets


def segment_capture(packets: Sequence[PacketRecord], idle_gap_s: float = DEFAULT_IDLE_GAP_S) -> List[FlowTrace]:
    return assemble_flows(packets, idle_gap_s, prefix="segment")
