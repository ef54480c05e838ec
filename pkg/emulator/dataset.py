import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence, Tuple

from emulator.session import emulate_session
from models.robot import LinkParams, MovementProgram, RobotModel, TlsChannelModel
from models.trace import FlowTrace
from utils.errors import DomainError
from utils.seeding import derive_seed

logger = logging.getLogger(__name__)

Cell = Tuple[MovementProgram, LinkParams]


def flow_id_for(cell_index: int, sample_index: int) -> str:
    return f"c{cell_index:03d}-s{sample_index:04d}"


def _emulate_cell(args) -> List[FlowTrace]:
    cell_index, program, link, samples, master_seed, tls, robot = args
    flows = []
    for sample in range(samples):
        seed = derive_seed(master_seed, "emulate", cell_index, sample)
        sample_link = link.model_copy(update={"seed": seed})
        flows.append(emulate_session(program, sample_link, tls, robot, flow_id=flow_id_for(cell_index, sample)))
    return flows


def generate_dataset(
    grid: Sequence[Cell],
    samples_per_cell: int,
    master_seed: int,
    tls: Optional[TlsChannelModel] = None,
    robot: Optional[RobotModel] = None,
    workers: int = 1,
) -> List[FlowTrace]:
    """Emulate samples_per_cell labeled flows for every (program, link) cell.

    Seeds come from (master seed, cell index, sample index) only, so the
    output is the same for any worker count and is returned in grid order.
    """
    if not grid:
        raise DomainError("grid must contain at least one cell")
    if samples_per_cell < 1:
        raise DomainError(f"samples_per_cell must be >= 1, got {samples_per_cell}")
    tls = tls or TlsChannelModel()
    robot = robot or RobotModel()
    jobs = [(i, program, link, samples_per_cell, master_seed, tls, robot) for i, (program, link) in enumerate(grid)]

    logger.info(f"Emulating {len(grid)} cells x {samples_per_cell} samples with {workers} worker(s)")
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_cell = list(pool.map(_emulate_cell, jobs))
    else:
        per_cell = [_emulate_cell(job) for job in jobs]

    flows = [flow for cell in per_cell for flow in cell]
    failed = sum(1 for f in flows if f.meta and f.meta.failed)
    if failed:
        logger.warning(f"{failed} of {len(flows)} flows aborted after exhausting retries")
    logger.info(f"Generated {len(flows)} flows")
    return flows
