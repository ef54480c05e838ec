"""
Point-to-point link between controller and robot for the discrete-event model.

Each direction has its own transmitter (one frame on the wire at a time).
A frame is serialized at link bandwidth, then either lost or propagated after
the one-way delay.
"""
import logging

import numpy as np
import simpy

from models.robot import LinkParams
from models.trace import Direction, LinkStats

logger = logging.getLogger(__name__)

INITIAL_RTO_S = 0.2


def round_trip_budget(params: LinkParams) -> float:
    """Two one-way delays plus the expected first-retry wait in each direction."""
    p = params.loss_pct / 100.0
    return 2 * params.delay_ms / 1000.0 + 2 * INITIAL_RTO_S * p / (1.0 - p)


class Link:
    def __init__(self, env: simpy.Environment, params: LinkParams, loss_rng: np.random.Generator):
        self.env = env
        self.delay_s = params.delay_ms / 1000.0
        self.bandwidth_bps = params.bandwidth_mbps * 1e6
        self.loss_probability = params.loss_pct / 100.0
        self.loss_rng = loss_rng
        self.transmitters = {d: simpy.Resource(env, capacity=1) for d in Direction}
        self.stats = LinkStats()

    def transmission_time(self, frame_len: int) -> float:
        return frame_len * 8 / self.bandwidth_bps

    def serialize(self, direction: Direction, frame_len: int):
        """Hold the transmitter for one frame; returns the start time."""
        with self.transmitters[direction].request() as req:
            yield req
            started = self.env.now
            yield self.env.timeout(self.transmission_time(frame_len))
        return started

    def survives(self, first_attempt: bool) -> bool:
        # Exactly one draw per attempt keeps the drop sequence replayable
        dropped = bool(self.loss_rng.random() < self.loss_probability)
        if first_attempt:
            self.stats.first_transmissions += 1
            if dropped:
                self.stats.dropped_first_transmissions += 1
        else:
            self.stats.retransmissions += 1
        return not dropped

    def propagate(self, deliver):
        """Run deliver() once the one-way delay has elapsed."""
        yield self.env.timeout(self.delay_s)
        deliver()
