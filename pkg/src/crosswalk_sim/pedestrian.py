"""Stochastic gap-acceptance pedestrian.

Each trial's pedestrian samples one accepted gap, waits at the curb, and
starts crossing (after a short step-off latency) the first time the ego
vehicle's time gap to the walking line shrinks to that value. Pedestrians
whose accepted gap exceeds ``max_trigger_gap`` never treat the approaching
vehicle as a crossing opportunity; they wait for it to pass and then cross.
Once crossing, the walk is constant-speed and is never aborted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import EntrySide, PedestrianState, VehicleState, WorldGeometry


class Phase(Enum):
    WAITING = "waiting"
    CROSSING = "crossing"
    DONE = "done"


@dataclass(frozen=True)
class GapAcceptanceModel:
    """Accepted-gap distribution and walking parameters.

    ``sigma_gap`` is a standard deviation in seconds. Draws below
    ``min_gap`` are floored there rather than redrawn, which keeps the
    sample moments within a fraction of a percent of the underlying
    normal. ``start_delay`` is the step-off latency between deciding to
    cross and the first stride. ``near_setback`` / ``far_setback`` place
    the waiting spot relative to the entry-side curb.
    """

    mu_gap: float = 4.0
    sigma_gap: float = float(np.sqrt(2.5))
    min_gap: float = 0.5
    walk_speed: float = 1.2
    max_trigger_gap: float = 6.0
    start_delay: float = 0.2
    near_setback: float = 2.5
    far_setback: float = 0.25

    def __post_init__(self) -> None:
        if self.sigma_gap <= 0.0:
            raise ValueError("sigma_gap must be positive")
        if not 0.0 < self.min_gap < self.mu_gap:
            raise ValueError("need 0 < min_gap < mu_gap")
        if self.walk_speed <= 0.0:
            raise ValueError("walk_speed must be positive")
        if self.start_delay < 0.0:
            raise ValueError("start_delay must be nonnegative")


def sample_accepted_gap(model: GapAcceptanceModel, rng: np.random.Generator) -> float:
    """One accepted-gap draw, floored at the model's minimum gap."""
    return max(model.min_gap, float(rng.normal(model.mu_gap, model.sigma_gap)))


def start_position(model: GapAcceptanceModel, side: EntrySide, geometry: WorldGeometry) -> float:
    if side is EntrySide.NEAR:
        return -model.near_setback
    return geometry.roadway_width + model.far_setback


@dataclass
class PedestrianAgent:
    """One pedestrian over one trial: Waiting -> Crossing -> Done."""

    model: GapAcceptanceModel
    geometry: WorldGeometry
    accepted_gap: float
    state: PedestrianState
    phase: Phase = Phase.WAITING
    delay_left: float = field(default=-1.0)  # negative = trigger not armed yet

    @classmethod
    def spawn(
        cls,
        model: GapAcceptanceModel,
        geometry: WorldGeometry,
        side: EntrySide,
        accepted_gap: float,
    ) -> "PedestrianAgent":
        state = PedestrianState(
            x_p=start_position(model, side, geometry), xdot_p=0.0, entry_side=side
        )
        return cls(model=model, geometry=geometry, accepted_gap=accepted_gap, state=state)

    def _vehicle_is_past(self, vehicle: VehicleState) -> bool:
        y = self.geometry.vehicle_y(vehicle.d)
        return y > self.geometry.crosswalk_depth / 2.0 + 1.0

    def _should_arm(self, vehicle: VehicleState) -> bool:
        if vehicle.v <= 1e-9:
            # A stopped vehicle offers an infinite gap; every pedestrian takes it.
            return True
        if self._vehicle_is_past(vehicle):
            return True
        if self.accepted_gap > self.model.max_trigger_gap:
            return False
        line_dist = vehicle.d + self.geometry.delta
        if line_dist <= 0.0:
            return False
        return line_dist / vehicle.v <= self.accepted_gap


def pedestrian_tick(agent: PedestrianAgent, vehicle: VehicleState, dt: float) -> PedestrianAgent:
    """Advance the pedestrian by one time step against the current ego state."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if agent.phase is Phase.DONE:
        return agent

    if agent.phase is Phase.WAITING:
        if agent.delay_left < 0.0:
            if not agent._should_arm(vehicle):
                return agent
            agent.delay_left = agent.model.start_delay
        else:
            agent.delay_left -= dt
        if agent.delay_left > 1e-9:
            return agent
        agent.phase = Phase.CROSSING
        sign = 1.0 if agent.state.entry_side is EntrySide.NEAR else -1.0
        agent.state.xdot_p = sign * agent.model.walk_speed

    agent.state.x_p += agent.state.xdot_p * dt
    width = agent.geometry.roadway_width
    if agent.state.entry_side is EntrySide.NEAR:
        done = agent.state.x_p > width
    else:
        done = agent.state.x_p < 0.0
    if done:
        agent.phase = Phase.DONE
        agent.state.xdot_p = 0.0
    return agent
