"""Four-mode hybrid longitudinal controller.

The controller holds one of four discrete modes and maps the current
vehicle and pedestrian states to an acceleration command once per tick.
Mode commands are feedback-feedforward: a desired acceleration plus a
proportional correction toward a desired velocity profile.
"""

from __future__ import annotations

import math
from enum import Enum

from .core import (
    ControllerParams,
    PedestrianState,
    VehicleState,
    WorldGeometry,
    comfort_brake_distance,
    max_brake_distance,
)


class Mode(Enum):
    DRIVING = "Driving"
    YIELDING = "Yielding"
    HARD_BRAKING = "HardBraking"
    SPEED_UP = "SpeedUp"


def in_crosswalk(ped: PedestrianState, geometry: WorldGeometry) -> bool:
    """True while the pedestrian holds the right of way over the vehicle.

    A pedestrian counts from the instant they start moving toward the
    legally relevant span, even while still on the sidewalk, and stops
    counting once past the end of that span. Someone standing still inside
    the span keeps holding the vehicle; someone walking away never
    triggers it.
    """
    s = ped.span_coord(geometry)
    sdot = ped.span_speed()
    inside = 0.0 <= s <= geometry.x_f
    approaching = sdot > 0.0 and s < geometry.x_f
    return inside or approaching


def time_advantage(vehicle: VehicleState, ped: PedestrianState) -> float:
    """Pedestrian's time to reach the vehicle's lane minus the vehicle's time gap.

    Large positive values mean the vehicle clears long before the pedestrian
    arrives. Returns +inf for a stationary pedestrian or one already past
    the vehicle's lane, since neither can conflict with the vehicle.
    """
    if ped.xdot_p == 0.0:
        return math.inf
    t_reach = (vehicle.x_v - ped.x_p) / ped.xdot_p
    if t_reach < 0.0:
        return math.inf
    return t_reach - vehicle.d / vehicle.v


class HybridController:
    """Mode machine owned by a single trial.

    ``d_o`` / ``v_o`` are the distance and speed latched when a braking
    profile starts; Yielding re-latches them at the moment its coast phase
    ends so the constant-deceleration profile lands at the stop point.
    Commands are saturated per mode: Driving and Yielding stay inside the
    comfort envelope, HardBraking may use the full braking authority,
    SpeedUp commands the comfort acceleration.
    """

    def __init__(self, params: ControllerParams, geometry: WorldGeometry, dt: float = 0.05):
        self.params = params
        self.geometry = geometry
        self.dt = dt  # sample time; used as a one-tick lead on the braking point
        self.mode = Mode.DRIVING
        self.d_o = 0.0
        self.v_o = 0.0
        self._decel_latched = False
        self.safety_events: list[str] = []

    def reset(self) -> None:
        self.mode = Mode.DRIVING
        self.d_o = 0.0
        self.v_o = 0.0
        self._decel_latched = False
        self.safety_events.clear()

    # -- mode commands -----------------------------------------------------

    def driving_command(self, v: float) -> float:
        p = self.params
        a = p.k_s * (p.v_speedlimit - v)
        return _clamp(a, -p.a_cmf, p.a_cmf)

    def yielding_command(self, d: float, v: float) -> float:
        p = self.params
        if not self._decel_latched:
            # Coast phase: hold the speed limit until the comfortable braking
            # point, led by the brake-communication delay plus one sample so
            # the quantized switch lands at or before the stop point.
            if d > comfort_brake_distance(v, p.a_cmf) + (p.t_delay + self.dt) * v:
                a = p.k_s * (p.v_speedlimit - v)
                return _clamp(a, -p.a_cmf, p.a_cmf)
            self.d_o = d
            self.v_o = v
            self._decel_latched = True
        v_des = self.yield_speed_profile(d)
        a = -p.a_cmf + p.k_s * (v_des - v)
        return _clamp(a, -p.a_cmf, p.a_cmf)

    def yield_speed_profile(self, d: float) -> float:
        """Constant-deceleration profile, v_o at d_o and 0 at the stop point."""
        arg = 2.0 * self.params.a_cmf * (d - self.d_o) + self.v_o * self.v_o
        return math.sqrt(max(0.0, arg))

    def hard_braking_command(self, d: float, v: float) -> float:
        p = self.params
        if d <= 0.0:
            if not self.safety_events or self.safety_events[-1] != "hard_braking_overrun":
                self.safety_events.append("hard_braking_overrun")
            return -p.a_max
        v_des = self.brake_speed_profile(d)
        a = -v * v / (2.0 * d) + p.k_s * (v_des - v)
        return _clamp(a, -p.a_max, p.a_cmf)

    def brake_speed_profile(self, d: float) -> float:
        """Square-root profile matching v_o at d_o and 0 at the stop point."""
        if d <= 0.0 or self.d_o <= 0.0:
            return 0.0
        return self.v_o / math.sqrt(self.d_o) * math.sqrt(d)

    def speed_up_command(self) -> float:
        return self.params.a_cmf

    # -- one controller tick -----------------------------------------------

    def step(self, vehicle: VehicleState, ped: PedestrianState) -> float:
        """Run one pass of the mode machine and return the acceleration command.

        Mode blocks cascade the way the control loop is written: a
        transition out of Driving produces the new mode's command on the
        same tick, while an exit back to Driving keeps the old mode's
        command for the transition tick.
        """
        p = self.params
        d, v = vehicle.d, vehicle.v
        a = 0.0
        ped_active = in_crosswalk(ped, self.geometry)

        if self.mode is Mode.DRIVING:
            a = self.driving_command(v)
            if d > 0.0 and ped_active:
                if self._crossing_time_advantage(vehicle, ped) > p.tau_max:
                    pass  # enough margin to continue through
                else:
                    d_cmf = comfort_brake_distance(v, p.a_cmf)
                    d_max = max_brake_distance(v, p.a_max)
                    if d >= d_cmf:
                        self._enter(Mode.YIELDING, d, v)
                    elif d > d_max:
                        self._enter(Mode.HARD_BRAKING, d, v)
                    else:
                        self._enter(Mode.SPEED_UP, d, v)

        if self.mode is Mode.YIELDING:
            a = self.yielding_command(d, v)
            if not ped_active:
                self.mode = Mode.DRIVING

        if self.mode is Mode.HARD_BRAKING:
            a = self.hard_braking_command(d, v)
            if not ped_active:
                self.mode = Mode.DRIVING

        if self.mode is Mode.SPEED_UP:
            a = self.speed_up_command()
            if not ped_active or d < 0.0:
                self.mode = Mode.DRIVING

        return _clamp(a, -p.a_max, p.a_cmf)

    def _enter(self, mode: Mode, d: float, v: float) -> None:
        self.mode = mode
        self.d_o = d
        self.v_o = v
        self._decel_latched = False

    def _crossing_time_advantage(self, vehicle: VehicleState, ped: PedestrianState) -> float:
        """Time advantage referenced to the pedestrian's walking line.

        The pass/yield question is whether the vehicle clears the
        crosswalk, not the stop point short of it, so the guard adds the
        safety offset to the vehicle's remaining distance.
        """
        if ped.xdot_p == 0.0:
            return math.inf
        t_reach = (vehicle.x_v - ped.x_p) / ped.xdot_p
        if t_reach < 0.0:
            return math.inf
        if vehicle.v <= 0.0:
            return -math.inf  # stopped vehicle can never pass first
        return t_reach - (vehicle.d + self.geometry.delta) / vehicle.v


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x
