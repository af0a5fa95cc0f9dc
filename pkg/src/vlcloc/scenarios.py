"""Driving scenario generation at the estimation rate.

Three scenarios cover the platooning and collision-avoidance situations
the bounds are evaluated on, as timestamped ego/target pose pairs:

* ``platoon-straight``: both vehicles on one lane with parallel
  headings; the target recedes from 5 m to 18 m longitudinal gap.
* ``platoon-join``: the target cuts in from the adjacent left lane on a
  straight diagonal, keeping an exactly constant relative heading, and
  ends directly ahead at close range.
* ``lane-change-braking``: the target, one lane left and slightly
  ahead, brakes hard while crossing two lanes to the right through the
  ego lane; its relative heading varies throughout, and near the end of
  the maneuver its rear lamps point away from the ego receivers.

Vehicle motion uses the kinematic bicycle (Ackermann) model with zero
sideslip.  Poses refer to unit 1 of the active light face (see
``geometry``); the world frame has the road along +y, so vehicles
driving straight carry heading pi/2.  Scenario kinematics defaults
(speeds, durations, steering profile) are representative values chosen
for plausibility, not measured data.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .geometry import Pose2D, VehicleLayout, wrap_angle

MAX_STEERING = math.radians(45.0)

SCENARIO_IDS = ("platoon-straight", "platoon-join", "lane-change-braking")

_ALIASES = {
    "platoon-straight": "platoon-straight",
    "platoonstraight": "platoon-straight",
    "straight": "platoon-straight",
    "1": "platoon-straight",
    "scenario1": "platoon-straight",
    "platoon-join": "platoon-join",
    "platoonjoin": "platoon-join",
    "join": "platoon-join",
    "2": "platoon-join",
    "scenario2": "platoon-join",
    "lane-change-braking": "lane-change-braking",
    "lanechangebraking": "lane-change-braking",
    "lane-change": "lane-change-braking",
    "3": "lane-change-braking",
    "scenario3": "lane-change-braking",
}


def normalize_scenario_id(value: str) -> str:
    key = value.strip().lower().replace("_", "-").replace(" ", "-")
    key_compact = key.replace("-", "")
    if key in _ALIASES:
        return _ALIASES[key]
    if key_compact in _ALIASES:
        return _ALIASES[key_compact]
    raise DomainError(
        f"unknown scenario '{value}'; choose one of {', '.join(SCENARIO_IDS)}"
    )


@dataclass(frozen=True)
class ScenarioSpec:
    """Kinematic parameters of one scenario run.

    ``rate`` is the pose output rate in Hz; trajectories always span
    ``duration`` seconds with exactly ``duration * rate + 1`` frames.
    """

    scenario_id: str
    duration: float
    rate: float = 200.0
    lane_width: float = 3.5
    ego_speed: float = 25.0
    target_speed: float = 27.0
    start_gap: float = 5.0
    end_gap: float = 5.0
    target_decel: float = 6.0
    lanes_crossed: float = 2.0
    wheelbase: float = 2.8

    def __post_init__(self):
        if self.rate <= 0 or self.duration <= 0:
            raise DomainError("rate and duration must be positive")
        if self.lane_width <= 0 or self.wheelbase <= 0:
            raise DomainError("lane width and wheelbase must be positive")

    @classmethod
    def for_id(cls, scenario_id: str, **overrides) -> "ScenarioSpec":
        sid = normalize_scenario_id(scenario_id)
        defaults = {
            "platoon-straight": dict(
                duration=6.5, ego_speed=25.0, target_speed=27.0, start_gap=5.0
            ),
            "platoon-join": dict(
                duration=8.0, ego_speed=20.0, target_speed=20.0,
                start_gap=8.0, end_gap=5.0,
            ),
            "lane-change-braking": dict(
                duration=1.5, ego_speed=25.0, target_speed=27.0,
                start_gap=4.5, target_decel=7.0,
            ),
        }[sid]
        defaults.update(overrides)
        return cls(scenario_id=sid, **defaults)


@dataclass(frozen=True)
class Frame:
    """One trajectory timestep: ego and target poses in the world frame."""

    time: float
    ego: Pose2D
    target: Pose2D


@dataclass(frozen=True)
class Trajectory:
    frames: tuple[Frame, ...]
    spec: ScenarioSpec

    def __len__(self):
        return len(self.frames)

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self.frames])


@dataclass(frozen=True)
class VehicleState:
    pose: Pose2D
    speed: float


def ackermann_step(
    state: VehicleState, steering_angle: float, wheelbase: float, dt: float
) -> VehicleState:
    """One kinematic bicycle update without lateral slip.

    The position advances along the current heading by ``speed * dt``,
    then the heading turns by ``speed / wheelbase * tan(steering) * dt``.
    """
    if abs(steering_angle) >= MAX_STEERING:
        raise DomainError("steering angle must satisfy |delta| < 45 degrees")
    if dt <= 0:
        raise DomainError("dt must be positive")
    pose, v = state.pose, state.speed
    x = pose.x + v * dt * math.cos(pose.heading)
    y = pose.y + v * dt * math.sin(pose.heading)
    heading = pose.heading + v / wheelbase * math.tan(steering_angle) * dt
    return VehicleState(Pose2D(x, y, heading), v)


def _frame_times(spec: ScenarioSpec) -> np.ndarray:
    n = int(round(spec.duration * spec.rate))
    return np.arange(n + 1) / spec.rate


def _substeps(spec: ScenarioSpec) -> int:
    """Internal integration substeps so the Euler step never exceeds the
    default 200 Hz resolution."""
    return max(1, int(math.ceil(200.0 / spec.rate)))


def _straight_states(start: Pose2D, speed: float, spec: ScenarioSpec):
    """Constant-velocity motion via zero-steering bicycle updates."""
    sub = _substeps(spec)
    dt = 1.0 / (spec.rate * sub)
    state = VehicleState(start, speed)
    states = [state]
    for _ in range(len(_frame_times(spec)) - 1):
        for _ in range(sub):
            state = ackermann_step(state, 0.0, spec.wheelbase, dt)
        states.append(state)
    return states


def _lane_change_delta(t: float, swing: float, duration: float) -> float:
    """Relative-heading profile of the lane change: smooth, zero at both
    ends, peak deflection ``swing`` to the right at mid-maneuver."""
    return -swing * math.sin(math.pi * t / duration) ** 2


def _lane_change_states(spec: ScenarioSpec, swing: float):
    """Integrate the braking lane change, steering the bicycle so its
    heading tracks the closed-form profile exactly on the step grid."""
    sub = _substeps(spec)
    dt = 1.0 / (spec.rate * sub)
    start = Pose2D(-spec.lane_width, spec.start_gap, math.pi / 2.0)
    state = VehicleState(start, spec.target_speed)
    states = [state]
    n_steps = (len(_frame_times(spec)) - 1) * sub
    for k in range(n_steps):
        t0 = k * dt
        t1 = (k + 1) * dt
        v = max(spec.target_speed - spec.target_decel * t0, 1.0)
        h0 = _lane_change_delta(t0, swing, spec.duration)
        h1 = _lane_change_delta(t1, swing, spec.duration)
        steering = math.atan(spec.wheelbase * (h1 - h0) / (v * dt))
        state = ackermann_step(VehicleState(state.pose, v), steering, spec.wheelbase, dt)
        if (k + 1) % sub == 0:
            states.append(state)
    return states


def _solve_lane_change_swing(spec: ScenarioSpec) -> float:
    """Peak heading deflection that makes the maneuver cross exactly
    ``lanes_crossed`` lane widths, found by bisection on the endpoint."""
    goal = spec.lanes_crossed * spec.lane_width

    def lateral(swing):
        states = _lane_change_states(spec, swing)
        return states[-1].pose.x - states[0].pose.x

    lo, hi = 0.0, math.radians(60.0)
    if lateral(hi) < goal:
        raise DomainError("lane change not reachable within steering limits")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if lateral(mid) < goal:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generate_scenario(spec: ScenarioSpec) -> Trajectory:
    """Generate the timestamped ego/target pose pairs of a scenario.

    The ego vehicle always drives straight at constant speed; the target
    follows the scenario-specific profile.  Deterministic and pure.
    """
    times = _frame_times(spec)
    north = math.pi / 2.0
    ego_states = _straight_states(Pose2D(0.0, 0.0, north), spec.ego_speed, spec)

    sid = spec.scenario_id
    if sid == "platoon-straight":
        target_states = _straight_states(
            Pose2D(0.0, spec.start_gap, north), spec.target_speed, spec
        )
    elif sid == "platoon-join":
        # Straight diagonal from one lane left to directly ahead, with the
        # longitudinal gap closing from start_gap to end_gap.
        vx = spec.lane_width / spec.duration
        vy = spec.ego_speed + (spec.end_gap - spec.start_gap) / spec.duration
        heading = math.atan2(vy, vx)
        speed = math.hypot(vx, vy)
        target_states = _straight_states(
            Pose2D(-spec.lane_width, spec.start_gap, heading), speed, spec
        )
    elif sid == "lane-change-braking":
        swing = _solve_lane_change_swing(spec)
        target_states = _lane_change_states(spec, swing)
    else:
        raise DomainError(f"unknown scenario id '{sid}'")

    frames = tuple(
        Frame(float(t), e.pose, s.pose)
        for t, e, s in zip(times, ego_states, target_states)
    )
    return Trajectory(frames=frames, spec=spec)


def min_link_distance(trajectory: Trajectory, layout: VehicleLayout = None) -> float:
    """Smallest RX-to-TX distance over the whole trajectory."""
    from .geometry import relative_tx_positions, rx_unit_poses

    layout = layout or VehicleLayout()
    rxs = rx_unit_poses(layout)
    best = math.inf
    for frame in trajectory.frames:
        tx = relative_tx_positions(frame.ego, frame.target, layout)
        for rx in rxs:
            d = np.hypot(tx[:, 0] - rx.x, tx[:, 1] - rx.y).min()
            best = min(best, float(d))
    return best


def export_trajectory_csv(trajectory: Trajectory, path) -> None:
    """Write the trajectory as CSV with one row per frame."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "time_s",
                "ego_x_m",
                "ego_y_m",
                "ego_heading_rad",
                "target_x_m",
                "target_y_m",
                "target_heading_rad",
            ]
        )
        for f in trajectory.frames:
            writer.writerow(
                [
                    f"{v:.9g}"
                    for v in (
                        f.time,
                        f.ego.x,
                        f.ego.y,
                        f.ego.heading,
                        f.target.x,
                        f.target.y,
                        f.target.heading,
                    )
                ]
            )
