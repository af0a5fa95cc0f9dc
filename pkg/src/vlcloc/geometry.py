"""Coordinate frames, vehicle layout and per-link geometric quantities.

Frame conventions used throughout the package:

* Angles are radians, counterclockwise from the frame +x axis, wrapped
  to (-pi, pi].
* ``Pose2D.heading`` is the direction of travel.  The ego vehicle frame
  has +y pointing forward and +x along the receiver baseline, so a
  vehicle driving "straight ahead" in that frame has heading pi/2.
* A vehicle body frame puts +x along the lamp baseline (unit 1 to
  unit 2) and +y forward; the body +x axis therefore sits at
  ``heading - pi/2`` in the parent frame.
* The pose of a vehicle refers to unit 1 of its active light face:
  RX 1 (front left) for the ego vehicle, TX 1 (rear left, as seen by a
  follower) for the target.  In the ego RX-1 frame RX 1 is the origin
  and RX 2 sits at (L, 0).
* Rear TX lamps point backward: their optical boresight is the vehicle
  heading rotated by pi.

``link_geometry`` measures the angle of arrival from the +x axis of the
frame the poses are expressed in.  Callers who need the angle relative
to a tilted receiver should first express both poses in that receiver's
own frame (see ``channel.reverse_link`` for the roundtrip case).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import SPEED_OF_LIGHT
from .errors import CoincidentEndpoints

MIN_LINK_DISTANCE = 1e-3  # m; below this a link is considered degenerate


def wrap_angle(angle):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    wrapped = -np.mod(-np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) + np.pi
    return wrapped if wrapped.ndim else float(wrapped)


def rotation_matrix(angle: float) -> np.ndarray:
    """2x2 rotation mapping body coordinates to the parent frame when the
    body +x axis sits at ``angle`` in the parent frame."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Pose2D:
    """Position and direction of travel of a vehicle reference point.

    Attributes:
        x, y: meters in the parent frame.
        heading: direction of travel, radians CCW from the parent +x
            axis, normalized to (-pi, pi].
    """

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def baseline_angle(self) -> float:
        """Angle of the body +x (lamp baseline) axis in the parent frame."""
        return wrap_angle(self.heading - np.pi / 2.0)


@dataclass(frozen=True)
class VehicleLayout:
    """Lamp placement on a vehicle.

    ``rx_separation_l`` and ``tx_separation_d`` are the baselines between
    the two receiver and the two transmitter units.  ``lamp_offsets``
    holds the TX lamp positions in the body frame of the target vehicle,
    measured from its reference point (unit 1 on the rear face); the
    default puts lamp 1 at the reference point and lamp 2 one TX
    separation to the right along the baseline.
    """

    rx_separation_l: float = 1.6
    tx_separation_d: float = 1.6
    length: float = 5.0
    lamp_offsets: tuple[tuple[float, float], ...] = field(default=None)

    def __post_init__(self):
        if self.rx_separation_l <= 0 or self.tx_separation_d <= 0:
            raise ValueError("lamp separations must be positive")
        if self.lamp_offsets is None:
            object.__setattr__(
                self, "lamp_offsets", ((0.0, 0.0), (self.tx_separation_d, 0.0))
            )


@dataclass(frozen=True)
class LinkGeometry:
    """Geometric quantities of one TX-to-RX line-of-sight link.

    Attributes:
        distance_d: Euclidean TX-RX distance, m.
        delay_tau: propagation delay ``distance_d / c``, s.
        aoa_theta: angle of arrival at the RX measured from the frame +x
            axis (the receiver baseline), radians in (-pi, pi].
        irradiance_phi: angle between the TX optical boresight and the
            TX-to-RX ray, radians in [0, pi].
    """

    distance_d: float
    delay_tau: float
    aoa_theta: float
    irradiance_phi: float


def link_geometry(rx_pose: Pose2D, tx_pose: Pose2D) -> LinkGeometry:
    """Compute distance, delay, AoA and irradiance angle for one link.

    Both poses must be expressed in the same frame; the AoA is measured
    from that frame's +x axis with the two-argument arctangent, so links
    straight along +y are well defined.  Raises ``CoincidentEndpoints``
    when the endpoints are closer than 1 mm.
    """
    dx = tx_pose.x - rx_pose.x
    dy = tx_pose.y - rx_pose.y
    distance = float(np.hypot(dx, dy))
    if distance <= MIN_LINK_DISTANCE:
        raise CoincidentEndpoints(
            f"TX and RX are {distance * 1e3:.3f} mm apart; need > 1 mm"
        )
    aoa = float(np.arctan2(dy, dx))
    # Ray leaving the TX toward the RX, measured against the TX boresight.
    ray_angle = float(np.arctan2(-dy, -dx))
    irradiance = abs(wrap_angle(ray_angle - tx_pose.heading))
    return LinkGeometry(
        distance_d=distance,
        delay_tau=distance / SPEED_OF_LIGHT,
        aoa_theta=aoa,
        irradiance_phi=irradiance,
    )


def relative_tx_positions(
    ego_pose: Pose2D, target_pose: Pose2D, layout: VehicleLayout
) -> np.ndarray:
    """Target TX lamp positions expressed in the ego RX-1 frame.

    Returns an array of shape (n_lamps, 2) whose rows are the lamp
    coordinates.  The transform is the rigid map composed of a rotation
    by the heading difference and the translation between the two
    reference points.
    """
    if not (
        np.isfinite(ego_pose.position).all() and np.isfinite(target_pose.position).all()
    ):
        raise ValueError("poses must be finite")
    offsets = np.asarray(layout.lamp_offsets, dtype=float)
    to_world = rotation_matrix(target_pose.baseline_angle)
    world = target_pose.position + offsets @ to_world.T
    to_ego = rotation_matrix(ego_pose.baseline_angle).T
    return (world - ego_pose.position) @ to_ego.T


def tx_unit_poses(
    ego_pose: Pose2D, target_pose: Pose2D, layout: VehicleLayout
) -> tuple[Pose2D, ...]:
    """Target TX lamp poses in the ego RX-1 frame.

    The returned headings are the lamp optical boresights (rear lamps
    point opposite the target's direction of travel), ready to feed
    ``link_geometry`` as transmitter poses.
    """
    positions = relative_tx_positions(ego_pose, target_pose, layout)
    boresight = wrap_angle(
        target_pose.heading + np.pi - ego_pose.baseline_angle
    )
    return tuple(Pose2D(float(p[0]), float(p[1]), boresight) for p in positions)


def rx_unit_poses(layout: VehicleLayout) -> tuple[Pose2D, Pose2D]:
    """Ego receiver poses in the ego RX-1 frame: RX 1 at the origin and
    RX 2 at (L, 0), both looking forward along +y."""
    forward = np.pi / 2.0
    return (
        Pose2D(0.0, 0.0, forward),
        Pose2D(layout.rx_separation_l, 0.0, forward),
    )
