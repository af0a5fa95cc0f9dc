"""Observation models, analytic Jacobians, Fisher information and CRLB.

Each localization method observes a vector of measured physical
parameters G(P) that depends on the target lamp coordinates P:

* ``pdoa``: two range differences between the two target lamps, one per
  receiver, for longitudinally parallel vehicles.  P = [x11, y11].
* ``rtof``: four absolute lamp-to-receiver distances.
  P = [x11, y11, x12, y12].
* ``aoa2``: four angles of arrival at the two receivers.
  P = [x11, y11, x12, y12].
* ``aoa1``: four angles of arrival at receiver 1 across two time
  instants plus the relative travel direction and travel distance.
  P = [x11(t), y11(t), x11(t+dt), y11(t+dt), x12(t), y12(t)]; the second
  lamp's later position follows from the constant-relative-heading
  assumption and is not estimated.

With independent Gaussian measurement noise the Fisher information is
the noise-weighted Gram matrix of the observation Jacobian,

    F[m, m'] = sum_h (1 / sigma_h^2) dG_h/dP_m dG_h/dP_m',

and the variance of any unbiased estimate of P_m is bounded below by
the (m, m) entry of the inverse.  Two additional diagnostic models,
``pdoa-4coord`` and ``aoa1-8coord``, extend the parameter vectors with
the redundant lamp coordinates; their information matrices are rank
deficient at every admissible geometry, which is why the methods
estimate the reduced vectors above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateGeometry,
    DimensionMismatch,
    MethodInapplicable,
)
from .geometry import MIN_LINK_DISTANCE, wrap_angle

#: Relative singular value threshold for numerical rank decisions.
RANK_RTOL = 1e-9
#: Condition number above which the information matrix is treated as
#: numerically non-invertible.
MAX_CONDITION = 1e12
#: Largest heading difference still accepted as "longitudinally parallel",
#: and largest heading drift per estimation interval still accepted as
#: "constant relative heading".
HEADING_TOLERANCE = math.radians(0.1)


@dataclass(frozen=True)
class ObservationModel:
    """A method's noiseless observation map evaluated around one geometry.

    ``p`` is the parameter vector in the method's canonical ordering and
    ``rx_separation_l`` / ``tx_separation_d`` the lamp baselines entering
    the geometric relations.
    """

    method: str
    p: np.ndarray
    rx_separation_l: float = 1.6
    tx_separation_d: float = 1.6

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        expected = _PARAM_COUNTS.get(self.method)
        if expected is None:
            raise ValueError(f"unknown observation model '{self.method}'")
        if self.p.shape != (expected,):
            raise DimensionMismatch(
                f"{self.method} expects {expected} parameters, got {self.p.shape}"
            )


_PARAM_COUNTS = {
    "pdoa": 2,
    "rtof": 4,
    "aoa2": 4,
    "aoa1": 6,
    "pdoa-4coord": 4,
    "aoa1-8coord": 8,
}

OBSERVATION_COUNTS = {
    "pdoa": 2,
    "rtof": 4,
    "aoa2": 4,
    "aoa1": 6,
    "pdoa-4coord": 2,
    "aoa1-8coord": 6,
}


def pdoa_model(x11, y11, rx_separation_l=1.6, tx_separation_d=1.6):
    return ObservationModel("pdoa", [x11, y11], rx_separation_l, tx_separation_d)


def rtof_model(x11, y11, x12, y12, rx_separation_l=1.6):
    return ObservationModel("rtof", [x11, y11, x12, y12], rx_separation_l)


def aoa2_model(x11, y11, x12, y12, rx_separation_l=1.6):
    return ObservationModel("aoa2", [x11, y11, x12, y12], rx_separation_l)


def aoa1_model(x11_t, y11_t, x11_dt, y11_dt, x12_t, y12_t):
    return ObservationModel("aoa1", [x11_t, y11_t, x11_dt, y11_dt, x12_t, y12_t])


def pdoa_model_4coord(x11, y11, rx_separation_l=1.6, tx_separation_d=1.6):
    """Diagnostic variant treating both lamps as free coordinates while
    the vehicles are parallel; its 4x4 information matrix is singular."""
    return ObservationModel(
        "pdoa-4coord",
        [x11, y11, x11 + tx_separation_d, y11],
        rx_separation_l,
        tx_separation_d,
    )


def aoa1_model_8coord(x11_t, y11_t, x11_dt, y11_dt, x12_t, y12_t):
    """Diagnostic variant that also carries the second lamp's position at
    the later instant, which the constant-heading assumption already
    determines; the 6x8 Jacobian cannot reach rank 8."""
    x12_dt = x12_t + (x11_dt - x11_t)
    y12_dt = y12_t + (y11_dt - y11_t)
    return ObservationModel(
        "aoa1-8coord",
        [x11_t, y11_t, x11_dt, y11_dt, x12_t, y12_t, x12_dt, y12_dt],
    )


def _check_distances(points, l):
    for x, y in points:
        if math.hypot(x, y) <= MIN_LINK_DISTANCE:
            raise DegenerateGeometry("lamp coincides with receiver 1")
        if math.hypot(x - l, y) <= MIN_LINK_DISTANCE:
            raise DegenerateGeometry("lamp coincides with receiver 2")


def observe(model: ObservationModel) -> np.ndarray:
    """Evaluate the noiseless observation vector G(P)."""
    p = model.p
    l = model.rx_separation_l
    if model.method == "pdoa":
        x, y = p
        d = model.tx_separation_d
        _check_distances([(x, y), (x + d, y)], l)
        return np.array(
            [
                math.hypot(x, y) - math.hypot(x + d, y),
                math.hypot(x - l, y) - math.hypot(x - l + d, y),
            ]
        )
    if model.method == "pdoa-4coord":
        x11, y11, x12, y12 = p
        _check_distances([(x11, y11), (x12, y12)], l)
        return np.array(
            [
                math.hypot(x11, y11) - math.hypot(x12, y12),
                math.hypot(x11 - l, y11) - math.hypot(x12 - l, y12),
            ]
        )
    if model.method == "rtof":
        x11, y11, x12, y12 = p
        _check_distances([(x11, y11), (x12, y12)], l)
        return np.array(
            [
                math.hypot(x11, y11),
                math.hypot(x12, y12),
                math.hypot(x11 - l, y11),
                math.hypot(x12 - l, y12),
            ]
        )
    if model.method == "aoa2":
        x11, y11, x12, y12 = p
        _check_distances([(x11, y11), (x12, y12)], l)
        return np.array(
            [
                math.atan2(y11, x11),
                math.atan2(y12, x12),
                math.atan2(y11, x11 - l),
                math.atan2(y12, x12 - l),
            ]
        )
    if model.method in ("aoa1", "aoa1-8coord"):
        if model.method == "aoa1":
            x11t, y11t, x11dt, y11dt, x12t, y12t = p
            x12dt = x12t + (x11dt - x11t)
            y12dt = y12t + (y11dt - y11t)
        else:
            x11t, y11t, x11dt, y11dt, x12t, y12t, x12dt, y12dt = p
        dx = x11dt - x11t
        dy = y11dt - y11t
        dtr = math.hypot(dx, dy)
        if dtr <= MIN_LINK_DISTANCE:
            raise DegenerateGeometry(
                "relative displacement below 1 mm; travel direction undefined"
            )
        for x, y in ((x11t, y11t), (x11dt, y11dt), (x12t, y12t), (x12dt, y12dt)):
            if math.hypot(x, y) <= MIN_LINK_DISTANCE:
                raise DegenerateGeometry("lamp coincides with receiver 1")
        return np.array(
            [
                math.atan2(y11t, x11t),
                math.atan2(y11dt, x11dt),
                math.atan2(y12t, x12t),
                math.atan2(y12dt, x12dt),
                math.atan2(dx, dy),
                dtr,
            ]
        )
    raise ValueError(model.method)


def _range_row(x, y):
    d = math.hypot(x, y)
    return x / d, y / d


def _angle_row(x, y):
    rho = x * x + y * y
    return -y / rho, x / rho


def jacobian_analytic(model: ObservationModel) -> np.ndarray:
    """Closed-form Jacobian dG/dP of the observation model.

    Rows follow the observation order of ``observe``; entries outside the
    listed blocks are exactly zero.
    """
    observe(model)  # geometry guards
    p = model.p
    l = model.rx_separation_l
    if model.method == "pdoa":
        x, y = p
        d = model.tx_separation_d

        def f1(u):
            return u / math.hypot(u, y)

        def f2(u):
            return 1.0 / math.hypot(u, y)

        return np.array(
            [
                [f1(x) - f1(x + d), y * (f2(x) - f2(x + d))],
                [f1(x - l) - f1(x - l + d), y * (f2(x - l) - f2(x - l + d))],
            ]
        )
    if model.method == "pdoa-4coord":
        x11, y11, x12, y12 = p
        j = np.zeros((2, 4))
        j[0, 0:2] = _range_row(x11, y11)
        j[0, 2:4] = -np.asarray(_range_row(x12, y12))
        j[1, 0:2] = _range_row(x11 - l, y11)
        j[1, 2:4] = -np.asarray(_range_row(x12 - l, y12))
        return j
    if model.method == "rtof":
        x11, y11, x12, y12 = p
        j = np.zeros((4, 4))
        j[0, 0:2] = _range_row(x11, y11)
        j[1, 2:4] = _range_row(x12, y12)
        j[2, 0:2] = _range_row(x11 - l, y11)
        j[3, 2:4] = _range_row(x12 - l, y12)
        return j
    if model.method == "aoa2":
        x11, y11, x12, y12 = p
        j = np.zeros((4, 4))
        j[0, 0:2] = _angle_row(x11, y11)
        j[1, 2:4] = _angle_row(x12, y12)
        j[2, 0:2] = _angle_row(x11 - l, y11)
        j[3, 2:4] = _angle_row(x12 - l, y12)
        return j
    if model.method in ("aoa1", "aoa1-8coord"):
        extended = model.method == "aoa1-8coord"
        if extended:
            x11t, y11t, x11dt, y11dt, x12t, y12t, x12dt, y12dt = p
        else:
            x11t, y11t, x11dt, y11dt, x12t, y12t = p
            x12dt = x12t + (x11dt - x11t)
            y12dt = y12t + (y11dt - y11t)
        dx = x11dt - x11t
        dy = y11dt - y11t
        q = dx * dx + dy * dy
        dtr = math.sqrt(q)
        ncols = 8 if extended else 6
        j = np.zeros((6, ncols))
        j[0, 0:2] = _angle_row(x11t, y11t)
        j[1, 2:4] = _angle_row(x11dt, y11dt)
        j[2, 4:6] = _angle_row(x12t, y12t)
        gx, gy = _angle_row(x12dt, y12dt)
        if extended:
            j[3, 6:8] = (gx, gy)
        else:
            # theta_12(t+dt) reaches x11(t), y11(t) and x12(t), y12(t)
            # through the shared displacement: x12(t+dt) = x12 + dx,
            # y12(t+dt) = y12 + dy with dx = x11(t+dt) - x11(t).
            j[3, 0] = -gx
            j[3, 1] = -gy
            j[3, 2] = gx
            j[3, 3] = gy
            j[3, 4] = gx
            j[3, 5] = gy
        # alpha = atan2(dx, dy): d alpha/d dx = dy/q, d alpha/d dy = -dx/q
        j[4, 0] = -dy / q
        j[4, 1] = dx / q
        j[4, 2] = dy / q
        j[4, 3] = -dx / q
        # d_tr = sqrt(q)
        j[5, 0] = -dx / dtr
        j[5, 1] = -dy / dtr
        j[5, 2] = dx / dtr
        j[5, 3] = dy / dtr
        return j
    raise ValueError(model.method)


def fisher(jacobian: np.ndarray, variances) -> np.ndarray:
    """Fisher information matrix of independent Gaussian observations.

    ``variances`` may be a ``ParamVariances`` or a plain sequence; rows
    with infinite variance carry no information and are dropped from the
    sum.  The result is symmetric positive semidefinite by construction.
    """
    var = np.asarray(getattr(variances, "variances", variances), dtype=float)
    jacobian = np.asarray(jacobian, dtype=float)
    if jacobian.ndim != 2 or var.shape != (jacobian.shape[0],):
        raise DimensionMismatch(
            f"{jacobian.shape[0]} Jacobian rows vs {var.shape} variances"
        )
    if np.any(var < 0):
        raise ValueError("variances must be non-negative")
    keep = np.isfinite(var)
    if np.any(var[keep] == 0):
        raise ValueError("zero observation variance gives unbounded information")
    j = jacobian[keep]
    w = 1.0 / var[keep]
    f = (j * w[:, None]).T @ j
    return 0.5 * (f + f.T)


@dataclass(frozen=True)
class CrlbResult:
    """Lower bounds on unbiased estimation of the parameter vector.

    ``variances`` and ``stds`` hold the per-coordinate bounds (and their
    square roots) when the information matrix is invertible, else None
    with ``rank_deficient`` set.  ``rank`` and ``condition_number`` are
    reported in both cases.
    """

    variances: np.ndarray | None
    stds: np.ndarray | None
    rank: int
    condition_number: float
    n_params: int
    rank_deficient: bool
    observation_variances: np.ndarray | None = field(default=None, compare=False)

    @property
    def invertible(self) -> bool:
        return not self.rank_deficient


def crlb(f: np.ndarray, observation_variances=None) -> CrlbResult:
    """Extract the per-coordinate bounds from an information matrix.

    The numerical rank uses singular values above ``RANK_RTOL`` times the
    largest one.  A deficient or ill-conditioned matrix (condition number
    at least 1e12) yields a rank-deficient result instead of an error;
    unidentifiable geometries are a finding, not a failure.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    if f.shape != (n, n):
        raise DimensionMismatch("information matrix must be square")
    sv = np.linalg.svd(f, compute_uv=False)
    top = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > RANK_RTOL * top)) if top > 0 else 0
    cond = float(sv[0] / sv[-1]) if rank == n and sv[-1] > 0 else math.inf
    if rank < n or cond >= MAX_CONDITION:
        return CrlbResult(
            variances=None,
            stds=None,
            rank=rank,
            condition_number=cond,
            n_params=n,
            rank_deficient=True,
            observation_variances=observation_variances,
        )
    bounds = np.diag(np.linalg.inv(f)).copy()
    bounds[bounds < 0] = 0.0  # numerical dust on a PSD inverse
    return CrlbResult(
        variances=bounds,
        stds=np.sqrt(bounds),
        rank=rank,
        condition_number=cond,
        n_params=n,
        rank_deficient=False,
        observation_variances=observation_variances,
    )


# ---------------------------------------------------------------------------
# Method applicability and the full sampling-to-bound pipeline
# ---------------------------------------------------------------------------


def pdoa_applicable(frame) -> bool:
    """Range-difference positioning assumes longitudinally parallel
    vehicles (equal headings)."""
    return abs(wrap_angle(frame.target.heading - frame.ego.heading)) <= HEADING_TOLERANCE


def aoa1_applicable(frame, next_frame) -> bool:
    """Single-receiver AoA assumes the relative heading stays constant
    across the estimation interval pair."""
    if next_frame is None:
        return False
    d0 = wrap_angle(frame.target.heading - frame.ego.heading)
    d1 = wrap_angle(next_frame.target.heading - next_frame.ego.heading)
    return abs(wrap_angle(d1 - d0)) <= HEADING_TOLERANCE


def check_applicable(method: str, frame, next_frame=None) -> None:
    """Raise ``MethodInapplicable`` naming the violated assumption."""
    if method == "pdoa" and not pdoa_applicable(frame):
        raise MethodInapplicable(
            "PDoA requires longitudinally parallel vehicles "
            "(equal ego and target headings)"
        )
    if method == "aoa1" and not aoa1_applicable(frame, next_frame):
        raise MethodInapplicable(
            "AoA1 requires a constant relative heading across the "
            "estimation interval pair"
        )


def model_for_frame(method: str, frame, layout, next_frame=None) -> ObservationModel:
    """Observation model evaluated at a scenario frame's true geometry."""
    from .geometry import relative_tx_positions

    tx = relative_tx_positions(frame.ego, frame.target, layout)
    l = layout.rx_separation_l
    d = layout.tx_separation_d
    if method == "pdoa":
        return pdoa_model(tx[0, 0], tx[0, 1], l, d)
    if method == "rtof":
        return rtof_model(tx[0, 0], tx[0, 1], tx[1, 0], tx[1, 1], l)
    if method == "aoa2":
        return aoa2_model(tx[0, 0], tx[0, 1], tx[1, 0], tx[1, 1], l)
    if method == "aoa1":
        if next_frame is None:
            raise MethodInapplicable("AoA1 needs the successor frame")
        tx_next = relative_tx_positions(next_frame.ego, next_frame.target, layout)
        return aoa1_model(
            tx[0, 0], tx[0, 1], tx_next[0, 0], tx_next[0, 1], tx[1, 0], tx[1, 1]
        )
    raise ValueError(f"unknown method '{method}'")


def crlb_pipeline(
    method: str,
    trajectory,
    frame_index: int,
    condition,
    trials: int = 1000,
    seed: int = 0,
    setup=None,
) -> CrlbResult:
    """Sampled-variance CRLB of one method at one trajectory frame.

    Composes the Monte-Carlo variance sampler with the analytic Jacobian,
    the Fisher assembly and the bound extraction.  AoA1 consumes the
    frame and its successor; other methods just the frame.  Raises
    ``MethodInapplicable`` when the frame violates the method's validity
    assumption.
    """
    from .measurement import default_setup, sample_parameter_variances

    setup = setup or default_setup()
    frame = trajectory.frames[frame_index]
    next_frame = (
        trajectory.frames[frame_index + 1]
        if frame_index + 1 < len(trajectory.frames)
        else None
    )
    check_applicable(method, frame, next_frame)
    variances = sample_parameter_variances(
        method, frame, condition, trials, seed, setup=setup, next_frame=next_frame
    )
    model = model_for_frame(method, frame, setup.layout, next_frame)
    jac = jacobian_analytic(model)
    f = fisher(jac, variances)
    return crlb(f, observation_variances=variances.variances)
