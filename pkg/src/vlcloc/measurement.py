"""Monte-Carlo simulators of the four parameter-measurement front ends.

Each front end maps noisy received waveforms (or noisy vehicle sensor
readings) to measured physical parameters:

* phase-difference ranging: per-tone complex correlations at the two
  receivers, conjugate-multiplied, give the difference in propagation
  distance of each transmitter's tone between the receivers;
* roundtrip ranging: a tone travels to the target unit, is regenerated
  at the phase the target measured, travels back, and the accumulated
  phase divided by twice the tone frequency gives the distance;
* quadrant AoA sensing: the lens spot distributes one tone's power
  across the four cells, the measured amplitude imbalance is inverted
  through a lookup table to the angle of arrival;
* ego sensors: odometry and heading readings combine into the relative
  travel direction and travel distance.

``sample_parameter_variances`` runs a front end many times with
independent noise and returns the per-observation sample variances that
feed the Fisher information.  Two statistically identical sampling paths
exist: ``waveform`` synthesizes every noisy waveform sample, while
``projected`` draws the complex tone-correlation statistics directly
from their exact Gaussian law (the tones are orthogonal over the
estimation window, so the correlations are jointly circular Gaussian
with per-component variance 2 sigma^2 / N).  The projected path is the
default; it makes full-trajectory sweeps tractable and is validated
against the waveform path in the test suite.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (
    LOW_NOISE,
    ChannelCondition,
    LinkBudget,
    QrxConfig,
    TxConfig,
    cell_noise_variance,
    channel_gain,
    noise_variance,
    optical_gain,
    reverse_link,
    sample_times,
    synthesize_rx,
    tone_correlation,
    tone_phase,
)
from .constants import SPEED_OF_LIGHT
from .errors import (
    AmbiguityWarning,
    DegenerateMotion,
    DomainError,
    MethodInapplicable,
    NoSignal,
    OutOfFov,
    ToneCollision,
)
from .geometry import (
    LinkGeometry,
    VehicleLayout,
    link_geometry,
    rx_unit_poses,
    tx_unit_poses,
    wrap_angle,
)

METHODS = ("pdoa", "rtof", "aoa2", "aoa1")

METHOD_LABELS = {"pdoa": "PDoA", "rtof": "RToF", "aoa2": "AoA2", "aoa1": "AoA1"}

#: Observation count per method.
OBSERVATION_DIMS = {"pdoa": 2, "rtof": 4, "aoa2": 4, "aoa1": 6}

_METHOD_SEED_TAG = {"pdoa": 1, "rtof": 2, "aoa2": 3, "aoa1": 4}

#: Trials per chunk in the vectorized samplers.  Fixed so results are
#: reproducible for a given seed and trial count.
_CHUNK = 128


@dataclass(frozen=True)
class SensorNoise:
    """Standard deviations of the vehicle sensor readings feeding the
    single-receiver method: odometry distances and relative heading.
    Defaults are representative values, not measured data."""

    odometry_sigma: float = 0.01
    heading_sigma: float = math.radians(0.1)

    def __post_init__(self):
        if self.odometry_sigma < 0 or self.heading_sigma < 0:
            raise ValueError("sensor noise must be non-negative")


@dataclass(frozen=True)
class ParamVariances:
    """Sampled measurement variances of one method at one geometry.

    ``variances`` is ordered like the method's observation vector
    (distances in m^2, angles in rad^2); clipped links carry +inf.
    """

    method: str
    variances: np.ndarray
    trial_count: int

    def __post_init__(self):
        object.__setattr__(self, "variances", np.asarray(self.variances, dtype=float))
        expected = OBSERVATION_DIMS.get(self.method)
        if expected is not None and self.variances.shape != (expected,):
            raise ValueError(
                f"{self.method} expects {expected} variances, got "
                f"{self.variances.shape}"
            )
        if np.any(self.variances[np.isfinite(self.variances)] < 0):
            raise ValueError("variances must be non-negative")


@dataclass(frozen=True)
class AoaEstimate:
    """Angle estimate from the quadrant receiver.  ``saturated`` is set
    when the imbalance fell outside the invertible range and the angle
    was clamped to the field-of-view edge."""

    theta: float
    saturated: bool


@dataclass(frozen=True)
class SimulationSetup:
    """Hardware, layout and timing shared by all front-end simulations."""

    layout: VehicleLayout = field(default_factory=VehicleLayout)
    rx: QrxConfig = field(default_factory=QrxConfig)
    tx1: TxConfig = field(default_factory=lambda: TxConfig(tone_frequency=1.0e6))
    tx2: TxConfig = field(default_factory=lambda: TxConfig(tone_frequency=0.9e6))
    sensor_noise: SensorNoise = field(default_factory=SensorNoise)
    sample_rate: float = 1.0e7
    estimation_rate: float = 200.0
    rtof_tone_frequency: float = 1.0e6
    processing_delay: float = 0.0
    noise_scale: float = 1.0
    noise_sampling: str = "projected"

    def __post_init__(self):
        if self.noise_sampling not in ("projected", "waveform"):
            raise ValueError("noise_sampling must be 'projected' or 'waveform'")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")

    @property
    def estimation_interval(self) -> float:
        return 1.0 / self.estimation_rate

    @property
    def samples_per_interval(self) -> int:
        return int(round(self.sample_rate / self.estimation_rate))


def default_setup(**overrides) -> SimulationSetup:
    return SimulationSetup(**overrides)


# ---------------------------------------------------------------------------
# Waveform-level front ends
# ---------------------------------------------------------------------------


def measure_pdoa(r1, r2, f_a: float, f_b: float, sample_rate: float = 1.0e7):
    """Per-tone range differences between the two receiver waveforms.

    For each tone the complex correlation of each waveform against the
    tone is formed and one is multiplied by the conjugate of the other;
    the product's phase is the propagation phase difference, unwrapped
    into (-pi, pi], giving an unambiguous range of +/- c/(2 f).  Returns
    (delta_d_a, delta_d_b) in meters, positive when the path to receiver
    1 is longer.  Accepts stacked waveforms in leading dimensions.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if r1.shape != r2.shape:
        raise DomainError("receiver waveforms must share length and rate")
    duration = r1.shape[-1] / sample_rate
    if abs(f_a - f_b) < 4.0 / duration:
        raise ToneCollision(
            f"tones {f_a:.3g} and {f_b:.3g} Hz are unresolvable over "
            f"{duration:.3g} s"
        )
    out = []
    for freq in (f_a, f_b):
        c1 = tone_correlation(r1, freq, sample_rate)
        c2 = tone_correlation(r2, freq, sample_rate)
        delta_d = _range_difference_from_correlations(c1, c2, freq)
        limit = SPEED_OF_LIGHT / (2.0 * freq)
        if np.any(np.abs(delta_d) > 0.9 * limit):
            warnings.warn(
                f"range difference near the +/-{limit:.1f} m ambiguity limit",
                AmbiguityWarning,
                stacklevel=2,
            )
        out.append(delta_d)
    return out[0], out[1]


def _range_difference_from_correlations(c1, c2, freq):
    """c * (tau_1 - tau_2) from the conjugate product of per-receiver
    tone correlations."""
    phase = np.angle(c1 * np.conj(c2))
    return -SPEED_OF_LIGHT * phase / (2.0 * np.pi * freq)


def measure_rtof(
    link: LinkGeometry,
    outbound: LinkBudget,
    inbound: LinkBudget,
    f_e: float,
    tau_up: float = 0.0,
    duration: float = 1.0 / 200.0,
    sample_rate: float = 1.0e7,
    seed: int = 0,
) -> float:
    """One roundtrip distance measurement over a link.

    Simulates the roundtrip as two cascaded one-way tone transmissions:
    the target unit detects the ego tone in its own noise, regenerates
    the tone at the measured phase and nominal power on its sample
    clock, and the ego unit detects the return in its noise.  The
    roundtrip phase estimate maps to distance through
    ``d = c * (phi / (4 pi f_e) - tau_up)``.  Phases come from full
    interval correlations with all timing on the common 10 MHz clock
    grid.  Raises ``NoSignal`` when either leg is clipped.
    """
    if f_e > 1.0e6:
        raise DomainError("roundtrip tone must stay within the 1 MHz LED bandwidth")
    if outbound.gain_h == 0.0 or inbound.gain_h == 0.0:
        raise NoSignal("roundtrip link clipped (zero gain on one leg)")
    rng = np.random.default_rng(seed)
    tau = link.delay_tau
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate

    sigma_out = math.sqrt(outbound.noise_variance)
    target_rx = outbound.gain_h * np.sin(
        2.0 * np.pi * f_e * (t - tau)
    ) + sigma_out * rng.standard_normal(n)
    psi_1 = tone_phase(tone_correlation(target_rx, f_e, sample_rate))

    sigma_in = math.sqrt(inbound.noise_variance)
    ego_rx = inbound.gain_h * np.sin(
        2.0 * np.pi * f_e * (t - tau) - psi_1
    ) + sigma_in * rng.standard_normal(n)
    phi = tone_phase(tone_correlation(ego_rx, f_e, sample_rate))

    return SPEED_OF_LIGHT * (phi / (4.0 * np.pi * f_e) - tau_up)


def qrx_spot_fractions(aoa_theta, rx: QrxConfig) -> np.ndarray:
    """Power fractions of the four quadrant cells at an incidence angle.

    The lens focuses the transmitter into a uniform circular spot of
    radius ``rx.spot_radius`` whose center is displaced by
    ``rx.lens_focal_f * tan(theta)`` along the horizontal cell axis.
    Cells are ordered (right-top, left-top, left-bottom, right-bottom);
    the four overlap areas are normalized to sum to one.  ``theta`` is
    measured from the receiver normal.  Raises ``OutOfFov`` beyond the
    field of view.
    """
    theta = np.asarray(aoa_theta, dtype=float)
    if np.any(np.abs(theta) > rx.fov_half_angle + 1e-12):
        raise OutOfFov("incidence angle beyond the receiver field of view")
    w = np.clip(rx.lens_focal_f * np.tan(theta) / rx.spot_radius, -1.0, 1.0)
    right = 1.0 - (np.arccos(w) - w * np.sqrt(1.0 - w * w)) / np.pi
    left = 1.0 - right
    fractions = np.stack(
        [right / 2.0, left / 2.0, left / 2.0, right / 2.0], axis=-1
    )
    return fractions


def qrx_imbalance(aoa_theta, rx: QrxConfig):
    """Horizontal power imbalance (right minus left over total) of the
    spot model; strictly increasing on the linear range of the lens."""
    f = qrx_spot_fractions(aoa_theta, rx)
    return f[..., 0] + f[..., 3] - f[..., 1] - f[..., 2]


@functools.lru_cache(maxsize=8)
def _qrx_lut(rx: QrxConfig):
    """Monotone lookup table inverting the imbalance over the invertible
    core of the field of view (1024 knots, linear interpolation)."""
    lam = min(rx.linear_half_angle, rx.fov_half_angle)
    theta = np.linspace(-lam, lam, 1024)
    imb = qrx_imbalance(theta, rx)
    return imb, theta


def qrx_aoa(cell_currents, rx: QrxConfig) -> AoaEstimate:
    """Invert four cell amplitudes into the angle of arrival.

    Computes the normalized horizontal imbalance and inverts the
    monotone angle-to-imbalance map through the precomputed lookup
    table.  An imbalance outside the table range clamps to the
    field-of-view edge with ``saturated`` set.
    """
    currents = np.asarray(cell_currents, dtype=float)
    if currents.shape[-1] != 4:
        raise DomainError("quadrant receiver has four cells")
    total = currents.sum(axis=-1)
    if np.any(total <= 0):
        raise DomainError("total cell current must be positive")
    imb = (currents[..., 0] + currents[..., 3] - currents[..., 1] - currents[..., 2]) / total
    theta, saturated = _invert_imbalance(imb, rx)
    if np.ndim(imb) == 0:
        return AoaEstimate(float(theta), bool(saturated))
    return AoaEstimate(theta, saturated)


def _invert_imbalance(imb, rx: QrxConfig):
    knots_imb, knots_theta = _qrx_lut(rx)
    imb = np.asarray(imb, dtype=float)
    saturated = np.abs(imb) >= knots_imb[-1]
    theta = np.interp(imb, knots_imb, knots_theta)
    theta = np.where(saturated, np.sign(imb) * rx.fov_half_angle, theta)
    return theta, saturated


def _aoa_from_amplitudes(amplitudes, rx: QrxConfig):
    """Tolerant inversion for the trial sampler: an estimate buried in
    noise (vanishing or negative amplitude total) clamps to the field of
    view edge instead of raising."""
    amp = np.asarray(amplitudes, dtype=float)
    total = amp.sum(axis=-1)
    safe = np.where(np.abs(total) < 1e-300, 1e-300, total)
    imb = (amp[..., 0] + amp[..., 3] - amp[..., 1] - amp[..., 2]) / safe
    theta, _ = _invert_imbalance(imb, rx)
    return theta


def measure_qrx_aoa(cell_waveforms, frequency: float, rx: QrxConfig,
                    sample_rate: float = 1.0e7):
    """Waveform-level quadrant AoA front end.

    Correlates each cell waveform against the tone, projects the four
    complex coefficients on their common phase to get amplitudes, and
    inverts the imbalance.  ``cell_waveforms`` has shape (..., 4, N).
    """
    cells = np.asarray(cell_waveforms, dtype=float)
    corr = tone_correlation(cells, frequency, sample_rate)
    amplitudes = _project_amplitudes(corr)
    return qrx_aoa(amplitudes, rx)


def _project_amplitudes(corr):
    """Coherent per-cell amplitudes: project each cell's correlation on
    the phase of the four-cell sum."""
    total = corr.sum(axis=-1, keepdims=True)
    unit = total / np.abs(total)
    return np.real(corr * np.conj(unit))


def ego_sensor_measurement(
    d_tt: float, d_rr: float, psi: float, noise: SensorNoise, seed: int = 0
):
    """Relative travel direction and distance from noisy sensor readings.

    Perturbs the two traveled distances and the relative heading with
    independent zero-mean Gaussians, then applies

        alpha = pi/2 - atan2(d_tt cos(psi) - d_rr, d_tt sin(psi))
        d_tr  = sqrt((d_tt cos(psi))^2 + (d_tt sin(psi) - d_rr)^2)

    Raises ``DegenerateMotion`` when the direction is undefined (both
    arctangent arguments vanish, e.g. identical parallel motion) or both
    perturbed distances fall below 1 mm.
    """
    if d_tt < 0 or d_rr < 0:
        raise DomainError("traveled distances must be non-negative")
    rng = np.random.default_rng(seed)
    d_tt_n = d_tt + noise.odometry_sigma * rng.standard_normal()
    d_rr_n = d_rr + noise.odometry_sigma * rng.standard_normal()
    psi_n = psi + noise.heading_sigma * rng.standard_normal()
    return _sensor_relations(d_tt_n, d_rr_n, psi_n)


def _sensor_relations(d_tt, d_rr, psi):
    num = d_tt * np.cos(psi) - d_rr
    den = d_tt * np.sin(psi)
    scale = max(abs(d_tt), abs(d_rr), 1e-6)
    if abs(num) < 1e-12 * scale and abs(den) < 1e-12 * scale:
        raise DegenerateMotion("relative displacement direction undefined")
    if abs(d_tt) < 1e-3 and abs(d_rr) < 1e-3:
        raise DegenerateMotion("both traveled distances below 1 mm")
    alpha = wrap_angle(np.pi / 2.0 - np.arctan2(num, den))
    d_tr = np.hypot(d_tt * np.cos(psi), d_tt * np.sin(psi) - d_rr)
    return float(alpha), float(d_tr)


# ---------------------------------------------------------------------------
# Per-frame radio picture
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrameRadio:
    """Geometry, gains and received powers of the four links at a frame.

    Indexing is [receiver i][transmitter j] with i, j in {0, 1}.
    ``gains`` are received tone amplitudes at the summed receiver,
    ``powers`` received optical powers, ``incidence`` angles from the
    receiver normal.
    """

    links: tuple
    gains: np.ndarray
    powers: np.ndarray
    incidence: np.ndarray

    def rx_total_power(self, i: int) -> float:
        return float(self.powers[i].sum())


def frame_radio(frame, setup: SimulationSetup) -> FrameRadio:
    """Evaluate all four TX-to-RX links of a scenario frame."""
    txs = tx_unit_poses(frame.ego, frame.target, setup.layout)
    rxs = rx_unit_poses(setup.layout)
    tx_cfgs = (setup.tx1, setup.tx2)
    links, gains, powers, incidence = [], [], [], []
    for rx_pose in rxs:
        row_links, row_g, row_p, row_i = [], [], [], []
        for j, tx_pose in enumerate(txs):
            geom = link_geometry(rx_pose, tx_pose)
            row_links.append(geom)
            row_g.append(channel_gain(geom, tx_cfgs[j], setup.rx))
            row_p.append(
                tx_cfgs[j].optical_power_peak * optical_gain(geom, tx_cfgs[j], setup.rx)
            )
            row_i.append(wrap_angle(geom.aoa_theta - math.pi / 2.0))
        links.append(tuple(row_links))
        gains.append(row_g)
        powers.append(row_p)
        incidence.append(row_i)
    return FrameRadio(
        links=tuple(links),
        gains=np.array(gains),
        powers=np.array(powers),
        incidence=np.array(incidence),
    )


# ---------------------------------------------------------------------------
# Vectorized trial machinery
# ---------------------------------------------------------------------------


def _assert_coherent_grid(freqs, n: int, fs: float):
    """The projected sampler and the closed-form signal correlations
    require whole tone cycles over the window, plus whole cycles at the
    tone sums and differences so the correlation statistics decouple."""
    checks = set()
    for f in freqs:
        checks.add(2.0 * f)
        for g in freqs:
            checks.add(abs(f - g))
            checks.add(f + g)
    for f in checks:
        cycles = f * n / fs
        if abs(cycles - round(cycles)) > 1e-6:
            raise DomainError(
                f"tone grid not coherent: {f:.6g} Hz spans {cycles} cycles "
                f"over the estimation window"
            )


@functools.lru_cache(maxsize=32)
def _tone_templates(freqs: tuple, n: int, fs: float):
    t = np.arange(n) / fs
    cos = np.stack([np.cos(2.0 * np.pi * f * t) for f in freqs], axis=1)
    sin = np.stack([np.sin(2.0 * np.pi * f * t) for f in freqs], axis=1)
    return cos, sin


def _noise_correlations(rng, sigma, trials, n, freqs, fs, waveform_mode):
    """Complex correlation coefficients of fresh receiver noise against
    each tone, shape (trials, len(freqs)).

    In waveform mode white Gaussian samples are generated and correlated
    explicitly; in projected mode the coefficients are drawn from their
    exact circular Gaussian law (per-component variance 2 sigma^2 / n),
    which coincides with the waveform statistics on a coherent grid.
    """
    if sigma == 0.0:
        return np.zeros((trials, len(freqs)), dtype=complex)
    if not waveform_mode:
        std = sigma * math.sqrt(2.0 / n)
        z = rng.standard_normal((trials, len(freqs), 2))
        return std * (z[..., 0] + 1j * z[..., 1])
    cos, sin = _tone_templates(tuple(freqs), n, fs)
    out = np.empty((trials, len(freqs)), dtype=complex)
    done = 0
    while done < trials:
        count = min(_CHUNK, trials - done)
        w = rng.standard_normal((count, n))
        out[done : done + count] = (2.0 / n) * (w @ cos - 1j * (w @ sin))
        done += count
        del w
    return out * sigma


def _signal_correlation(amplitude, psi):
    """Correlation coefficient of ``amplitude * sin(2 pi f t - psi)``
    over a whole number of cycles: amplitude * (-i) * exp(-i psi)."""
    return amplitude * (-1j) * np.exp(-1j * np.asarray(psi))


def _trial_rng(seed: int, method: str, stream: int):
    return np.random.default_rng([seed, _METHOD_SEED_TAG[method], stream])


def _sample_variance(samples: np.ndarray) -> float:
    return float(np.var(samples, ddof=1))


# ---------------------------------------------------------------------------
# Per-method trial runs
# ---------------------------------------------------------------------------


def _pdoa_trials(radio, setup, condition, trials, seed):
    """Range-difference samples, shape (trials, 2)."""
    fs = setup.sample_rate
    n = setup.samples_per_interval
    freqs = (setup.tx1.tone_frequency, setup.tx2.tone_frequency)
    _assert_coherent_grid(freqs, n, fs)
    waveform = setup.noise_sampling == "waveform"
    corr = np.empty((2, trials, 2), dtype=complex)  # [rx, trial, tone]
    for i in range(2):
        sigma = setup.noise_scale * math.sqrt(
            noise_variance(setup.rx, condition, radio.rx_total_power(i))
        )
        rng = _trial_rng(seed, "pdoa", i)
        z = _noise_correlations(rng, sigma, trials, n, freqs, fs, waveform)
        for j in range(2):
            psi = 2.0 * np.pi * freqs[j] * radio.links[i][j].delay_tau
            corr[i, :, j] = _signal_correlation(radio.gains[i, j], psi) + z[:, j]
    out = np.empty((trials, 2))
    for j, freq in enumerate(freqs):
        out[:, j] = _range_difference_from_correlations(
            corr[0, :, j], corr[1, :, j], freq
        )
    return out


def _rtof_pair_trials(geom, g_out, g_in, sigma_out, sigma_in, setup, rng, trials):
    """Roundtrip distance samples for one unit pair, shape (trials,)."""
    fs = setup.sample_rate
    n = setup.samples_per_interval
    f_e = setup.rtof_tone_frequency
    _assert_coherent_grid((f_e,), n, fs)
    waveform = setup.noise_sampling == "waveform"
    omega_tau = 2.0 * np.pi * f_e * geom.delay_tau

    z1 = _noise_correlations(rng, sigma_out, trials, n, (f_e,), fs, waveform)[:, 0]
    c1 = _signal_correlation(g_out, omega_tau) + z1
    psi_1 = tone_phase(c1)

    z2 = _noise_correlations(rng, sigma_in, trials, n, (f_e,), fs, waveform)[:, 0]
    c2 = _signal_correlation(g_in, psi_1 + omega_tau) + z2
    phi = tone_phase(c2)
    return SPEED_OF_LIGHT * (phi / (4.0 * np.pi * f_e) - setup.processing_delay)


def _rtof_trials(radio, setup, condition, trials, seed):
    """Roundtrip samples for the four pairs in observation order
    (d11, d12, d21, d22); clipped pairs yield a column of NaN."""
    out = np.full((trials, 4), np.nan)
    tx_cfgs = (setup.tx1, setup.tx2)
    for i in range(2):
        for j in range(2):
            geom = radio.links[i][j]
            g_in = radio.gains[i, j]
            back = reverse_link(geom)
            rtof_tx = replace(tx_cfgs[j], tone_frequency=setup.rtof_tone_frequency)
            g_out = channel_gain(back, rtof_tx, setup.rx)
            p_out = rtof_tx.optical_power_peak * optical_gain(back, rtof_tx, setup.rx)
            if g_in == 0.0 or g_out == 0.0:
                continue
            sigma_out = setup.noise_scale * math.sqrt(
                noise_variance(setup.rx, condition, p_out)
            )
            sigma_in = setup.noise_scale * math.sqrt(
                noise_variance(setup.rx, condition, radio.powers[i, j])
            )
            rng = _trial_rng(seed, "rtof", 10 * i + j)
            out[:, _OBS_INDEX_RTOF[(i, j)]] = _rtof_pair_trials(
                geom, g_out, g_in, sigma_out, sigma_in, setup, rng, trials
            )
    return out


_OBS_INDEX_RTOF = {(0, 0): 0, (0, 1): 1, (1, 0): 2, (1, 1): 3}


def _qrx_cell_plan(radio, setup, condition, i):
    """Per-cell tone amplitudes and noise sigmas at receiver ``i``.

    Returns (amplitudes[4, 2], sigmas[4], usable[2]) where ``usable``
    flags transmitters whose link is unclipped and inside the linear
    range of the angle response.
    """
    rx = setup.rx
    amplitudes = np.zeros((4, 2))
    cell_power = np.zeros(4)
    usable = np.zeros(2, dtype=bool)
    for j in range(2):
        if radio.gains[i, j] == 0.0:
            continue
        eps = radio.incidence[i, j]
        if abs(eps) >= rx.linear_half_angle:
            # Light still arrives (it contributes shot noise) but the
            # angle response is saturated: no unbiased angle estimate.
            fractions = qrx_spot_fractions(eps, rx)
            cell_power += radio.powers[i, j] * fractions
            continue
        fractions = qrx_spot_fractions(eps, rx)
        amplitudes[:, j] = radio.gains[i, j] * fractions
        cell_power += radio.powers[i, j] * fractions
        usable[j] = True
    sigmas = setup.noise_scale * np.sqrt(
        [cell_noise_variance(rx, condition, p) for p in cell_power]
    )
    return amplitudes, sigmas, usable


def _aoa_receiver_trials(radio, setup, condition, i, trials, seed, stream_base,
                         method):
    """Angle-of-arrival samples (trials, 2) of both transmitters at
    receiver ``i``; unusable links give NaN columns."""
    fs = setup.sample_rate
    n = setup.samples_per_interval
    freqs = (setup.tx1.tone_frequency, setup.tx2.tone_frequency)
    _assert_coherent_grid(freqs, n, fs)
    waveform = setup.noise_sampling == "waveform"
    amplitudes, sigmas, usable = _qrx_cell_plan(radio, setup, condition, i)
    out = np.full((trials, 2), np.nan)
    if not usable.any():
        return out
    corr = np.empty((trials, 4, 2), dtype=complex)
    for k in range(4):
        rng = _trial_rng(seed, method, stream_base + k)
        z = _noise_correlations(rng, sigmas[k], trials, n, freqs, fs, waveform)
        for j in range(2):
            psi = 2.0 * np.pi * freqs[j] * radio.links[i][j].delay_tau
            corr[:, k, j] = _signal_correlation(amplitudes[k, j], psi) + z[:, j]
    for j in range(2):
        if not usable[j]:
            continue
        projected = _project_amplitudes(corr[:, :, j])
        theta_inc = _aoa_from_amplitudes(projected, setup.rx)
        out[:, j] = wrap_angle(theta_inc + math.pi / 2.0)
    return out


def _sensor_trials(frame, next_frame, setup, trials, seed):
    """Travel-direction and travel-distance samples, shape (trials, 2)."""
    d_tt = float(
        np.hypot(
            next_frame.target.x - frame.target.x,
            next_frame.target.y - frame.target.y,
        )
    )
    d_rr = float(
        np.hypot(next_frame.ego.x - frame.ego.x, next_frame.ego.y - frame.ego.y)
    )
    psi = wrap_angle(frame.target.heading - frame.ego.heading)
    noise = setup.sensor_noise
    rng = _trial_rng(seed, "aoa1", 100)
    d_tt_n = d_tt + noise.odometry_sigma * rng.standard_normal(trials)
    d_rr_n = d_rr + noise.odometry_sigma * rng.standard_normal(trials)
    psi_n = psi + noise.heading_sigma * rng.standard_normal(trials)
    num = d_tt_n * np.cos(psi_n) - d_rr_n
    den = d_tt_n * np.sin(psi_n)
    alpha = wrap_angle(np.pi / 2.0 - np.arctan2(num, den))
    d_tr = np.hypot(d_tt_n * np.cos(psi_n), d_tt_n * np.sin(psi_n) - d_rr_n)
    return np.stack([alpha, d_tr], axis=1)


# ---------------------------------------------------------------------------
# Variance sampling
# ---------------------------------------------------------------------------


def method_trials(
    method: str,
    frame,
    condition: ChannelCondition,
    trials: int,
    seed: int,
    setup: SimulationSetup = None,
    next_frame=None,
) -> np.ndarray:
    """Raw front-end output samples, shape (trials, n_observations).

    Columns follow the method's observation order; clipped or saturated
    observations are NaN columns.  Deterministic given the seed: each
    noise stream derives from (seed, method, stream index) and trials
    are generated in fixed-size chunks.
    """
    setup = setup or default_setup()
    if method not in METHODS:
        raise DomainError(f"unknown method '{method}'")
    if trials < 2:
        raise DomainError("need at least two trials to estimate a variance")
    radio = frame_radio(frame, setup)
    if method == "pdoa":
        samples = _pdoa_trials(radio, setup, condition, trials, seed)
        # each range difference needs the tone at both receivers
        for j in range(2):
            if radio.gains[0, j] == 0.0 or radio.gains[1, j] == 0.0:
                samples[:, j] = np.nan
        return samples
    if method == "rtof":
        return _rtof_trials(radio, setup, condition, trials, seed)
    if method == "aoa2":
        cols = []
        for i in range(2):
            cols.append(
                _aoa_receiver_trials(
                    radio, setup, condition, i, trials, seed, 10 * i, "aoa2"
                )
            )
        # observation order: theta_11, theta_12, theta_21, theta_22
        return np.concatenate(cols, axis=1)
    # aoa1: receiver 1 at both frames plus the sensor pair
    if next_frame is None:
        raise MethodInapplicable("AoA1 needs the successor frame of the pair")
    radio_next = frame_radio(next_frame, setup)
    now = _aoa_receiver_trials(radio, setup, condition, 0, trials, seed, 0, "aoa1")
    later = _aoa_receiver_trials(
        radio_next, setup, condition, 0, trials, seed, 10, "aoa1"
    )
    sensor = _sensor_trials(frame, next_frame, setup, trials, seed)
    return np.stack(
        [now[:, 0], later[:, 0], now[:, 1], later[:, 1], sensor[:, 0], sensor[:, 1]],
        axis=1,
    )


def sample_parameter_variances(
    method: str,
    frame,
    condition: ChannelCondition,
    trials: int,
    seed: int,
    setup: SimulationSetup = None,
    next_frame=None,
) -> ParamVariances:
    """Unbiased sample variances of a method's measured parameters.

    Runs the method's front end ``trials`` times with independent noise
    at the frame's true geometry.  Observations whose link is clipped
    (or whose angle response is saturated) return +inf variance: they
    carry no information and are dropped from the Fisher sum downstream.
    """
    samples = method_trials(method, frame, condition, trials, seed, setup, next_frame)
    variances = np.empty(samples.shape[1])
    for k in range(samples.shape[1]):
        col = samples[:, k]
        variances[k] = math.inf if np.any(np.isnan(col)) else _sample_variance(col)
    return ParamVariances(method=method, variances=variances, trial_count=trials)
