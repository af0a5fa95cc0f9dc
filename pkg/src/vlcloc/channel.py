"""Line-of-sight vehicular VLC channel model.

Covers the geometric Lambertian channel gain, received optical power,
the shot plus thermal photocurrent noise of a p-i-n / transimpedance
front end, SNR bookkeeping, and sampled received-waveform synthesis for
Monte-Carlo simulation of measurement front ends.

Conventions:

* Transmitted waveforms are normalized to unit peak, so the configured
  peak optical power times the geometric gain gives the received optical
  signal power, and ``LinkBudget.gain_h`` is the received photocurrent
  amplitude for a unit-peak transmitted tone.
* The quadrant receiver (QRX) can be read two ways.  Ranging methods sum
  the four cell photocurrents at the input of a single transimpedance
  stage, so their noise is one front-end term evaluated at the total
  received power (``noise_variance``).  Angle methods digitize each cell
  through its own front end, so each cell carries a full thermal term
  plus shot noise from its own share of the light and a quarter of the
  background current (``cell_noise_variance``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import BOLTZMANN, ELECTRON_CHARGE
from .errors import AliasingError, DomainError
from .geometry import LinkGeometry, wrap_angle

#: Half angle of the linear (invertible) region of the QRX angle response.
#: The reference quadrant receiver saturates well inside its total field
#: of view; beyond this angle the spot sits entirely on one cell pair.
QRX_LINEAR_HALF_ANGLE = math.radians(50.0)


@dataclass(frozen=True)
class TxConfig:
    """Transmitter lamp parameters.

    ``optical_power_peak`` is the peak emitted optical power in watts for
    the unit-peak drive waveform.  ``lambertian_order_m`` shapes the beam
    (11 corresponds to a 20 degree half-power angle).
    """

    optical_power_peak: float = 1.0
    lambertian_order_m: int = 11
    tone_frequency: float = 1.0e6

    def __post_init__(self):
        if self.optical_power_peak <= 0:
            raise ValueError("optical_power_peak must be positive")
        if self.lambertian_order_m < 1:
            raise ValueError("lambertian_order_m must be >= 1")


@dataclass(frozen=True)
class QrxConfig:
    """Quadrant receiver hardware parameters.

    Defaults follow a 4-cell quadrant photodiode with 50 mm^2 total
    active area behind a transimpedance front end (10 MHz bandwidth,
    56 pF input capacitance, open-loop gain 10, 30 mS transconductance)
    and a +/-80 degree total field of view.  The feedback resistance is
    derived, not stored; see ``feedback_resistance``.

    The imaging optic is modeled as a lens of focal length
    ``lens_focal_f`` painting a uniform circular spot of radius
    ``spot_radius`` on the quadrant plane, displaced by f*tan(angle)
    from the center.  The default spot radius makes the angle response
    linear (strictly monotone, invertible) out to +/-50 degrees and
    saturated beyond, while light keeps arriving out to the full field
    of view.
    """

    responsivity: float = 0.5
    total_active_area: float = 50e-6
    bandwidth_b: float = 1.0e7
    input_capacitance_ct: float = 56e-12
    open_loop_gain_g: float = 10.0
    transconductance_gm: float = 0.03
    gamma_factor: float = 1.5
    ib2: float = 0.562
    ib3: float = 0.0868
    fov_half_angle: float = math.radians(80.0)
    lens_focal_f: float = 3e-3
    spot_radius: float = None

    def __post_init__(self):
        if self.spot_radius is None:
            object.__setattr__(
                self,
                "spot_radius",
                self.lens_focal_f * math.tan(QRX_LINEAR_HALF_ANGLE),
            )
        for name in (
            "responsivity",
            "total_active_area",
            "bandwidth_b",
            "input_capacitance_ct",
            "open_loop_gain_g",
            "transconductance_gm",
            "lens_focal_f",
            "spot_radius",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def linear_half_angle(self) -> float:
        """Largest incidence angle the lens model can still invert."""
        return math.atan(self.spot_radius / self.lens_focal_f)


@dataclass(frozen=True)
class ChannelCondition:
    """Ambient light and temperature of the channel."""

    background_current_ibg: float
    temperature_t: float
    label: str

    def __post_init__(self):
        if self.background_current_ibg < 0 or self.temperature_t <= 0:
            raise ValueError("invalid channel condition")


LOW_NOISE = ChannelCondition(10e-6, 273.0, "LowNoise")
HIGH_NOISE = ChannelCondition(750e-6, 298.0, "HighNoise")


@dataclass(frozen=True)
class LinkBudget:
    """Signal and noise bookkeeping of one link at one receiver.

    ``gain_h`` is the received photocurrent amplitude per unit-peak
    transmitted waveform (amps); it is exactly zero when the link is
    outside the TX beam half space or the RX field of view.
    ``noise_variance`` never vanishes: the thermal floor persists at
    zero signal.
    """

    gain_h: float
    received_optical_power: float
    noise_variance: float
    snr: float


def lambertian_order(half_power_angle: float) -> int:
    """Beam-shape order of a Lambertian emitter with the given half-power
    angle: floor(-ln 2 / ln cos(angle)).  Requires 0 < angle < pi/2."""
    if not 0.0 < half_power_angle < math.pi / 2.0:
        raise DomainError("half-power angle must lie in (0, pi/2)")
    return int(math.floor(-math.log(2.0) / math.log(math.cos(half_power_angle))))


def feedback_resistance(g: float, b: float, ct: float) -> float:
    """Transimpedance feedback resistance R_F = G / (2 pi B C_T)."""
    if g <= 0 or b <= 0 or ct <= 0:
        raise DomainError("open-loop gain, bandwidth and capacitance must be positive")
    return g / (2.0 * math.pi * b * ct)


def optical_gain(link: LinkGeometry, tx: TxConfig, rx: QrxConfig,
                 area: float = None) -> float:
    """Fraction of emitted optical power collected by the receiver.

    Point-source Lambertian model:
        (m + 1) / (2 pi) * cos^m(phi) * A * cos(theta_inc) / d^2
    where ``phi`` is the irradiance angle at the TX and ``theta_inc``
    the incidence angle at the RX measured from its normal.  Links
    outside the TX beam half space (|phi| > pi/2) or outside the RX
    field of view return exactly zero.
    """
    if area is None:
        area = rx.total_active_area
    incidence = wrap_angle(link.aoa_theta - math.pi / 2.0)
    if link.irradiance_phi >= math.pi / 2.0 or abs(incidence) > rx.fov_half_angle:
        return 0.0
    m = tx.lambertian_order_m
    return (
        (m + 1.0)
        / (2.0 * math.pi)
        * math.cos(link.irradiance_phi) ** m
        * area
        * math.cos(incidence)
        / link.distance_d**2
    )


def channel_gain(link: LinkGeometry, tx: TxConfig, rx: QrxConfig,
                 area: float = None) -> float:
    """Received photocurrent amplitude (amps) for a unit-peak transmitted
    waveform: responsivity * peak optical power * optical gain."""
    return rx.responsivity * tx.optical_power_peak * optical_gain(link, tx, rx, area)


def _thermal_variance(rx: QrxConfig, temperature: float) -> float:
    rf = feedback_resistance(rx.open_loop_gain_g, rx.bandwidth_b, rx.input_capacitance_ct)
    b = rx.bandwidth_b
    return (
        4.0
        * BOLTZMANN
        * temperature
        * (
            (1.0 / rf) * rx.ib2 * b
            + ((2.0 * math.pi * rx.input_capacitance_ct) ** 2 / rx.transconductance_gm)
            * rx.gamma_factor
            * rx.ib3
            * b**3
        )
    )


def noise_variance(rx: QrxConfig, cond: ChannelCondition,
                   received_optical_power: float) -> float:
    """Photocurrent noise variance (A^2) of a single front end.

    Shot noise from the received signal and the background current plus
    the thermal noise of the transimpedance stage:

        sigma^2 = 2 q (gamma P_r) B + 2 q I_bg I_B2 B
                + 4 k T ( I_B2 B / R_F + (2 pi C_T)^2 Gamma I_B3 B^3 / g_m )
    """
    if received_optical_power < 0:
        raise DomainError("received optical power must be non-negative")
    b = rx.bandwidth_b
    shot = (
        2.0 * ELECTRON_CHARGE * rx.responsivity * received_optical_power * b
        + 2.0 * ELECTRON_CHARGE * cond.background_current_ibg * rx.ib2 * b
    )
    return shot + _thermal_variance(rx, cond.temperature_t)


def cell_noise_variance(rx: QrxConfig, cond: ChannelCondition,
                        cell_optical_power: float) -> float:
    """Noise variance (A^2) of one quadrant cell read through its own
    front end: shot noise from the cell's share of the light, a quarter
    of the background current, and a full thermal term."""
    if cell_optical_power < 0:
        raise DomainError("received optical power must be non-negative")
    b = rx.bandwidth_b
    shot = (
        2.0 * ELECTRON_CHARGE * rx.responsivity * cell_optical_power * b
        + 2.0 * ELECTRON_CHARGE * (cond.background_current_ibg / 4.0) * rx.ib2 * b
    )
    return shot + _thermal_variance(rx, cond.temperature_t)


def link_budget(link: LinkGeometry, tx: TxConfig, rx: QrxConfig,
                cond: ChannelCondition) -> LinkBudget:
    """Assemble the summed-receiver budget of one link: gain, received
    power, single-front-end noise variance, and tone SNR."""
    h_opt = optical_gain(link, tx, rx)
    p_r = tx.optical_power_peak * h_opt
    gain = rx.responsivity * p_r
    sigma2 = noise_variance(rx, cond, p_r)
    snr = gain**2 / (2.0 * sigma2) if sigma2 > 0 else math.inf
    return LinkBudget(gain_h=gain, received_optical_power=p_r,
                      noise_variance=sigma2, snr=snr)


def reverse_link(link: LinkGeometry) -> LinkGeometry:
    """Geometry of the same two endpoints seen from the other end.

    Swaps the roles of the endpoints: the new incidence angle equals the
    old irradiance angle and vice versa.  Distances and delays are
    unchanged.  Used for the outbound leg of roundtrip ranging, where
    the ego lamp transmits and the target unit receives.
    """
    new_aoa = wrap_angle(math.pi / 2.0 + link.irradiance_phi)
    new_irradiance = abs(wrap_angle(link.aoa_theta - math.pi / 2.0))
    return LinkGeometry(
        distance_d=link.distance_d,
        delay_tau=link.delay_tau,
        aoa_theta=new_aoa,
        irradiance_phi=new_irradiance,
    )


def sample_times(duration: float, sample_rate: float) -> np.ndarray:
    """Uniform sample instants covering ``duration`` at ``sample_rate``."""
    n = int(round(duration * sample_rate))
    if n < 1:
        raise DomainError("duration too short for the sample rate")
    return np.arange(n) / sample_rate


def synthesize_rx(
    tones: list[tuple[float, float, float, float]],
    noise_sigma: float,
    duration: float,
    sample_rate: float = 1.0e7,
    seed: int = 0,
) -> np.ndarray:
    """Sampled received photocurrent waveform.

    ``tones`` is a list of (frequency, amplitude, link gain, delay)
    tuples; each contributes ``amplitude * gain * sin(2 pi f (t - tau))``.
    White Gaussian noise with standard deviation ``noise_sigma`` is added
    from a generator seeded with ``seed``, so the waveform is bit
    reproducible for a fixed seed and parameter set.  Raises
    ``AliasingError`` if any tone violates the Nyquist limit.
    """
    t = sample_times(duration, sample_rate)
    r = np.zeros_like(t)
    for freq, amplitude, gain, delay in tones:
        if freq >= sample_rate / 2.0:
            raise AliasingError(
                f"tone at {freq:.3g} Hz needs sample rate > {2 * freq:.3g} Hz"
            )
        r += amplitude * gain * np.sin(2.0 * np.pi * freq * (t - delay))
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        r = r + noise_sigma * rng.standard_normal(t.shape)
    return r


def tone_correlation(waveform: np.ndarray, frequency: float,
                     sample_rate: float) -> np.ndarray:
    """Complex correlation coefficient of a waveform against a tone.

    Returns (2/N) * sum(r[n] * exp(-i 2 pi f n / fs)) so that a clean
    unit-amplitude sinusoid yields a coefficient of unit magnitude.
    Accepts stacked waveforms in the leading dimensions.
    """
    waveform = np.asarray(waveform, dtype=float)
    n = waveform.shape[-1]
    t = np.arange(n) / sample_rate
    phase = 2.0 * np.pi * frequency * t
    scale = 2.0 / n
    real = waveform @ np.cos(phase)
    imag = waveform @ np.sin(phase)
    return scale * (real - 1j * imag)


def tone_phase(correlation: np.ndarray) -> np.ndarray:
    """Phase offset of a sine tone from its correlation coefficient.

    For ``r = A sin(2 pi f t - psi)`` the correlation is
    ``A * (-i) * exp(-i psi)``, so ``psi = -angle(C) - pi/2`` wrapped to
    (-pi, pi].
    """
    return wrap_angle(-np.angle(correlation) - np.pi / 2.0)
