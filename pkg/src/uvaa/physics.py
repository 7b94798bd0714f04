"""Link physics of the UAV virtual antenna array.

Pure functions for the array factor, beam gain, stochastic channel gains,
SINR and achievable rate.  All angles are radians, distances metres, powers
Watts; gains are dimensionless (linear, not dB).

Spherical convention: elevation ``theta`` in [0, pi] measured from the +z
axis, azimuth ``phi`` in [-pi, pi] measured from +x toward +y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import CoincidentPointsError, DegenerateArrayError, ZeroDistanceError

# Element beam patterns take vectorized (theta, phi) arrays and return the
# per-element magnitude at each direction.
ElementPattern = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Direction:
    """A far-field direction (elevation, azimuth)."""

    theta: float
    phi: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.theta <= math.pi):
            raise ValueError(f"theta must be in [0, pi], got {self.theta}")
        if not (-math.pi <= self.phi <= math.pi):
            raise ValueError(f"phi must be in [-pi, pi], got {self.phi}")

    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array(
            [st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)]
        )


@dataclass
class SwarmLayout:
    """Positions and excitation current weights of the N swarm elements."""

    positions: np.ndarray  # (N, 3) metres
    weights: np.ndarray  # (N,) in [0, 1]

    def __post_init__(self) -> None:
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise ValueError("positions must have shape (N, 3)")
        n = self.positions.shape[0]
        if n < 1:
            raise ValueError("at least one element is required")
        if self.weights.shape != (n,):
            raise ValueError("weights must have shape (N,)")
        if not np.isfinite(self.positions).all():
            raise ValueError("positions must be finite")
        if not np.isfinite(self.weights).all():
            raise ValueError("weights must be finite")
        if (self.weights < 0.0).any() or (self.weights > 1.0).any():
            raise ValueError("weights must lie in [0, 1]")

    @property
    def n_elements(self) -> int:
        return self.positions.shape[0]

    def centroid(self) -> np.ndarray:
        return self.positions.mean(axis=0)


@dataclass(frozen=True)
class ChannelParams:
    """Large/small-scale channel and radio parameters.

    ``k0`` is the path-loss constant at 1 m, ``alpha`` the path-loss
    exponent, ``rician_k`` the LoS-to-scatter power ratio used for both the
    swarm-to-user and BS-to-user links, ``bs_sidelobe_gain`` the (linear)
    sidelobe gain of the interfering BS toward the user.
    """

    k0: float = 9.894613929061524e-05  # free-space (wavelength / 4 pi)^2 at 2.4 GHz
    alpha: float = 2.0
    rician_k: float = 10.0
    noise_power: float = 3.1622776601683794e-13  # -155 dBm/Hz over 1 MHz, Watts
    wavelength: float = 0.125  # metres, 2.4 GHz carrier
    antenna_efficiency: float = 1.0
    bs_sidelobe_gain: float = 0.1
    tx_power_per_uav: float = 0.1
    bs_tx_power: float = 10.0

    def __post_init__(self) -> None:
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.noise_power <= 0.0:
            raise ValueError("noise_power must be positive")
        if not (0.0 <= self.antenna_efficiency <= 1.0):
            raise ValueError("antenna_efficiency must be in [0, 1]")
        if self.wavelength <= 0.0:
            raise ValueError("wavelength must be positive")
        if self.rician_k < 0.0:
            raise ValueError("rician_k must be non-negative")
        if self.bs_sidelobe_gain <= 0.0:
            raise ValueError("bs_sidelobe_gain must be positive")
        if self.tx_power_per_uav <= 0.0:
            raise ValueError("tx_power_per_uav must be positive")
        if self.bs_tx_power < 0.0:
            raise ValueError("bs_tx_power must be non-negative")

    @property
    def phase_constant(self) -> float:
        return 2.0 * math.pi / self.wavelength


def free_space_k0(wavelength: float) -> float:
    """Path-loss constant (wavelength / 4 pi)^2 of the free-space model."""
    return (wavelength / (4.0 * math.pi)) ** 2


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts for the spherical quadrature of the beam-power integral."""

    n_theta: int = 64
    n_phi: int = 128

    def __post_init__(self) -> None:
        if self.n_theta < 8 or self.n_phi < 8:
            raise ValueError("quadrature needs at least 8 nodes per axis")


@lru_cache(maxsize=8)
def _sphere_nodes(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes/weights on the unit sphere.

    Gauss-Legendre in cos(theta) absorbs the sin(theta) area element
    exactly; the periodic azimuth uses the uniform trapezoid rule.
    Returns unit vectors (n_theta*n_phi, 3) and weights summing to 4 pi.
    """
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    cos_t = x
    sin_t = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    w_phi = 2.0 * math.pi / n_phi
    st = np.repeat(sin_t, n_phi)
    ct = np.repeat(cos_t, n_phi)
    cp = np.tile(np.cos(phi), n_theta)
    sp = np.tile(np.sin(phi), n_theta)
    units = np.stack([st * cp, st * sp, ct], axis=1)
    weights = np.repeat(wx, n_phi) * w_phi
    return units, weights


def element_pattern(direction: Direction) -> float:
    """Per-element far-field magnitude; the default element is isotropic."""
    return 1.0


def array_factor(layout: SwarmLayout, direction: Direction, wavelength: float) -> complex:
    """Complex spatial response of the swarm toward ``direction``.

    Sum over elements of I_i * exp(j * k * r_i . u(theta, phi)) with
    k = 2 pi / wavelength.
    """
    if wavelength <= 0.0:
        raise ValueError("wavelength must be positive")
    k = 2.0 * math.pi / wavelength
    phase = k * (layout.positions @ direction.unit_vector())
    return complex(np.sum(layout.weights * np.exp(1j * phase)))


def _radiated_power_integral_exact(layout: SwarmLayout, k: float) -> float:
    """Closed form of the full-sphere integral of |AF|^2 sin(theta).

    For isotropic elements the spherical integral of each interference term
    exp(j k d . u) is 4 pi sinc(k |d|), so the whole integral reduces to
    4 pi * sum_ij I_i I_j sinc(k |r_i - r_j|).
    """
    diff = layout.positions[:, None, :] - layout.positions[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    # np.sinc(x) is sin(pi x)/(pi x); rescale to sin(y)/y.
    kernel = np.sinc(k * dist / math.pi)
    w = layout.weights
    return 4.0 * math.pi * float(w @ kernel @ w)


def _radiated_power_integral_quadrature(
    layout: SwarmLayout,
    k: float,
    quad: QuadratureSpec,
    pattern: ElementPattern | None,
) -> float:
    units, weights = _sphere_nodes(quad.n_theta, quad.n_phi)
    phase = k * (layout.positions @ units.T)  # (N, nodes)
    af = layout.weights @ np.exp(1j * phase)  # (nodes,)
    power = np.abs(af) ** 2
    if pattern is not None:
        theta = np.arccos(np.clip(units[:, 2], -1.0, 1.0))
        phi = np.arctan2(units[:, 1], units[:, 0])
        power = power * pattern(theta, phi) ** 2
    return float(np.sum(weights * power))


def array_gain(
    layout: SwarmLayout,
    target: Direction,
    params: ChannelParams,
    quad: QuadratureSpec | None = None,
    pattern: ElementPattern | None = None,
) -> float:
    """Beam gain of the swarm toward ``target``.

    4 pi |AF(target)|^2 w(target)^2 * efficiency divided by the full-sphere
    integral of |AF|^2 w^2 sin(theta).  With the default isotropic element
    the denominator is evaluated in closed form (exact for any aperture);
    a custom element pattern falls back to spherical quadrature.
    """
    if not np.any(layout.weights > 0.0):
        raise DegenerateArrayError("all excitation weights are zero")
    k = params.phase_constant
    af = array_factor(layout, target, params.wavelength)
    if pattern is None:
        numerator = 4.0 * math.pi * abs(af) ** 2
        denominator = _radiated_power_integral_exact(layout, k)
    else:
        theta = np.asarray([target.theta])
        phi = np.asarray([target.phi])
        w_t = float(pattern(theta, phi)[0])
        numerator = 4.0 * math.pi * abs(af) ** 2 * w_t**2
        denominator = _radiated_power_integral_quadrature(
            layout, k, quad or QuadratureSpec(), pattern
        )
    return numerator / denominator * params.antenna_efficiency


def array_gain_quadrature(
    layout: SwarmLayout,
    target: Direction,
    params: ChannelParams,
    quad: QuadratureSpec | None = None,
    pattern: ElementPattern | None = None,
) -> float:
    """Beam gain with the denominator always taken by spherical quadrature.

    Independent route used to cross-check the closed-form denominator; only
    trustworthy while the quadrature resolves the beam pattern (apertures up
    to a few tens of wavelengths at the default node counts).
    """
    if not np.any(layout.weights > 0.0):
        raise DegenerateArrayError("all excitation weights are zero")
    quad = quad or QuadratureSpec()
    k = params.phase_constant
    af = array_factor(layout, target, params.wavelength)
    if pattern is None:
        w_t = 1.0
    else:
        w_t = float(pattern(np.asarray([target.theta]), np.asarray([target.phi]))[0])
    numerator = 4.0 * math.pi * abs(af) ** 2 * w_t**2
    denominator = _radiated_power_integral_quadrature(layout, k, quad, pattern)
    return numerator / denominator * params.antenna_efficiency


def sample_rician(
    rician_k: float,
    mean: float,
    rng: np.random.Generator,
    size: int | tuple[int, ...] | None = None,
) -> float | np.ndarray:
    """Draw Rician fading power with the given mean.

    The amplitude is sqrt(K/(K+1)) plus circularly-symmetric complex
    Gaussian scatter of variance 1/(K+1); the returned power |c|^2 * mean
    has expectation ``mean`` and follows the standard Rician power law.
    """
    if rician_k < 0.0:
        raise ValueError("rician_k must be non-negative")
    if mean <= 0.0:
        raise ValueError("mean must be positive")
    los = math.sqrt(rician_k / (rician_k + 1.0))
    scale = math.sqrt(1.0 / (2.0 * (rician_k + 1.0)))
    re = rng.normal(loc=los, scale=scale, size=size)
    im = rng.normal(loc=0.0, scale=scale, size=size)
    power = (re * re + im * im) * mean
    if size is None:
        return float(power)
    return power


def channel_gain(distance: float, params: ChannelParams, fading: float) -> float:
    """Channel power gain k0 * d^-alpha * fading."""
    if distance == 0.0:
        raise ZeroDistanceError("channel gain undefined at zero distance")
    if distance < 0.0:
        raise ValueError("distance must be positive")
    if fading < 0.0:
        raise ValueError("fading power must be non-negative")
    return params.k0 * distance ** (-params.alpha) * fading


def sinr(
    p_u: float,
    g_uvaa: float,
    g_um: float,
    p_b: float,
    g_bm_ant: float,
    g_bm_ch: float,
    noise: float,
) -> float:
    """Signal-to-interference-plus-noise ratio at the user."""
    if noise <= 0.0:
        raise ValueError("noise power must be positive")
    if min(g_uvaa, g_um, g_bm_ant, g_bm_ch) < 0.0:
        raise ValueError("gains must be non-negative")
    return (p_u * g_uvaa * g_um) / (noise + p_b * g_bm_ant * g_bm_ch)


def achievable_rate(sinr_value: float) -> float:
    """Spectral efficiency log2(1 + SINR), bits/s/Hz."""
    if sinr_value < 0.0:
        raise ValueError("SINR must be non-negative")
    return math.log2(1.0 + sinr_value)


def direction_to(source: np.ndarray, target: np.ndarray) -> Direction:
    """Spherical angles of the vector from ``source`` to ``target``."""
    delta = np.asarray(target, dtype=np.float64) - np.asarray(source, dtype=np.float64)
    norm = float(np.linalg.norm(delta))
    if norm == 0.0:
        raise CoincidentPointsError("source and target coincide")
    theta = math.acos(min(1.0, max(-1.0, delta[2] / norm)))
    phi = math.atan2(delta[1], delta[0])
    return Direction(theta=theta, phi=phi)


def uvaa_transmit_power(weights: np.ndarray, tx_power_per_uav: float) -> float:
    """Total radiated power of the swarm: per-UAV power times sum of I_i^2."""
    w = np.asarray(weights, dtype=np.float64)
    return tx_power_per_uav * float(np.sum(w * w))
