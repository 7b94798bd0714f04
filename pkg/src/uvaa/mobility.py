"""Memory-based Gauss-Markov random mobility of the ground user.

Speed and heading are AR(1) processes with memory ``alpha``: at alpha = 1
the user moves in a straight line, at alpha = 0 each step is a fresh
Gaussian draw around the mean.  Walls reflect the position specularly and
mirror the heading; the heading is kept unwrapped internally and reduced
mod 2 pi only on observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class AreaBounds:
    """Axis-aligned rectangle the user is confined to."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("area bounds must satisfy min < max on both axes")

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))


@dataclass(frozen=True)
class GaussMarkovState:
    """State of the user mobility process."""

    speed: float  # m/s, >= 0
    heading: float  # rad, unwrapped
    memory: float  # alpha in [0, 1]
    mean_speed: float
    mean_heading: float
    sigma_speed: float  # asymptotic std-dev of the speed process
    sigma_heading: float  # asymptotic std-dev of the heading process
    position: tuple[float, float]
    area: AreaBounds

    def __post_init__(self) -> None:
        if not (0.0 <= self.memory <= 1.0):
            raise ValueError("memory must be in [0, 1]")
        if self.speed < 0.0:
            raise ValueError("speed must be non-negative")
        if self.sigma_speed < 0.0 or self.sigma_heading < 0.0:
            raise ValueError("sigma must be non-negative")
        if not self.area.contains(*self.position):
            raise ValueError("position must lie inside the area")

    @property
    def heading_wrapped(self) -> float:
        return self.heading % (2.0 * math.pi)


def gm_step(state: GaussMarkovState, rng: np.random.Generator) -> tuple[float, float]:
    """Advance the AR(1) speed and heading one step.

    v' = a*v + (1-a)*mu + sqrt(1-a^2)*w with w ~ N(0, sigma^2); the speed is
    clamped at zero from below.  Draw order is fixed (speed then heading)
    for reproducibility.
    """
    a = state.memory
    noise_scale = math.sqrt(max(0.0, 1.0 - a * a))
    w_v = rng.normal(0.0, state.sigma_speed) if state.sigma_speed > 0.0 else 0.0
    w_t = rng.normal(0.0, state.sigma_heading) if state.sigma_heading > 0.0 else 0.0
    speed = a * state.speed + (1.0 - a) * state.mean_speed + noise_scale * w_v
    heading = a * state.heading + (1.0 - a) * state.mean_heading + noise_scale * w_t
    return max(0.0, speed), heading


def _reflect(value: float, lo: float, hi: float) -> tuple[float, int]:
    """Fold ``value`` into [lo, hi] by specular reflection; count flips."""
    flips = 0
    span = hi - lo
    for _ in range(1000):
        if value < lo:
            value = 2.0 * lo - value
            flips += 1
        elif value > hi:
            value = 2.0 * hi - value
            flips += 1
        else:
            return value, flips
        if value < lo - 10.0 * span or value > hi + 10.0 * span:
            break
    # Pathological step length; land on the nearest wall.
    return min(max(value, lo), hi), flips


def user_step(
    state: GaussMarkovState, dt: float, rng: np.random.Generator
) -> GaussMarkovState:
    """Advance speed/heading, move the position, reflect at the walls."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    speed, heading = gm_step(state, rng)
    x = state.position[0] + speed * dt * math.cos(heading)
    y = state.position[1] + speed * dt * math.sin(heading)
    x, flips_x = _reflect(x, state.area.x_min, state.area.x_max)
    y, flips_y = _reflect(y, state.area.y_min, state.area.y_max)
    if flips_x % 2 == 1:
        heading = math.pi - heading
    if flips_y % 2 == 1:
        heading = -heading
    return replace(state, speed=speed, heading=heading, position=(x, y))
