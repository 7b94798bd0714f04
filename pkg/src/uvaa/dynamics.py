"""Rotary-wing UAV kinematics and per-slot flight energy accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RotorParams:
    """Rotary-wing power-model constants.

    Defaults follow the widely used reference parameter set for a small
    rotary-wing UAV; every value is config-overridable.
    """

    blade_power: float = 79.86  # hover blade-profile power, W
    induced_power: float = 88.63  # hover induced power, W
    tip_speed: float = 120.0  # rotor tip speed, m/s
    hover_induced_velocity: float = 4.03  # m/s
    fuselage_drag_ratio: float = 0.6
    air_density: float = 1.225  # kg/m^3
    rotor_solidity: float = 0.05
    rotor_disc_area: float = 0.503  # m^2
    uav_mass: float = 2.0  # kg
    gravity: float = 9.8  # m/s^2

    def __post_init__(self) -> None:
        for name, value in self.__dict__.items():
            if value <= 0.0:
                raise ValueError(f"{name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class MoveCommand:
    """One slot of movement: heading, horizontal and signed vertical distance."""

    psi: float  # horizontal heading, rad in [0, 2 pi]
    d_h: float  # horizontal distance, m >= 0
    d_v: float  # signed vertical distance, m

    def __post_init__(self) -> None:
        if not (0.0 <= self.psi <= 2.0 * math.pi):
            raise ValueError(f"psi must be in [0, 2 pi], got {self.psi}")
        if self.d_h < 0.0:
            raise ValueError(f"d_h must be non-negative, got {self.d_h}")


def step_position(pos: np.ndarray, cmd: MoveCommand) -> np.ndarray:
    """Apply one movement command to a 3D position."""
    pos = np.asarray(pos, dtype=np.float64)
    return pos + np.array(
        [cmd.d_h * math.cos(cmd.psi), cmd.d_h * math.sin(cmd.psi), cmd.d_v]
    )


def propulsion_power(v: float, rotor: RotorParams) -> float:
    """Propulsion power of a rotary-wing UAV at forward speed ``v``."""
    if v < 0.0:
        raise ValueError("speed must be non-negative")
    blade = rotor.blade_power * (1.0 + 3.0 * v**2 / rotor.tip_speed**2)
    v0 = rotor.hover_induced_velocity
    induced = rotor.induced_power * math.sqrt(
        math.sqrt(1.0 + v**4 / (4.0 * v0**4)) - v**2 / (2.0 * v0**2)
    )
    parasite = (
        0.5
        * rotor.fuselage_drag_ratio
        * rotor.air_density
        * rotor.rotor_solidity
        * rotor.rotor_disc_area
        * v**3
    )
    return blade + induced + parasite


def command_speed(cmd: MoveCommand, dt: float) -> float:
    """3D speed implied by executing ``cmd`` within one slot of length ``dt``."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return math.hypot(cmd.d_h, cmd.d_v) / dt


def slot_energy(
    v_prev: float,
    v_new: float,
    cmd: MoveCommand,
    dt: float,
    rotor: RotorParams,
    clamp_negative: bool = False,
) -> float:
    """Flight energy of one slot, Joules.

    Propulsion at the (piecewise-constant) slot speed plus the kinetic
    change and the potential term m*g*d_v.  ``v_new`` must equal
    ``command_speed(cmd, dt)``; steep descents may yield negative energy
    (recovery) unless ``clamp_negative`` is set.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    kinetic = 0.5 * rotor.uav_mass * (v_new**2 - v_prev**2)
    potential = rotor.uav_mass * rotor.gravity * cmd.d_v
    energy = propulsion_power(v_new, rotor) * dt + kinetic + potential
    if clamp_negative:
        return max(0.0, energy)
    return energy


def hover_energy(dt: float, rotor: RotorParams) -> float:
    """Energy of one stationary slot: (blade + induced hover power) * dt."""
    return (rotor.blade_power + rotor.induced_power) * dt
