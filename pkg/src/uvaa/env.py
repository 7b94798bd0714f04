"""Multi-objective decision process for the swarm beamforming problem.

State: UAV positions plus the ground-user position.  Action: per UAV an
excitation weight, a heading, a horizontal and a signed vertical distance
(4N components, packed per UAV as [I, psi, d_h, d_v]).  Reward: a 2-vector
(rate reward, negated scaled energy); slots in which any UAV would leave
the box or collide are penalized and the offending movements cancelled, so
state feasibility is never lost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dynamics, mobility, physics
from .errors import EpisodeFinishedError, PlacementFailureError
from .rng import substream

RATE = 0
ENERGY = 1
N_OBJECTIVES = 2


@dataclass(frozen=True)
class MobilityConfig:
    """Parameters of the ground-user mobility process."""

    mean_speed: float = 1.0
    mean_heading: float = 0.0
    memory: float = 0.8
    sigma_speed: float = 0.3
    sigma_heading: float = 0.3
    area: mobility.AreaBounds = field(
        default_factory=lambda: mobility.AreaBounds(0.0, 100.0, 0.0, 100.0)
    )


@dataclass(frozen=True)
class EnvConfig:
    """Scenario geometry, constraint bounds and reward coefficients."""

    n_uav: int = 8
    horizon: int = 300
    slot_duration: float = 1.0
    l_min: float = 0.0
    l_max: float = 100.0
    h_min: float = 60.0
    h_max: float = 90.0
    d_h_max: float = 20.0
    d_v_max: float = 10.0
    d_min: float = 0.5
    bs_position: tuple[float, float] = (100.0, 100.0)
    eps1: float = 1e-3
    eps2: float = 0.5
    eps3: float = 2.0
    clamp_negative_energy: bool = False
    gain_method: str = "exact"  # "exact" | "quadrature"
    quadrature: physics.QuadratureSpec = field(default_factory=physics.QuadratureSpec)
    channel: physics.ChannelParams = field(default_factory=physics.ChannelParams)
    rotor: dynamics.RotorParams = field(default_factory=dynamics.RotorParams)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)

    def __post_init__(self) -> None:
        if self.n_uav < 1:
            raise ValueError("n_uav must be at least 1")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.slot_duration <= 0.0:
            raise ValueError("slot_duration must be positive")
        if not (self.l_min < self.l_max and self.h_min < self.h_max):
            raise ValueError("box bounds must satisfy min < max")
        if self.d_min <= 0.0:
            raise ValueError("d_min must be positive")
        if min(self.eps1, self.eps2, self.eps3) < 0.0:
            raise ValueError("penalty coefficients must be non-negative")
        if self.gain_method not in ("exact", "quadrature"):
            raise ValueError("gain_method must be 'exact' or 'quadrature'")

    @property
    def obs_dim(self) -> int:
        return 3 * self.n_uav + 3

    @property
    def action_dim(self) -> int:
        return 4 * self.n_uav


@dataclass(frozen=True)
class EnvState:
    """Positions, previous slot speeds, user process and slot counter."""

    positions: np.ndarray  # (N, 3)
    prev_speeds: np.ndarray  # (N,)
    user: mobility.GaussMarkovState
    slot_index: int


@dataclass(frozen=True)
class StepResult:
    state: EnvState
    reward: np.ndarray  # (2,): rate reward, energy reward (<= 0 for E >= 0)
    valid: bool
    rate: float  # raw achievable rate of the slot, bit/s/Hz
    energy: float  # raw summed flight energy of the slot, J
    frozen: np.ndarray  # (N,) bool, movements cancelled this slot


def action_bounds(config: EnvConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-component lower/upper bounds of the packed action vector."""
    lo_block = np.array([0.0, 0.0, 0.0, -config.d_v_max])
    hi_block = np.array([1.0, 2.0 * math.pi, config.d_h_max, config.d_v_max])
    return np.tile(lo_block, config.n_uav), np.tile(hi_block, config.n_uav)


def pack_action(
    weights: np.ndarray, psi: np.ndarray, d_h: np.ndarray, d_v: np.ndarray
) -> np.ndarray:
    return np.column_stack([weights, psi, d_h, d_v]).reshape(-1)


def unpack_action(action: np.ndarray, n_uav: int) -> tuple[np.ndarray, ...]:
    blocks = np.asarray(action, dtype=np.float64).reshape(n_uav, 4)
    return blocks[:, 0], blocks[:, 1], blocks[:, 2], blocks[:, 3]


def hover_action(config: EnvConfig) -> np.ndarray:
    """Full-weight, zero-movement action."""
    n = config.n_uav
    return pack_action(np.ones(n), np.zeros(n), np.zeros(n), np.zeros(n))


def reset(config: EnvConfig, seed: int) -> EnvState:
    """Draw an initial feasible state; fully determined by ``seed``.

    UAV positions are rejection-sampled uniformly in the box until all
    pairwise distances reach d_min; the user starts at the center of its
    area moving at the mean speed/heading.
    """
    rng = substream(seed, "env-reset")
    lo = np.array([config.l_min, config.l_min, config.h_min])
    hi = np.array([config.l_max, config.l_max, config.h_max])
    placed: list[np.ndarray] = []
    attempts = 0
    while len(placed) < config.n_uav:
        if attempts >= 10_000:
            raise PlacementFailureError(
                f"could not place {config.n_uav} UAVs with spacing {config.d_min} m"
            )
        candidate = rng.uniform(lo, hi)
        attempts += 1
        if all(np.linalg.norm(candidate - p) >= config.d_min for p in placed):
            placed.append(candidate)
    m = config.mobility
    user = mobility.GaussMarkovState(
        speed=m.mean_speed,
        heading=m.mean_heading,
        memory=m.memory,
        mean_speed=m.mean_speed,
        mean_heading=m.mean_heading,
        sigma_speed=m.sigma_speed,
        sigma_heading=m.sigma_heading,
        position=m.area.center(),
        area=m.area,
    )
    return EnvState(
        positions=np.stack(placed),
        prev_speeds=np.zeros(config.n_uav),
        user=user,
        slot_index=0,
    )


def observe(state: EnvState, config: EnvConfig) -> np.ndarray:
    """Normalized observation of length 3N+3.

    Per UAV (x/L_max, y/L_max, (z - H_min)/(H_max - H_min)), then
    (x_user/L_max, y_user/L_max, 0).
    """
    n = state.positions.shape[0]
    obs = np.empty(3 * n + 3)
    obs[0 : 3 * n : 3] = state.positions[:, 0] / config.l_max
    obs[1 : 3 * n : 3] = state.positions[:, 1] / config.l_max
    obs[2 : 3 * n : 3] = (state.positions[:, 2] - config.h_min) / (
        config.h_max - config.h_min
    )
    obs[3 * n] = state.user.position[0] / config.l_max
    obs[3 * n + 1] = state.user.position[1] / config.l_max
    obs[3 * n + 2] = 0.0
    return obs


def _validate_action(action: np.ndarray, config: EnvConfig) -> np.ndarray:
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (config.action_dim,):
        raise ValueError(
            f"action must have shape ({config.action_dim},), got {action.shape}"
        )
    lo, hi = action_bounds(config)
    tol = 1e-9
    if (action < lo - tol).any() or (action > hi + tol).any():
        raise ValueError("action outside the admissible bounds")
    return np.clip(action, lo, hi)


def _freeze_violators(
    positions: np.ndarray, tentative: np.ndarray, config: EnvConfig
) -> np.ndarray:
    """Boolean mask of UAVs whose movement must be cancelled this slot.

    Box violators freeze first; then the pairwise check is iterated on the
    effective (partially frozen) positions until stable so the post-step
    state is always feasible.
    """
    n = positions.shape[0]
    frozen = (
        (tentative[:, 0] < config.l_min)
        | (tentative[:, 0] > config.l_max)
        | (tentative[:, 1] < config.l_min)
        | (tentative[:, 1] > config.l_max)
        | (tentative[:, 2] < config.h_min)
        | (tentative[:, 2] > config.h_max)
    )
    while True:
        effective = np.where(frozen[:, None], positions, tentative)
        diff = effective[:, None, :] - effective[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        close = dist < config.d_min
        np.fill_diagonal(close, False)
        # Freezing both members of a violating pair can only help: the
        # previous positions were feasible by induction.
        new_frozen = frozen | close.any(axis=1)
        if (new_frozen == frozen).all():
            return frozen
        frozen = new_frozen


def step(
    config: EnvConfig, state: EnvState, action: np.ndarray, rng: np.random.Generator
) -> StepResult:
    """Advance the system one slot.

    Movement first (with freeze-on-violation), then the user walks, fading
    is redrawn, and the slot rate/energy and the 2-vector reward are
    computed from the post-move geometry.
    """
    if state.slot_index >= config.horizon:
        raise EpisodeFinishedError("episode horizon reached")
    action = _validate_action(action, config)
    weights, psi, d_h, d_v = unpack_action(action, config.n_uav)

    displacement = np.column_stack(
        [d_h * np.cos(psi), d_h * np.sin(psi), d_v]
    )
    tentative = state.positions + displacement
    frozen = _freeze_violators(state.positions, tentative, config)
    valid = not frozen.any()
    positions = np.where(frozen[:, None], state.positions, tentative)

    # Stochastic draws in fixed order: user walk, then UVAA and BS fading.
    user = mobility.user_step(state.user, config.slot_duration, rng)
    fading_um = physics.sample_rician(config.channel.rician_k, 1.0, rng)
    fading_bm = physics.sample_rician(config.channel.rician_k, 1.0, rng)

    layout = physics.SwarmLayout(positions=positions, weights=weights)
    user_point = np.array([user.position[0], user.position[1], 0.0])
    centroid = layout.centroid()
    target = physics.direction_to(centroid, user_point)
    if config.gain_method == "quadrature":
        gain = physics.array_gain_quadrature(
            layout, target, config.channel, config.quadrature
        )
    else:
        gain = physics.array_gain(layout, target, config.channel)
    d_um = float(np.linalg.norm(user_point - centroid))
    g_um = physics.channel_gain(d_um, config.channel, fading_um)
    bs_point = np.array([config.bs_position[0], config.bs_position[1], 0.0])
    d_bm = float(np.linalg.norm(user_point - bs_point))
    g_bm = physics.channel_gain(d_bm, config.channel, fading_bm)
    p_u = physics.uvaa_transmit_power(weights, config.channel.tx_power_per_uav)
    ratio = physics.sinr(
        p_u,
        gain,
        g_um,
        config.channel.bs_tx_power,
        config.channel.bs_sidelobe_gain,
        g_bm,
        config.channel.noise_power,
    )
    rate = physics.achievable_rate(ratio)

    dt = config.slot_duration
    effective_disp = np.where(frozen[:, None], 0.0, displacement)
    new_speeds = np.linalg.norm(effective_disp, axis=1) / dt
    energy = 0.0
    for i in range(config.n_uav):
        cmd = dynamics.MoveCommand(
            psi=float(psi[i]),
            d_h=0.0 if frozen[i] else float(d_h[i]),
            d_v=0.0 if frozen[i] else float(d_v[i]),
        )
        energy += dynamics.slot_energy(
            float(state.prev_speeds[i]),
            float(new_speeds[i]),
            cmd,
            dt,
            config.rotor,
            clamp_negative=config.clamp_negative_energy,
        )

    if valid:
        reward = np.array([rate, -config.eps1 * energy])
    else:
        reward = np.array([config.eps2 * rate, -config.eps1 * config.eps3 * energy])
    if not np.isfinite(reward).all():
        raise FloatingPointError("non-finite reward")

    new_state = EnvState(
        positions=positions,
        prev_speeds=new_speeds,
        user=user,
        slot_index=state.slot_index + 1,
    )
    return StepResult(
        state=new_state,
        reward=reward,
        valid=valid,
        rate=rate,
        energy=energy,
        frozen=frozen,
    )


class UvaaEnv:
    """Stateful episode wrapper over the functional core.

    Conforms to the small protocol the trainers expect: ``reset(seed)``
    returns an observation, ``step(action)`` returns
    (obs, reward, done, info) where info carries the raw slot rate/energy.
    """

    def __init__(self, config: EnvConfig):
        self.config = config
        self.obs_dim = config.obs_dim
        self.action_dim = config.action_dim
        self.action_low, self.action_high = action_bounds(config)
        self.horizon = config.horizon
        self._state: EnvState | None = None
        self._rng: np.random.Generator | None = None

    @property
    def state(self) -> EnvState:
        if self._state is None:
            raise RuntimeError("reset() must be called before accessing state")
        return self._state

    def reset(self, seed: int) -> np.ndarray:
        self._state = reset(self.config, seed)
        self._rng = substream(seed, "env-episode")
        return observe(self._state, self.config)

    def step(self, action: np.ndarray):
        if self._state is None or self._rng is None:
            raise RuntimeError("reset() must be called before step()")
        result = step(self.config, self._state, action, self._rng)
        self._state = result.state
        done = result.state.slot_index >= self.config.horizon
        info = {
            "rate": result.rate,
            "energy": result.energy,
            "valid": result.valid,
            "frozen": result.frozen,
        }
        return observe(result.state, self.config), result.reward, done, info


def trace_episode(
    config: EnvConfig,
    seed: int,
    action_fn: Callable[[EnvState, int], np.ndarray],
) -> list[dict]:
    """Run one scripted episode and return per-slot trace records."""
    env = UvaaEnv(config)
    env.reset(seed)
    records: list[dict] = []
    for t in range(config.horizon):
        state = env.state
        action = action_fn(state, t)
        _, reward, _, info = env.step(action)
        records.append(
            {
                "slot": t,
                "positions": [list(map(float, p)) for p in env.state.positions],
                "user": [float(env.state.user.position[0]), float(env.state.user.position[1])],
                "action": [float(a) for a in action],
                "reward": [float(reward[0]), float(reward[1])],
                "rate": float(info["rate"]),
                "energy": float(info["energy"]),
                "valid": bool(info["valid"]),
            }
        )
    return records
