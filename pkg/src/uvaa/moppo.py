"""Recurrent multi-objective PPO: rollouts, vector GAE, scalarized updates.

Each learning task is a (weight vector, policy, vector critic, optimizer
states) tuple.  Rewards and values are 2-vectors; advantages are estimated
per objective, scalarized with the task's weight vector, then normalized
per batch before the clipped surrogate update.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteGradientError, NonFiniteLossError
from .neural.adam import AdamState, adam_update, init_adam
from .neural.nets import PolicyNetwork, ValueNetwork
from .neural.sampling import log_prob_of_raw, sample_action
from .rng import draw_seed


@dataclass(frozen=True)
class PpoConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    epochs: int = 10
    episodes_per_iteration: int = 4
    learning_rate: float = 1e-4
    bptt_chunk: int | None = None

    def __post_init__(self) -> None:
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must be in [0, 1)")
        if not (0.0 <= self.gae_lambda <= 1.0):
            raise ValueError("gae_lambda must be in [0, 1]")
        if self.clip_epsilon <= 0.0:
            raise ValueError("clip_epsilon must be positive")
        if self.epochs < 1 or self.episodes_per_iteration < 1:
            raise ValueError("epochs and episodes_per_iteration must be >= 1")


@dataclass
class Task:
    """One learning task: preference weights plus its own networks."""

    weight_vector: np.ndarray  # (M,), non-negative, sums to 1
    policy: PolicyNetwork
    value: ValueNetwork
    policy_opt: AdamState
    value_opt: AdamState
    rng: np.random.Generator
    task_id: str = "task"

    def __post_init__(self) -> None:
        w = np.asarray(self.weight_vector, dtype=np.float64)
        if (w < 0.0).any() or abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError("weight vector must be non-negative and sum to 1")
        self.weight_vector = w

    def to_arrays(self) -> dict[str, np.ndarray]:
        """Serializable snapshot of the networks and the weight vector."""
        out: dict[str, np.ndarray] = {}
        for k, v in self.policy.params().items():
            out[f"policy/{k}"] = v.copy()
        for k, v in self.value.params().items():
            out[f"value/{k}"] = v.copy()
        out["meta/weight_vector"] = self.weight_vector.copy()
        return out


def new_task(
    rng: np.random.Generator,
    weight_vector: np.ndarray,
    obs_dim: int,
    action_dim: int,
    n_objectives: int = 2,
    lstm_hidden: int = 128,
    fc_layers: tuple[int, ...] = (256, 256, 256),
    recurrent: bool = True,
    initial_log_std: float = -0.5,
    learning_rate: float = 1e-4,
    task_id: str = "task",
) -> Task:
    policy = PolicyNetwork.create(
        rng,
        obs_dim,
        action_dim,
        lstm_hidden=lstm_hidden,
        fc_layers=fc_layers,
        recurrent=recurrent,
        initial_log_std=initial_log_std,
    )
    value = ValueNetwork.create(
        rng,
        obs_dim,
        n_objectives=n_objectives,
        lstm_hidden=lstm_hidden,
        fc_layers=fc_layers,
        recurrent=recurrent,
    )
    return Task(
        weight_vector=np.asarray(weight_vector, dtype=np.float64),
        policy=policy,
        value=value,
        policy_opt=init_adam(policy.params(), learning_rate),
        value_opt=init_adam(value.params(), learning_rate),
        rng=rng,
        task_id=task_id,
    )


def task_from_arrays(
    arrays: dict[str, np.ndarray],
    rng: np.random.Generator,
    obs_dim: int,
    action_dim: int,
    n_objectives: int = 2,
    lstm_hidden: int = 128,
    fc_layers: tuple[int, ...] = (256, 256, 256),
    recurrent: bool = True,
    learning_rate: float = 1e-4,
    weight_vector: np.ndarray | None = None,
    task_id: str = "task",
) -> Task:
    """Rebuild a task from a snapshot; optimizer state starts fresh."""
    if weight_vector is None:
        weight_vector = arrays["meta/weight_vector"]
    task = new_task(
        rng,
        weight_vector,
        obs_dim,
        action_dim,
        n_objectives=n_objectives,
        lstm_hidden=lstm_hidden,
        fc_layers=fc_layers,
        recurrent=recurrent,
        learning_rate=learning_rate,
        task_id=task_id,
    )
    task.policy.load_params(
        {k[len("policy/") :]: v for k, v in arrays.items() if k.startswith("policy/")}
    )
    task.value.load_params(
        {k[len("value/") :]: v for k, v in arrays.items() if k.startswith("value/")}
    )
    return task


@dataclass
class RolloutBatch:
    """On-policy experience: (episodes, T, ...) arrays, aligned lengths."""

    obs: np.ndarray  # (E, T, D)
    raw_actions: np.ndarray  # (E, T, A) pre-squash Gaussian draws
    actions: np.ndarray  # (E, T, A) bounded actions executed
    log_probs: np.ndarray  # (E, T) behavior log-probabilities
    rewards: np.ndarray  # (E, T, M)
    values: np.ndarray  # (E, T, M) behavior-critic values
    valid: np.ndarray  # (E, T) bool

    @property
    def n_episodes(self) -> int:
        return self.obs.shape[0]

    @property
    def horizon(self) -> int:
        return self.obs.shape[1]


def collect_rollouts(task: Task, environment, n_episodes: int) -> RolloutBatch:
    """Run full episodes with the current policy; record vector rewards/values.

    Episode seeds come from the task's own stream, so a task's experience
    is independent of any other task or of scheduling order.  Recurrent
    state is reset at every episode start.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    t_len = environment.horizon
    obs_dim = environment.obs_dim
    act_dim = task.policy.action_dim
    n_obj = task.value.n_objectives
    low, high = environment.action_low, environment.action_high
    batch = RolloutBatch(
        obs=np.empty((n_episodes, t_len, obs_dim)),
        raw_actions=np.empty((n_episodes, t_len, act_dim)),
        actions=np.empty((n_episodes, t_len, act_dim)),
        log_probs=np.empty((n_episodes, t_len)),
        rewards=np.empty((n_episodes, t_len, n_obj)),
        values=np.empty((n_episodes, t_len, n_obj)),
        valid=np.empty((n_episodes, t_len), dtype=bool),
    )
    std = task.policy.std()
    for e in range(n_episodes):
        obs = environment.reset(draw_seed(task.rng))
        p_state = task.policy.init_state(1)
        v_state = task.value.init_state(1)
        for t in range(t_len):
            mean, p_state = task.policy.step(obs[None, :], p_state)
            value, v_state = task.value.step(obs[None, :], v_state)
            action, raw, logp = sample_action(mean[0], std, low, high, task.rng)
            next_obs, reward, done, info = environment.step(action)
            batch.obs[e, t] = obs
            batch.raw_actions[e, t] = raw
            batch.actions[e, t] = action
            batch.log_probs[e, t] = logp
            batch.rewards[e, t] = reward
            batch.values[e, t] = value[0]
            batch.valid[e, t] = bool(info.get("valid", True))
            obs = next_obs
    return batch


def vector_gae(batch: RolloutBatch, gamma: float, lam: float) -> np.ndarray:
    """Componentwise generalized advantage estimates, zero terminal bootstrap."""
    e_len, t_len, n_obj = batch.rewards.shape
    adv = np.empty_like(batch.rewards)
    gae = np.zeros((e_len, n_obj))
    next_value = np.zeros((e_len, n_obj))
    for t in range(t_len - 1, -1, -1):
        delta = batch.rewards[:, t] + gamma * next_value - batch.values[:, t]
        gae = delta + gamma * lam * gae
        adv[:, t] = gae
        next_value = batch.values[:, t]
    return adv


def value_targets(batch: RolloutBatch, gamma: float) -> np.ndarray:
    """One-step TD targets r[t] + gamma * V(s[t+1]) from behavior values."""
    targets = batch.rewards.copy()
    targets[:, :-1] += gamma * batch.values[:, 1:]
    return targets


def scalarize_advantage(
    advantages: np.ndarray, weight_vector: np.ndarray, normalize: bool = True
) -> np.ndarray:
    """Weight-sum advantages, then batch-normalize to zero mean/unit variance."""
    scalar = advantages @ np.asarray(weight_vector, dtype=np.float64)
    if not normalize:
        return scalar
    std = scalar.std()
    if std < 1e-12:
        return scalar - scalar.mean()
    return (scalar - scalar.mean()) / std


@dataclass
class PpoDiagnostics:
    policy_loss: float
    value_loss: float
    mean_scalarized_return: float
    mean_objective_returns: np.ndarray  # (M,)


def ppo_update(task: Task, batch: RolloutBatch, config: PpoConfig) -> PpoDiagnostics:
    """Clipped-surrogate policy update plus vector value regression.

    Runs ``config.epochs`` full-batch passes (whole episodes; the recurrent
    state requires unbroken sequences).  A non-finite loss or gradient
    aborts the update and restores the pre-update parameters.
    """
    if batch.n_episodes == 0:
        raise ValueError("batch is empty")
    snapshot = {k: v.copy() for k, v in task.policy.params().items()}
    value_snapshot = {k: v.copy() for k, v in task.value.params().items()}
    opt_snapshot = copy.deepcopy((task.policy_opt, task.value_opt))

    advantages = vector_gae(batch, config.gamma, config.gae_lambda)
    scalar_adv = scalarize_advantage(advantages, task.weight_vector)
    targets = value_targets(batch, config.gamma)

    # (T, E, .) layout for the sequence networks.
    obs_seq = np.ascontiguousarray(batch.obs.transpose(1, 0, 2))
    raw_seq = np.ascontiguousarray(batch.raw_actions.transpose(1, 0, 2))
    logp_old = batch.log_probs.T  # (T, E)
    adv_seq = scalar_adv.T  # (T, E)
    target_seq = np.ascontiguousarray(targets.transpose(1, 0, 2))
    n_samples = logp_old.size

    policy_loss = value_loss = float("nan")
    try:
        for _ in range(config.epochs):
            means, cache = task.policy.forward_sequence(obs_seq)
            std = task.policy.std()
            logp_new = log_prob_of_raw(raw_seq, means, std)
            ratio = np.exp(logp_new - logp_old)
            clipped = np.clip(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon)
            surr1 = ratio * adv_seq
            surr2 = clipped * adv_seq
            objective = np.minimum(surr1, surr2)
            policy_loss = -float(objective.mean())
            if not np.isfinite(policy_loss):
                raise NonFiniteLossError("policy loss is not finite")

            # Gradient flows through the unclipped ratio only where it is
            # the active branch of the min.
            active = (surr1 <= surr2).astype(np.float64)
            d_logp = -(adv_seq * ratio * active) / n_samples  # (T, E)
            diff = (raw_seq - means) / std
            d_means = d_logp[:, :, None] * diff / std
            d_log_std = np.sum(d_logp[:, :, None] * (diff * diff - 1.0), axis=(0, 1))
            grads = task.policy.backward(cache, d_means, d_log_std, config.bptt_chunk)
            adam_update(task.policy.params(), grads, task.policy_opt)

            values, v_cache = task.value.forward_sequence(obs_seq)
            residual = values - target_seq
            value_loss = float(np.sum(residual * residual) / n_samples)
            if not np.isfinite(value_loss):
                raise NonFiniteLossError("value loss is not finite")
            d_values = 2.0 * residual / n_samples
            v_grads = task.value.backward(v_cache, d_values, config.bptt_chunk)
            adam_update(task.value.params(), v_grads, task.value_opt)
    except (NonFiniteLossError, NonFiniteGradientError) as exc:
        task.policy.load_params(snapshot)
        task.value.load_params(value_snapshot)
        task.policy_opt, task.value_opt = opt_snapshot
        raise NonFiniteLossError(str(exc)) from exc

    episode_returns = batch.rewards.sum(axis=1)  # (E, M)
    scalarized = episode_returns @ task.weight_vector
    return PpoDiagnostics(
        policy_loss=policy_loss,
        value_loss=value_loss,
        mean_scalarized_return=float(scalarized.mean()),
        mean_objective_returns=episode_returns.mean(axis=0),
    )


@dataclass(frozen=True)
class Snapshot:
    """Reference to a stored task snapshot plus its preference weights."""

    snapshot_id: str
    weight_vector: np.ndarray


def train_task(
    task: Task,
    environment,
    n_iter: int,
    config: PpoConfig,
    store,
    generation: int = 0,
) -> tuple[list[Snapshot], list[dict]]:
    """Optimize one task for ``n_iter`` iterations, snapshotting after each."""
    snapshots: list[Snapshot] = []
    telemetry: list[dict] = []
    for iteration in range(1, n_iter + 1):
        batch = collect_rollouts(task, environment, config.episodes_per_iteration)
        diag = ppo_update(task, batch, config)
        snapshot_id = store.save(task.to_arrays())
        snapshots.append(Snapshot(snapshot_id, task.weight_vector.copy()))
        telemetry.append(
            {
                "task_id": task.task_id,
                "generation": generation,
                "iteration": iteration,
                "snapshot_id": snapshot_id,
                "scalarized_return": diag.mean_scalarized_return,
                "rate_return": float(diag.mean_objective_returns[0]),
                "energy_return": float(diag.mean_objective_returns[1]),
                "policy_loss": diag.policy_loss,
                "value_loss": diag.value_loss,
            }
        )
    return snapshots, telemetry


def lstm_moppo(
    tasks: list[Task],
    n_iter: int,
    env_factory,
    config: PpoConfig,
    store,
    generation: int = 0,
) -> list[Snapshot]:
    """Train every task ``n_iter`` iterations; offspring = all iteration snapshots.

    Returns |tasks| * n_iter snapshots in task-major order.
    """
    if not tasks:
        raise ValueError("task set is empty")
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    offspring: list[Snapshot] = []
    for task in tasks:
        snaps, _ = train_task(task, env_factory(), n_iter, config, store, generation)
        offspring.extend(snaps)
    return offspring
