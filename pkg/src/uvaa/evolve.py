"""Evolutionary outer loop over PPO learning tasks.

Warm-up trains one task per preference weight vector; each later
generation (1) folds every offspring snapshot into a direction-binned task
population with bounded per-bin capacity, (2) re-selects one task per
weight vector with a sparsity-favoring sector roulette, (3) trains the
selected tasks, and (4) folds all evaluated snapshots into an external
Pareto archive.  Policies are evaluated on a fixed, run-wide seed list at
the distribution mean, so a snapshot's objective vector is a pure function
of its parameters.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import metrics
from .env import EnvConfig, UvaaEnv
from .errors import UvaaError
from .moppo import (
    PpoConfig,
    Snapshot,
    Task,
    new_task,
    task_from_arrays,
    train_task,
)
from .neural.nets import PolicyNetwork
from .neural.sampling import mean_action
from .rng import substream
from .store import DiskStore, MemoryStore

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "UVAA_THREADS"


@dataclass(frozen=True)
class EvolutionConfig:
    n_weights: int = 15
    g_max: int = 100
    n_warm: int = 60
    n_evo: int = 10
    b_num: int = 50
    b_size: int = 2
    k_can: int = 5
    c: float = 2.0
    n_sectors: int = 8
    n_eval: int = 3

    def __post_init__(self) -> None:
        if self.n_weights < 2:
            raise ValueError("n_weights must be >= 2")
        if self.g_max < 0:
            raise ValueError("g_max must be >= 0")
        if min(self.n_warm, self.n_evo, self.b_num, self.b_size, self.k_can) < 1:
            raise ValueError("n_warm, n_evo, b_num, b_size, k_can must be >= 1")
        if self.c <= 1.0:
            raise ValueError("c must be greater than 1")
        if self.n_sectors < 1:
            raise ValueError("n_sectors must be >= 1")
        if self.n_eval < 1:
            raise ValueError("n_eval must be >= 1")


@dataclass(frozen=True)
class NetworkConfig:
    lstm_hidden: int = 128
    fc_layers: tuple[int, ...] = (256, 256, 256)
    initial_log_std: float = -0.5
    recurrent: bool = True


@dataclass
class PopMember:
    """A stored policy with its objective vector (maximize-both)."""

    snapshot_id: str
    objectives: np.ndarray  # (2,)
    weight_vector: np.ndarray


def make_weight_vectors(n: int, m: int = 2) -> np.ndarray:
    """n evenly spaced preference vectors on the 2-simplex, extremes included."""
    if m != 2:
        raise ValueError("only two objectives are supported")
    if n < 2:
        raise ValueError("need at least 2 weight vectors")
    first = np.arange(n) / (n - 1)
    return np.column_stack([first, 1.0 - first])


def build_policy(
    rng_or_arrays,
    obs_dim: int,
    action_dim: int,
    net: NetworkConfig,
) -> PolicyNetwork:
    """Fresh random policy (given a Generator) or one restored from arrays."""
    if isinstance(rng_or_arrays, np.random.Generator):
        return PolicyNetwork.create(
            rng_or_arrays,
            obs_dim,
            action_dim,
            lstm_hidden=net.lstm_hidden,
            fc_layers=net.fc_layers,
            recurrent=net.recurrent,
            initial_log_std=net.initial_log_std,
        )
    policy = PolicyNetwork.create(
        np.random.default_rng(0),
        obs_dim,
        action_dim,
        lstm_hidden=net.lstm_hidden,
        fc_layers=net.fc_layers,
        recurrent=net.recurrent,
    )
    policy.load_params(
        {k[len("policy/") :]: v for k, v in rng_or_arrays.items() if k.startswith("policy/")}
    )
    return policy


def evaluate_policy(
    policy: PolicyNetwork,
    env_config: EnvConfig,
    n_eval: int,
    seed_base: int,
) -> np.ndarray:
    """Objective vector of a policy under the shared evaluation protocol.

    Runs ``n_eval`` episodes seeded from (seed_base, episode index) with
    actions taken at the distribution mean; returns
    (mean total rate, -mean total energy) so both components are maximized.
    """
    if n_eval < 1:
        raise ValueError("n_eval must be >= 1")
    env = UvaaEnv(env_config)
    rate_totals = np.empty(n_eval)
    energy_totals = np.empty(n_eval)
    seeds = [int(substream(seed_base, "eval-episode", k).integers(0, 2**63 - 1)) for k in range(n_eval)]
    for k, seed in enumerate(seeds):
        obs = env.reset(seed)
        state = policy.init_state(1)
        total_rate = 0.0
        total_energy = 0.0
        for _ in range(env_config.horizon):
            mean, state = policy.step(obs[None, :], state)
            action = mean_action(mean[0], env.action_low, env.action_high)
            obs, _, _, info = env.step(action)
            total_rate += info["rate"]
            total_energy += info["energy"]
        rate_totals[k] = total_rate
        energy_totals[k] = total_energy
    return np.array([rate_totals.mean(), -energy_totals.mean()])


class ParetoArchive:
    """External archive of non-dominated (snapshot id, objective vector) pairs."""

    def __init__(self) -> None:
        self.members: list[PopMember] = []

    def __len__(self) -> int:
        return len(self.members)

    def update(self, candidates: list[PopMember]) -> None:
        for cand in candidates:
            if not np.isfinite(cand.objectives).all():
                raise ValueError("candidate objective vector must be finite")
            if any(m.snapshot_id == cand.snapshot_id for m in self.members):
                continue
            if any(
                metrics.dominates(m.objectives, cand.objectives)
                or np.array_equal(m.objectives, cand.objectives)
                for m in self.members
            ):
                continue
            self.members = [
                m
                for m in self.members
                if not metrics.dominates(cand.objectives, m.objectives)
            ]
            self.members.append(cand)

    def front(self) -> np.ndarray:
        if not self.members:
            return np.empty((0, 2))
        return np.array([m.objectives for m in self.members])

    def sorted_members(self) -> list[PopMember]:
        return sorted(
            self.members, key=lambda m: (-m.objectives[0], -m.objectives[1], m.snapshot_id)
        )

    def is_non_dominated(self) -> bool:
        front = self.front()
        for i in range(len(front)):
            for j in range(len(front)):
                if i != j and metrics.dominates(front[i], front[j]):
                    return False
        return True


def tpu(
    members: list[PopMember],
    z_ref: np.ndarray,
    b_num: int,
    b_size: int,
) -> list[PopMember]:
    """Task population update via directional performance buffers.

    Each member joins the buffer whose direction maximizes the normalized
    projection of (F - z_ref); overflowing buffers keep the ``b_size``
    members farthest from ``z_ref``.
    """
    directions = make_weight_vectors(b_num)
    norms = np.linalg.norm(directions, axis=1)
    buffers: list[list[tuple[float, PopMember]]] = [[] for _ in range(b_num)]
    for member in members:
        f_ref = member.objectives - z_ref
        proj = (directions @ f_ref) / norms
        j = int(np.argmax(proj))
        distance = float(np.linalg.norm(f_ref))
        buffers[j].append((distance, member))
    population: list[PopMember] = []
    for bucket in buffers:
        bucket.sort(key=lambda item: (-item[0], item[1].snapshot_id))
        population.extend(member for _, member in bucket[:b_size])
    return population


def _sector_counts(points: np.ndarray, n_sectors: int) -> np.ndarray:
    """Sector index of each normalized objective point around the centroid."""
    centroid = points.mean(axis=0)
    offsets = points - centroid
    angles = np.arctan2(offsets[:, 1], offsets[:, 0])  # [-pi, pi]
    sectors = np.floor((angles + math.pi) / (2.0 * math.pi) * n_sectors).astype(int)
    return np.clip(sectors, 0, n_sectors - 1)


def hypersphere_select(
    weight_vectors: np.ndarray,
    members: list[PopMember],
    normalized_objectives: np.ndarray,
    k_can: int,
    c: float,
    rng: np.random.Generator,
    n_sectors: int = 8,
) -> list[tuple[PopMember, np.ndarray]]:
    """Sparsity-favoring task selection.

    For each weight vector: score members by the weighted normalized
    objectives, keep the top ``k_can`` candidates, bin them into equal
    angular sectors around their centroid, then roulette-select one with
    per-candidate weight c / (count of its sector).  The selected member is
    paired with the current weight vector (duplicates permitted).
    """
    if not members:
        raise ValueError("population is empty")
    selected: list[tuple[PopMember, np.ndarray]] = []
    for w in weight_vectors:
        scores = normalized_objectives @ w
        order = np.argsort(-scores, kind="stable")[: min(k_can, len(members))]
        candidates = [members[i] for i in order]
        if len(candidates) == 1:
            selected.append((candidates[0], w.copy()))
            continue
        points = normalized_objectives[order]
        sectors = _sector_counts(points, n_sectors)
        counts = np.bincount(sectors, minlength=n_sectors)
        weights = c / counts[sectors]
        probs = weights / weights.sum()
        pick = int(rng.choice(len(candidates), p=probs))
        selected.append((candidates[pick], w.copy()))
    return selected


@dataclass
class RunBundle:
    """Everything a reproducible optimization run needs."""

    env: EnvConfig
    ppo: PpoConfig
    evolution: EvolutionConfig
    network: NetworkConfig
    master_seed: int
    disable_hypersphere: bool = False

    @property
    def eval_seed_base(self) -> int:
        # One fixed evaluation seed list per run, shared by every policy.
        return self.master_seed


@dataclass
class GenerationRecord:
    generation: int
    ep_members: list[PopMember]
    wall_time_s: float


@dataclass
class RunResult:
    archive: ParetoArchive
    generations: list[GenerationRecord]
    telemetry: list[dict]
    objective_index: dict[str, np.ndarray]  # snapshot id -> F for every evaluation

    def reference_front(self) -> np.ndarray:
        points = np.array(list(self.objective_index.values()))
        return points[metrics.pareto_filter(points)]


class _ObjectiveTracker:
    """Caches snapshot evaluations and tracks observed objective ranges."""

    def __init__(self, env_config: EnvConfig, net: NetworkConfig, n_eval: int, seed_base: int):
        self.env_config = env_config
        self.net = net
        self.n_eval = n_eval
        self.seed_base = seed_base
        self.cache: dict[str, np.ndarray] = {}
        self.obs_min = np.full(2, np.inf)
        self.obs_max = np.full(2, -np.inf)

    def evaluate(self, snapshot: Snapshot, store) -> np.ndarray:
        if snapshot.snapshot_id not in self.cache:
            arrays = store.load(snapshot.snapshot_id)
            policy = build_policy(
                arrays, self.env_config.obs_dim, self.env_config.action_dim, self.net
            )
            f = evaluate_policy(policy, self.env_config, self.n_eval, self.seed_base)
            self.cache[snapshot.snapshot_id] = f
            self.obs_min = np.minimum(self.obs_min, f)
            self.obs_max = np.maximum(self.obs_max, f)
        return self.cache[snapshot.snapshot_id]

    def normalize(self, points: np.ndarray) -> np.ndarray:
        span = np.where(self.obs_max - self.obs_min > 1e-12, self.obs_max - self.obs_min, 1.0)
        return (points - self.obs_min) / span


def _train_with_replacement(
    task: Task,
    slot: int,
    env_config: EnvConfig,
    n_iter: int,
    ppo_config: PpoConfig,
    store,
    generation: int,
    master_seed: int,
    net_config: NetworkConfig,
) -> tuple[list[Snapshot], list[dict]]:
    """Train one task; on failure retry once with a fresh random task."""
    try:
        return train_task(task, UvaaEnv(env_config), n_iter, ppo_config, store, generation)
    except UvaaError as exc:
        logger.warning(
            "task %s failed (%s); replacing with a fresh random task", task.task_id, exc
        )
        fresh = new_task(
            substream(master_seed, "task-retry", generation, slot),
            task.weight_vector,
            env_config.obs_dim,
            env_config.action_dim,
            lstm_hidden=net_config.lstm_hidden,
            fc_layers=net_config.fc_layers,
            recurrent=net_config.recurrent,
            initial_log_std=net_config.initial_log_std,
            learning_rate=ppo_config.learning_rate,
            task_id=f"{task.task_id}-retry",
        )
        return train_task(fresh, UvaaEnv(env_config), n_iter, ppo_config, store, generation)


def _train_task_job(payload):
    """Top-level worker for process pools (must be picklable)."""
    (task, slot, env_config, n_iter, ppo_config, store_dir, generation, master_seed, net_config) = payload
    store = DiskStore(store_dir)
    snaps, telemetry = _train_with_replacement(
        task, slot, env_config, n_iter, ppo_config, store, generation, master_seed, net_config
    )
    return slot, snaps, telemetry


def _train_population(
    tasks: list[Task],
    n_iter: int,
    bundle: RunBundle,
    store,
    generation: int,
    n_threads: int,
) -> tuple[list[Snapshot], list[dict]]:
    """Train all tasks, in-process or across a process pool.

    Results are assembled in task-slot order and every stream is keyed by
    (master seed, generation, slot), so the outputs do not depend on the
    degree of parallelism.
    """
    if n_threads > 1 and isinstance(store, DiskStore):
        payloads = [
            (
                task,
                slot,
                bundle.env,
                n_iter,
                bundle.ppo,
                store.directory,
                generation,
                bundle.master_seed,
                bundle.network,
            )
            for slot, task in enumerate(tasks)
        ]
        results: dict[int, tuple[list[Snapshot], list[dict]]] = {}
        with ProcessPoolExecutor(max_workers=n_threads) as pool:
            for slot, snaps, telemetry in pool.map(_train_task_job, payloads):
                results[slot] = (snaps, telemetry)
        ordered = [results[slot] for slot in range(len(tasks))]
    else:
        ordered = [
            _train_with_replacement(
                task,
                slot,
                bundle.env,
                n_iter,
                bundle.ppo,
                store,
                generation,
                bundle.master_seed,
                bundle.network,
            )
            for slot, task in enumerate(tasks)
        ]

    offspring: list[Snapshot] = []
    telemetry_rows: list[dict] = []
    for snaps, rows in ordered:
        offspring.extend(snaps)
        telemetry_rows.extend(rows)
    return offspring, telemetry_rows


def run(bundle: RunBundle, store=None, n_threads: int | None = None) -> RunResult:
    """Full optimization: warm-up plus ``g_max`` evolutionary generations."""
    evo = bundle.evolution
    store = store if store is not None else MemoryStore()
    if n_threads is None:
        n_threads = int(os.environ.get(THREADS_ENV_VAR, "1"))
    weight_vectors = make_weight_vectors(evo.n_weights)
    tracker = _ObjectiveTracker(
        bundle.env, bundle.network, evo.n_eval, bundle.eval_seed_base
    )
    archive = ParetoArchive()
    generations: list[GenerationRecord] = []
    telemetry: list[dict] = []

    def evaluate_all(snaps: list[Snapshot]) -> list[PopMember]:
        members = []
        for snap in snaps:
            f = tracker.evaluate(snap, store)
            members.append(PopMember(snap.snapshot_id, f.copy(), snap.weight_vector.copy()))
        return members

    start = time.perf_counter()
    tasks = [
        new_task(
            substream(bundle.master_seed, "task-train", 0, slot),
            weight_vectors[slot],
            bundle.env.obs_dim,
            bundle.env.action_dim,
            lstm_hidden=bundle.network.lstm_hidden,
            fc_layers=bundle.network.fc_layers,
            recurrent=bundle.network.recurrent,
            initial_log_std=bundle.network.initial_log_std,
            learning_rate=bundle.ppo.learning_rate,
            task_id=f"g0-t{slot}",
        )
        for slot in range(evo.n_weights)
    ]
    offspring, rows = _train_population(tasks, evo.n_warm, bundle, store, 0, n_threads)
    telemetry.extend(rows)
    offspring_members = evaluate_all(offspring)
    archive.update(offspring_members)
    generations.append(
        GenerationRecord(0, archive.sorted_members(), time.perf_counter() - start)
    )
    logger.info("warm-up done: %d offspring, |EP|=%d", len(offspring), len(archive))

    population: list[PopMember] = []
    for g in range(1, evo.g_max + 1):
        start = time.perf_counter()
        seen: dict[str, PopMember] = {}
        for m in population + offspring_members:
            seen.setdefault(m.snapshot_id, m)
        pool_members = list(seen.values())
        span = tracker.obs_max - tracker.obs_min
        z_ref = tracker.obs_min - 0.05 * np.where(span > 1e-12, span, 1.0)
        norm_members = [
            PopMember(m.snapshot_id, tracker.normalize(m.objectives), m.weight_vector)
            for m in pool_members
        ]
        norm_z = tracker.normalize(z_ref[None, :])[0]
        kept = tpu(norm_members, norm_z, evo.b_num, evo.b_size)
        by_id = {m.snapshot_id: m for m in pool_members}
        population = [by_id[m.snapshot_id] for m in kept]

        norm_objs = tracker.normalize(np.array([m.objectives for m in population]))
        select_rng = substream(bundle.master_seed, "task-select", g)
        k_can = 1 if bundle.disable_hypersphere else evo.k_can
        chosen = hypersphere_select(
            weight_vectors,
            population,
            norm_objs,
            k_can,
            evo.c,
            select_rng,
            evo.n_sectors,
        )
        tasks = []
        for slot, (member, w) in enumerate(chosen):
            arrays = store.load(member.snapshot_id)
            tasks.append(
                task_from_arrays(
                    arrays,
                    substream(bundle.master_seed, "task-train", g, slot),
                    bundle.env.obs_dim,
                    bundle.env.action_dim,
                    lstm_hidden=bundle.network.lstm_hidden,
                    fc_layers=bundle.network.fc_layers,
                    recurrent=bundle.network.recurrent,
                    learning_rate=bundle.ppo.learning_rate,
                    weight_vector=w,
                    task_id=f"g{g}-t{slot}",
                )
            )
        offspring, rows = _train_population(tasks, evo.n_evo, bundle, store, g, n_threads)
        telemetry.extend(rows)
        offspring_members = evaluate_all(offspring)
        archive.update(offspring_members)
        generations.append(
            GenerationRecord(g, archive.sorted_members(), time.perf_counter() - start)
        )
        keep = (
            {m.snapshot_id for m in archive.members}
            | {m.snapshot_id for m in population}
            | {m.snapshot_id for m in offspring_members}
        )
        store.prune(keep)
        logger.info(
            "generation %d/%d: |P|=%d, |EP|=%d", g, evo.g_max, len(population), len(archive)
        )

    return RunResult(
        archive=archive,
        generations=generations,
        telemetry=telemetry,
        objective_index=dict(tracker.cache),
    )
