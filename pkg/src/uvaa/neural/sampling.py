"""Tanh-squashed Gaussian action sampling and log-densities.

A raw draw u ~ N(mean, std) is squashed componentwise, a = tanh(u), then
affinely mapped to the per-component bounds.  Log-probabilities include the
tanh change-of-variables term; the constant affine-scale term is omitted
(it is policy-independent and cancels in likelihood ratios).
"""

from __future__ import annotations

import math

import numpy as np

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def squash(u: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    """Map unbounded raw actions into [low, high] componentwise."""
    return low + (np.tanh(u) + 1.0) * 0.5 * (high - low)


def mean_action(mean: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    """Deterministic action at the distribution mean (evaluation mode)."""
    return squash(mean, low, high)


def _log1m_tanh_sq(u: np.ndarray) -> np.ndarray:
    # log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), overflow-free.
    return 2.0 * (math.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


def gaussian_log_prob(u: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Componentwise Gaussian log-density of the raw draw."""
    z = (u - mean) / std
    return -0.5 * z * z - np.log(std) - _HALF_LOG_2PI


def log_prob_of_raw(
    u: np.ndarray, mean: np.ndarray, std: np.ndarray, axis: int = -1
) -> np.ndarray:
    """Joint log-probability of the squashed action identified by raw ``u``.

    Gaussian log-density plus the log|d tanh/du| correction, summed over
    action components.
    """
    return np.sum(gaussian_log_prob(u, mean, std) + _log1m_tanh_sq(u), axis=axis)


def sample_action(
    mean: np.ndarray,
    std: np.ndarray,
    low: np.ndarray,
    high: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Draw one bounded action; returns (action, raw draw, log_prob)."""
    mean = np.asarray(mean, dtype=np.float64)
    u = mean + std * rng.standard_normal(mean.shape)
    action = squash(u, low, high)
    log_prob = float(log_prob_of_raw(u, mean, std))
    return action, u, log_prob
