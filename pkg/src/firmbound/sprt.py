"""Multiclass SPRT decision rule with static, tapering, and random baselines.

The stopping statistic at step t is max_k [ min_{l != k} lambda_kl(t) - a_k(t) ];
the test stops at the first t where it is >= 0 and decides the argmax class.
If no threshold is crossed by the horizon, the stop is forced at T using the
same statistic. All argmax/argmin ties break toward the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .rng import make_rng
from .stats import RiskParams, Trajectory, check_posterior


@dataclass(frozen=True)
class Decision:
    """Terminal decision: 1-based class, stopping time, horizon-forced flag."""

    cls: int
    tau: int
    forced: bool


def check_schedule(sched: np.ndarray) -> np.ndarray:
    sched = np.asarray(sched, dtype=float)
    if sched.ndim != 2:
        raise InvalidInputError(f"schedule must be (T, K), got shape {sched.shape}")
    if not np.all(np.isfinite(sched)):
        raise InvalidInputError("schedule has non-finite entries")
    return sched


def static_schedule(a: float, horizon: int, k: int) -> np.ndarray:
    """Constant-in-time threshold a for every class."""
    return np.full((horizon, k), float(a))


def tapering_schedule(a: float, horizon: int, kappa: float, k: int = 2) -> np.ndarray:
    """Power-function threshold f(t) = A (1 - t/T)^(exp kappa), zero at t = T.

    kappa < 0 gives a concave taper, kappa = 0 the straight line, kappa > 0
    a convex taper.
    """
    if a < 0:
        raise InvalidInputError(f"magnitude must be >= 0, got {a}")
    t = np.arange(1, horizon + 1)
    values = a * (1.0 - t / horizon) ** np.exp(kappa)
    return np.repeat(values[:, np.newaxis], k, axis=1)


def random_stops(m: int, horizon: int, seed: int) -> np.ndarray:
    """m stopping times uniform on [1, horizon], reproducible per seed."""
    if m < 1:
        raise InvalidInputError(f"m must be >= 1, got {m}")
    return make_rng(seed, 0x5704).integers(1, horizon + 1, size=m)


def minmargin_statistic(lam: np.ndarray) -> np.ndarray:
    """min_{l != k} lambda_kl for each class k; input (..., K, K) -> (..., K)."""
    lam = np.asarray(lam, dtype=float)
    k = lam.shape[-1]
    masked = lam + np.where(np.eye(k, dtype=bool), np.inf, 0.0)
    return masked.min(axis=-1)


def sprt_decide_batch(lam: np.ndarray, sched: np.ndarray):
    """Vectorized decision rule over a batch of LLR trajectories.

    lam: (M, T, K, K); sched: (T, K). Returns (cls, tau, forced) arrays with
    1-based classes and stopping times.
    """
    sched = check_schedule(sched)
    m, horizon = lam.shape[0], lam.shape[1]
    if sched.shape[0] < horizon:
        raise InvalidInputError(
            f"schedule horizon {sched.shape[0]} shorter than trajectory horizon {horizon}"
        )
    stat = minmargin_statistic(lam) - sched[np.newaxis, :horizon, :]
    crossed = stat.max(axis=-1) >= 0.0
    any_cross = crossed.any(axis=1)
    tau = np.where(any_cross, crossed.argmax(axis=1) + 1, horizon)
    cls = stat[np.arange(m), tau - 1].argmax(axis=1) + 1
    return cls, tau, ~any_cross


def sprt_decide(traj: Trajectory, sched: np.ndarray) -> Decision:
    """Terminal decision rule for one trajectory of LLR matrices."""
    if traj.kind != "llr":
        raise InvalidInputError("sprt_decide needs LLR statistics")
    cls, tau, forced = sprt_decide_batch(traj.stats[np.newaxis], sched)
    return Decision(int(cls[0]), int(tau[0]), bool(forced[0]))


def terminal_decision(pi: np.ndarray, params: RiskParams) -> int:
    """Class (1-based) minimizing L_k (1 - pi_k); ties go to the lowest index."""
    pi = check_posterior(pi)
    return int(np.argmin(params.penalty * (1.0 - pi))) + 1
