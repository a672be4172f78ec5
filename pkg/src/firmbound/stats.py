"""Sufficient-statistic algebra.

LLR matrices, posterior simplex vectors, conversions between them, and the
a-posteriori-risk functionals. An LLR matrix holds pairwise log-likelihood
ratios lambda_kl in nats and is antisymmetric with an exactly zero diagonal;
a posterior is a point on the K-simplex. Class indices are 1-based in
docstrings and error messages, 0-based in storage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePosteriorError, InvalidInputError

# LLRs are clamped to +-700 nats before exponentiation; exp(709) is the
# float64 overflow edge. Posterior entries below the floor are perturbed up
# and renormalized so their logs stay finite.
LLR_CLAMP = 700.0
POSTERIOR_FLOOR = 1e-12
SIMPLEX_ATOL = 1e-9


def check_llr_matrix(lam: np.ndarray) -> np.ndarray:
    """Validate antisymmetry, zero diagonal, and finiteness; returns the array."""
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 2 or lam.shape[0] != lam.shape[1]:
        raise InvalidInputError(f"LLR matrix must be square, got shape {lam.shape}")
    if not np.all(np.isfinite(lam)):
        raise InvalidInputError("LLR matrix has non-finite entries")
    if np.any(np.diagonal(lam) != 0.0):
        raise InvalidInputError("LLR matrix diagonal must be exactly zero")
    if not np.allclose(lam, -lam.T, atol=SIMPLEX_ATOL, rtol=0.0):
        raise InvalidInputError("LLR matrix is not antisymmetric")
    return lam


def check_posterior(pi: np.ndarray) -> np.ndarray:
    """Validate membership of the K-simplex within 1e-9; returns the array."""
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.size < 2:
        raise InvalidInputError(f"posterior must be a length-K vector, got shape {pi.shape}")
    if not np.all(np.isfinite(pi)):
        raise InvalidInputError("posterior has non-finite entries")
    if np.any(pi < -SIMPLEX_ATOL) or np.any(pi > 1.0 + SIMPLEX_ATOL):
        raise InvalidInputError("posterior entries outside [0, 1]")
    if abs(float(pi.sum()) - 1.0) > SIMPLEX_ATOL:
        raise InvalidInputError(f"posterior sums to {pi.sum()!r}, not 1")
    return pi


def _check_priors(priors: np.ndarray, k: int) -> np.ndarray:
    priors = np.asarray(priors, dtype=float)
    if priors.shape != (k,):
        raise InvalidInputError(f"priors must have shape ({k},), got {priors.shape}")
    if np.any(priors <= 0.0):
        raise InvalidInputError("priors must be strictly positive")
    if abs(float(priors.sum()) - 1.0) > SIMPLEX_ATOL:
        raise InvalidInputError("priors must sum to 1")
    return priors


@dataclass(frozen=True)
class RiskParams:
    """Penalty vector L, per-step sampling cost c, and class priors.

    APR(pi, k, t) = L_k (1 - pi_k) + c t. A nondegenerate boundary at
    uniform penalty L needs L (1 - 1/K) > c; params violating that are
    still legal (they force immediate stopping).
    """

    penalty: np.ndarray
    cost: float
    priors: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        penalty = np.asarray(self.penalty, dtype=float)
        if penalty.ndim != 1 or penalty.size < 2:
            raise InvalidInputError("penalty must be a length-K vector, K >= 2")
        if np.any(penalty < 0.0) or not np.all(np.isfinite(penalty)):
            raise InvalidInputError("penalty entries must be finite and >= 0")
        if not np.isfinite(self.cost) or self.cost < 0.0:
            raise InvalidInputError(f"cost must be finite and >= 0, got {self.cost}")
        priors = self.priors
        if priors is None:
            priors = np.full(penalty.size, 1.0 / penalty.size)
        priors = _check_priors(priors, penalty.size)
        object.__setattr__(self, "penalty", penalty)
        object.__setattr__(self, "cost", float(self.cost))
        object.__setattr__(self, "priors", priors)

    @property
    def K(self) -> int:
        return self.penalty.size

    @property
    def nondegenerate(self) -> bool:
        return bool(self.penalty.min() * (1.0 - 1.0 / self.K) > self.cost)

    def scaled(self, alpha: float) -> "RiskParams":
        """Joint scaling (L, c) -> (alpha L, alpha c); decisions are invariant."""
        return RiskParams(self.penalty * alpha, self.cost * alpha, self.priors)


@dataclass(frozen=True)
class Trajectory:
    """Length-T sequence of sufficient statistics with a 1-based class label.

    stats has shape (T, K, K) when kind == "llr" and (T, K) when
    kind == "posterior".
    """

    stats: np.ndarray
    label: int
    kind: str = "llr"

    def __post_init__(self):
        stats = np.asarray(self.stats, dtype=float)
        if self.kind not in ("llr", "posterior"):
            raise InvalidInputError(f"unknown statistic kind {self.kind!r}")
        expected_ndim = 3 if self.kind == "llr" else 2
        if stats.ndim != expected_ndim or stats.shape[0] < 1:
            raise InvalidInputError(
                f"stats must have {expected_ndim} dims with T >= 1, got shape {stats.shape}"
            )
        k = stats.shape[1]
        if self.kind == "llr" and stats.shape[2] != k:
            raise InvalidInputError("LLR stats must be (T, K, K)")
        if not 1 <= self.label <= k:
            raise InvalidInputError(f"label {self.label} outside [1, {k}]")
        object.__setattr__(self, "stats", stats)

    @property
    def T(self) -> int:
        return self.stats.shape[0]

    @property
    def K(self) -> int:
        return self.stats.shape[1]


def llr_to_posterior(lam: np.ndarray, priors: np.ndarray) -> np.ndarray:
    """Posterior from an LLR matrix: pi_k = 1 / (1 + sum_{i!=k} chi_ik exp(lambda_ik)).

    chi_ik = p(y=i)/p(y=k). Computed in log space and renormalized, so the
    result is a valid simplex point even for slightly inconsistent matrices.
    """
    lam = check_llr_matrix(lam)
    priors = _check_priors(priors, lam.shape[0])
    return posterior_from_llr_batch(lam[np.newaxis], priors)[0]


def posterior_from_llr_batch(lam: np.ndarray, priors: np.ndarray) -> np.ndarray:
    """Vectorized llr_to_posterior over leading batch axes of (..., K, K) input."""
    lam = np.clip(np.asarray(lam, dtype=float), -LLR_CLAMP, LLR_CLAMP)
    logp = np.log(priors)
    # log pi_k = log p_k - logsumexp_i(log p_i + lambda_ik), stable shift.
    scores = lam + logp[:, np.newaxis]
    peak = scores.max(axis=-2, keepdims=True)
    lse = peak[..., 0, :] + np.log(np.exp(scores - peak).sum(axis=-2))
    logpi = logp - lse
    pi = np.exp(logpi - logpi.max(axis=-1, keepdims=True))
    return pi / pi.sum(axis=-1, keepdims=True)


def posterior_to_llr(pi: np.ndarray, priors: np.ndarray) -> np.ndarray:
    """LLR matrix from a posterior: lambda_kl = log(pi_k / pi_l) - log chi_kl.

    Entries below POSTERIOR_FLOOR are floored and the vector renormalized
    (documented perturbation); an exactly zero entry is rejected because its
    LLR is infinite.
    """
    pi = check_posterior(pi)
    priors = _check_priors(priors, pi.size)
    if np.any(pi == 0.0):
        raise DegeneratePosteriorError("posterior has an exactly zero entry")
    pi = np.maximum(pi, POSTERIOR_FLOOR)
    pi = pi / pi.sum()
    score = np.log(pi) - np.log(priors)
    lam = score[:, np.newaxis] - score[np.newaxis, :]
    np.fill_diagonal(lam, 0.0)
    return lam


def apr(pi: np.ndarray, decision: int, params: RiskParams, t: int) -> float:
    """A-posteriori risk of deciding class `decision` (1-based) at step t."""
    pi = check_posterior(pi)
    if not 1 <= decision <= params.K:
        raise InvalidInputError(f"decision {decision} outside [1, {params.K}]")
    if t < 1:
        raise InvalidInputError(f"t must be >= 1, got {t}")
    return float(params.penalty[decision - 1] * (1.0 - pi[decision - 1]) + params.cost * t)


def aapr(decisions, params: RiskParams) -> float:
    """Empirical mean APR over (class, stopping time, posterior at stop) triples."""
    decisions = list(decisions)
    if not decisions:
        raise InvalidInputError("aapr needs at least one decision")
    return float(np.mean([apr(pi, k, params, t) for (k, t, pi) in decisions]))


def pairs_upper(k: int) -> list[tuple[int, int]]:
    """0-based index pairs (a, b), a < b, in row-major order for K classes."""
    return [(a, b) for a in range(k) for b in range(a + 1, k)]


def pairwise_to_full(pairwise: np.ndarray, k: int) -> np.ndarray:
    """Expand (..., K(K-1)/2) upper-triangle LLRs to full antisymmetric (..., K, K)."""
    pairwise = np.asarray(pairwise, dtype=float)
    full = np.zeros(pairwise.shape[:-1] + (k, k))
    for idx, (a, b) in enumerate(pairs_upper(k)):
        full[..., a, b] = pairwise[..., idx]
        full[..., b, a] = -pairwise[..., idx]
    return full


def full_to_pairwise(full: np.ndarray) -> np.ndarray:
    """Inverse of pairwise_to_full."""
    full = np.asarray(full, dtype=float)
    k = full.shape[-1]
    cols = [full[..., a, b] for (a, b) in pairs_upper(k)]
    return np.stack(cols, axis=-1)
