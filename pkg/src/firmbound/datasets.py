"""Synthetic trajectory generators with ground-truth sufficient statistics.

Three families: i.i.d. multivariate-Gaussian sequences with analytic LLRs,
the non-i.i.d. damped-oscillating-LLR (DOL) process, and a discrete Bernoulli
coin-flip toy whose posterior is a closed-form function of (t, heads) so an
exact dynamic-programming oracle exists.

Datasets persist to a small binary container (FBDS): an 24-byte header
(magic "FBDS", version, K, T, d, M as little-endian uint32) followed by
little-endian float32 data, row-major per trajectory, plus a JSON sidecar
holding the generating spec, seed, and labels.
"""

from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataIOError, InvalidInputError
from .rng import make_rng, normal
from .stats import pairs_upper, pairwise_to_full, posterior_from_llr_batch

FBDS_MAGIC = b"FBDS"
FBDS_VERSION = 1

# Reference split sizes (train, val, test) at full scale; the desk-scale
# default of 5000 train / 1000 test is the CLI default.
FULL_SPLITS = {"gaussian2": (80_000, 2_000, 80_000), "gaussian3": (60_000, 6_000, 120_000)}
DESK_TRAIN = 5_000
DESK_TEST = 1_000


@dataclass(frozen=True)
class SequenceDataset:
    """Batch of trajectories: pairwise LLRs (M, T, K(K-1)/2) plus labels.

    `llr[..., idx]` holds lambda_kl for the idx-th (k < l) pair in row-major
    order. `features` optionally carries the raw observations (M, T, d).
    """

    kind: str
    llr: np.ndarray
    labels: np.ndarray
    K: int
    features: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.llr.shape[0]

    @property
    def T(self) -> int:
        return self.llr.shape[1]

    def llr_full(self) -> np.ndarray:
        """Full antisymmetric LLR matrices, shape (M, T, K, K)."""
        return pairwise_to_full(self.llr, self.K)

    def posteriors(self, priors: np.ndarray) -> np.ndarray:
        """Posterior trajectories (M, T, K) implied by the LLRs and priors."""
        return posterior_from_llr_batch(self.llr_full(), np.asarray(priors, dtype=float))


def _balanced_labels(m: int, k: int) -> np.ndarray:
    return (np.arange(m) % k) + 1


def _parallel_fill(m: int, threads: int, fill) -> None:
    """Run fill(lo, hi) over fixed-size chunks; chunking is independent of
    the worker count, so output never depends on threads."""
    chunk = 256
    ranges = [(lo, min(lo + chunk, m)) for lo in range(0, m, chunk)]
    if threads <= 1:
        for lo, hi in ranges:
            fill(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda r: fill(*r), ranges))


@dataclass(frozen=True)
class GaussianSpec:
    """K-class sequential Gaussian data: x_t ~ N(mu_k, I_d), i.i.d. over t."""

    K: int = 2
    d: int = 128
    horizon: int = 50
    m: int = DESK_TRAIN
    seed: int = 0
    stream: int = 0
    means: np.ndarray | None = None

    def resolved_means(self) -> np.ndarray:
        if self.means is not None:
            means = np.asarray(self.means, dtype=float)
            if means.shape != (self.K, self.d):
                raise InvalidInputError(f"means must be ({self.K}, {self.d})")
            return means
        if self.K > self.d:
            raise InvalidInputError("default means need d >= K")
        means = np.zeros((self.K, self.d))
        means[np.arange(self.K), np.arange(self.K)] = 0.5
        return means


def gen_gaussian(spec: GaussianSpec, keep_features: bool = True, threads: int = 1) -> SequenceDataset:
    """Sample trajectories and their analytic cumulative LLRs.

    lambda_kl(t) = sum_{s<=t} [<mu_k - mu_l, x_s> - (|mu_k|^2 - |mu_l|^2)/2],
    the exact identity-covariance Gaussian LLR. Labels are balanced across
    classes; trajectory i draws from the stream (seed, stream, i) so content
    is independent of generation order.
    """
    means = spec.resolved_means()
    m, horizon, d, k = spec.m, spec.horizon, spec.d, spec.K
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    pairs = pairs_upper(k)
    diffs = np.stack([means[a] - means[b] for a, b in pairs])  # (P, d)
    offs = np.array([(means[a] @ means[a] - means[b] @ means[b]) / 2.0 for a, b in pairs])
    labels = _balanced_labels(m, k)
    llr = np.empty((m, horizon, len(pairs)))
    feats = np.empty((m, horizon, d), dtype=np.float32) if keep_features else None

    def fill(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            rng = make_rng(spec.seed, spec.stream, i)
            x = means[labels[i] - 1] + normal(rng, (horizon, d))
            if feats is not None:
                feats[i] = x.astype(np.float32)
            llr[i] = np.cumsum(x @ diffs.T - offs[np.newaxis, :], axis=0)

    _parallel_fill(m, threads, fill)
    return SequenceDataset(
        kind=f"gaussian{k}", llr=llr, labels=labels, K=k, features=feats,
        meta={"seed": spec.seed, "d": d, "means": means.tolist()},
    )


@dataclass(frozen=True)
class DOLSpec:
    """Damped-oscillating binary LLR process over a fixed horizon.

    Lambda(t) = gamma (1 - (1 - t/T)^exp(kappa)) + A exp(-beta t) sin(omega t)
    + N(0, sigma), with per-trajectory parameters A ~ N(2,2),
    beta ~ U(0.02,0.2), omega ~ U(-2,3), kappa ~ U(-2.5,0), sigma = |N(0,1)|,
    sampled once per trajectory. gamma = +1 maps to class 1, -1 to class 2.
    """

    horizon: int = 50
    m: int = DESK_TRAIN
    seed: int = 0
    stream: int = 0


def gen_dol(spec: DOLSpec, threads: int = 1) -> SequenceDataset:
    m, horizon = spec.m, spec.horizon
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    labels = _balanced_labels(m, 2)
    gammas = np.where(labels == 1, 1.0, -1.0)
    llr = np.empty((m, horizon, 1))
    t = np.arange(1, horizon + 1, dtype=float)
    params = np.empty((m, 5))

    def fill(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            rng = make_rng(spec.seed, spec.stream, i)
            amp = 2.0 + 2.0 * normal(rng, 1)[0]
            beta = 0.02 + 0.18 * rng.random()
            omega = -2.0 + 5.0 * rng.random()
            kappa = -2.5 + 2.5 * rng.random()
            sigma = abs(normal(rng, 1)[0])
            params[i] = (amp, beta, omega, kappa, sigma)
            wave = gammas[i] * (1.0 - (1.0 - t / horizon) ** np.exp(kappa))
            wave = wave + amp * np.exp(-beta * t) * np.sin(omega * t)
            llr[i, :, 0] = wave + sigma * normal(rng, horizon)

    _parallel_fill(m, threads, fill)
    return SequenceDataset(
        kind="dol", llr=llr, labels=labels, K=2, features=None,
        meta={"seed": spec.seed, "params": params.tolist()},
    )


def dol_curve(gamma: float, horizon: int, amp: float, beta: float, omega: float,
              kappa: float) -> np.ndarray:
    """Noise-free DOL trajectory, exposed for closed-form checks."""
    t = np.arange(1, horizon + 1, dtype=float)
    return gamma * (1.0 - (1.0 - t / horizon) ** np.exp(kappa)) + amp * np.exp(-beta * t) * np.sin(omega * t)


def bernoulli_posterior(p0: float, p1: float, priors, t: int, heads: int) -> np.ndarray:
    """Exact posterior over {class 1 (p0), class 2 (p1)} after t flips, h heads."""
    priors = np.asarray(priors, dtype=float)
    logw = np.log(priors) + heads * np.log([p0, p1]) + (t - heads) * np.log([1.0 - p0, 1.0 - p1])
    w = np.exp(logw - logw.max())
    return w / w.sum()


def gen_bernoulli_toy(p0: float, p1: float, horizon: int, m: int, seed: int,
                      priors=(0.5, 0.5), stream: int = 0) -> SequenceDataset:
    """i.i.d. coin flips under head probability p in {p0, p1}.

    The LLR after t flips with h heads is
    h log(p0/p1) + (t - h) log((1-p0)/(1-p1)); the posterior is the
    closed-form function of (t, h) above, which is what makes the exact
    stopping oracle tractable. Horizon capped at 12 to keep the state
    lattice small.
    """
    if not (0.0 < p0 <= p1 < 1.0):
        raise InvalidInputError("need 0 < p0 <= p1 < 1")
    if horizon > 12 or horizon < 1:
        raise InvalidInputError("bernoulli toy horizon must be in [1, 12]")
    priors = np.asarray(priors, dtype=float)
    labels = _balanced_labels(m, 2)
    ps = np.array([p0, p1])
    flips = np.empty((m, horizon, 1), dtype=np.float32)
    for i in range(m):
        rng = make_rng(seed, stream, i)
        flips[i, :, 0] = (rng.random(horizon) < ps[labels[i] - 1]).astype(np.float32)
    if p0 == p1:
        llr = np.zeros((m, horizon, 1))
    else:
        head_term = np.log(p0 / p1)
        tail_term = np.log((1.0 - p0) / (1.0 - p1))
        inc = flips[:, :, 0].astype(float) * head_term + (1.0 - flips[:, :, 0]) * tail_term
        llr = np.cumsum(inc, axis=1)[:, :, np.newaxis]
    return SequenceDataset(
        kind="bernoulli", llr=llr, labels=labels, K=2, features=flips,
        meta={"seed": seed, "p0": p0, "p1": p1, "priors": priors.tolist()},
    )


def write_fbds(path, data: np.ndarray, k: int, sidecar: dict) -> None:
    """Write one FBDS file and its JSON sidecar next to it."""
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 3:
        raise InvalidInputError(f"FBDS data must be (M, T, d), got {data.shape}")
    m, horizon, d = data.shape
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(FBDS_MAGIC)
            fh.write(struct.pack("<5I", FBDS_VERSION, k, horizon, d, m))
            fh.write(data.tobytes(order="C"))
        with open(str(path) + ".json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=1, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from exc


def read_fbds(path):
    """Read an FBDS file; returns (data (M,T,d) float32, header dict, sidecar dict)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    if len(raw) < 24 or raw[:4] != FBDS_MAGIC:
        raise DataIOError(f"{path} is not an FBDS file")
    version, k, horizon, d, m = struct.unpack("<5I", raw[4:24])
    if version != FBDS_VERSION:
        raise DataIOError(f"unsupported FBDS version {version}")
    expected = 24 + 4 * m * horizon * d
    if len(raw) != expected:
        raise DataIOError(f"{path} truncated: {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw[24:], dtype="<f4").reshape(m, horizon, d).copy()
    sidecar_path = Path(str(path) + ".json")
    sidecar = {}
    if sidecar_path.exists():
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    return data, {"version": version, "K": k, "T": horizon, "d": d, "M": m}, sidecar
