"""Convex piecewise-linear regression via 2-block ADMM.

Solves min_f (1/n) sum_i (y_i - f(x_i))^2 + reg * ||f||_L over max-affine
functions f(x) = max_i <a_i, x - x_i> + yhat_i, where ||f||_L = sum_l
max_i |a_il|. The two blocks are (yhat, a) and (s, u, p+, p-, L); each block
minimizer is closed form given the scaled duals (alpha, gamma, eta), and the
returned model averages the (yhat, a) iterates over the sweep count, which is
the form carrying the excess-risk guarantee.

Inputs are mean-centered and scaled to [-1, 1]^d per dimension and targets
standardized before the solver runs (the guarantee assumes max |x_il| <= 1
and Var(y) <= 1); predictions are mapped back on output. Concave targets are
handled by fitting the negated targets and negating predictions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import InvalidInputError, NumericError
from .rng import make_rng

REG_GRID = (1e-3, 1e1, 30)  # log-spaced search range and point count for reg


def reg_lower_bound(n: int, d: int) -> float:
    """Smallest regularization weight with a consistency guarantee."""
    return 3.0 / np.sqrt(2.0 * n * d)


def default_iters(n: int, d: int) -> int:
    """Sweep count meeting the averaged-iterate convergence requirement."""
    return int(np.ceil(n * np.sqrt(d)))


@dataclass(frozen=True)
class AdmmConfig:
    """ADMM hyperparameters. rho defaults to the coupling sqrt(d) reg^2 / n."""

    reg: float
    rho: float | None = None
    iters: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.reg > 0:
            raise InvalidInputError(f"reg must be > 0, got {self.reg}")
        if self.rho is not None and not self.rho > 0:
            raise InvalidInputError(f"rho must be > 0, got {self.rho}")
        if self.iters is not None and self.iters < 1:
            raise InvalidInputError(f"iters must be >= 1, got {self.iters}")

    def resolve(self, n: int, d: int) -> tuple[float, int]:
        rho = self.rho if self.rho is not None else np.sqrt(d) * self.reg**2 / n
        iters = self.iters if self.iters is not None else default_iters(n, d)
        if iters < default_iters(n, d):
            warnings.warn(
                f"iters={iters} below the guarantee threshold {default_iters(n, d)}; "
                "fit quality is best-effort", stacklevel=3)
        return float(rho), int(iters)


@dataclass
class PiecewiseLinearModel:
    """Max-affine model in standardized coordinates with unscaling metadata."""

    anchors: np.ndarray      # (n, d), standardized inputs
    slopes: np.ndarray       # (n, d), averaged ADMM iterates
    offsets: np.ndarray      # (n,), averaged ADMM iterates
    sign: str                # "convex" | "concave"
    center: np.ndarray       # (d,)
    halfwidth: np.ndarray    # (d,)
    y_mean: float
    y_std: float
    train_objective: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.anchors.shape[1]

    def predict_batch(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.d:
            raise InvalidInputError(f"query dim {x.shape[1]} != model dim {self.d}")
        xs = (x - self.center) / self.halfwidth
        # max_i <a_i, xs - x_i> + yhat_i, evaluated in chunks to bound memory
        piece_off = self.offsets - np.einsum("ij,ij->i", self.slopes, self.anchors)
        out = np.empty(x.shape[0])
        step = max(1, int(4e6) // max(1, self.anchors.shape[0]))
        for lo in range(0, x.shape[0], step):
            scores = xs[lo:lo + step] @ self.slopes.T + piece_off
            out[lo:lo + step] = scores.max(axis=1)
        out = out * self.y_std + self.y_mean
        return -out if self.sign == "concave" else out

    def predict(self, x: np.ndarray) -> float:
        return float(self.predict_batch(np.asarray(x, dtype=float)[np.newaxis])[0])

    def to_dict(self) -> dict:
        return {
            "type": "cfl", "sign": self.sign,
            "anchors": self.anchors.tolist(), "slopes": self.slopes.tolist(),
            "offsets": self.offsets.tolist(), "center": self.center.tolist(),
            "halfwidth": self.halfwidth.tolist(),
            "y_mean": self.y_mean, "y_std": self.y_std,
            "train_objective": self.train_objective,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PiecewiseLinearModel":
        return cls(
            anchors=np.asarray(doc["anchors"], dtype=float),
            slopes=np.asarray(doc["slopes"], dtype=float),
            offsets=np.asarray(doc["offsets"], dtype=float),
            sign=doc["sign"], center=np.asarray(doc["center"], dtype=float),
            halfwidth=np.asarray(doc["halfwidth"], dtype=float),
            y_mean=float(doc["y_mean"]), y_std=float(doc["y_std"]),
            train_objective=float(doc.get("train_objective", float("nan"))),
        )


def l_update(gammas: np.ndarray, cs: np.ndarray, ratio: float) -> float:
    """Exact minimizer of reg*L + (rho/2) sum_i h_i(L) over L >= 0.

    h_i is the partially minimized block-2 penalty for one sample: zero for
    L - gamma_i >= c_i, quadratic with slope 1 then 2 below. The scaled
    derivative starts at ratio = reg/rho for large L and gains slope 1/2 per
    knot {gamma_i +- c_i} scanned downward; the first sign change brackets
    the root.
    """
    gammas = np.asarray(gammas, dtype=float)
    cs = np.asarray(cs, dtype=float)
    if gammas.size == 0 or gammas.shape != cs.shape:
        raise InvalidInputError("l_update needs matching nonempty gamma/c arrays")
    n = gammas.size
    knots = np.sort(np.concatenate([gammas + cs, gammas - cs]))[::-1]
    slopes = 0.5 * np.arange(1, 2 * n)
    fvals = ratio + np.cumsum(slopes * np.diff(knots))
    hits = np.nonzero(fvals <= 0.0)[0]
    if hits.size:
        j = int(hits[0])
        return max(knots[j + 1] - fvals[j] / slopes[j], 0.0)
    return max(knots[-1] - fvals[-1] / n, 0.0)


def _standardize(x: np.ndarray, y: np.ndarray):
    center = x.mean(axis=0)
    xc = x - center
    halfwidth = np.abs(xc).max(axis=0)
    halfwidth = np.where(halfwidth > 0.0, halfwidth, 1.0)
    y_mean = float(y.mean())
    y_std = float(y.std())
    if y_std < 1e-12:
        y_std = 1.0
    return xc / halfwidth, (y - y_mean) / y_std, center, halfwidth, y_mean, y_std


def _sample_inverses(x: np.ndarray) -> np.ndarray:
    """Lambda_i = (x_i x_i^T + (1/n) I + (1/n) sum_j x_j x_j^T)^(-1), batched."""
    n, d = x.shape
    shared = (np.eye(d) + x.T @ x) / n
    mats = x[:, :, np.newaxis] * x[:, np.newaxis, :] + shared
    try:
        return np.linalg.inv(mats)
    except np.linalg.LinAlgError:
        mats = mats + 1e-8 * np.eye(d)
        try:
            return np.linalg.inv(mats)
        except np.linalg.LinAlgError as exc:
            raise NumericError("per-sample matrix inversion failed despite jitter") from exc


def fit_convex(x: np.ndarray, y: np.ndarray, cfg: AdmmConfig) -> PiecewiseLinearModel:
    """Fit a convex max-affine function by 2-block ADMM with averaged iterates."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, np.newaxis]
    n, d = x.shape
    if n < 2:
        raise InvalidInputError("fit_convex needs n >= 2 samples")
    if n < d or d < 1:
        raise InvalidInputError(f"need n >= d >= 1, got n={n}, d={d}")
    if y.shape != (n,) or not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
        raise InvalidInputError("x and y must be finite with matching lengths")
    rho, iters = cfg.resolve(n, d)

    xs, ys, center, halfwidth, y_mean, y_std = _standardize(x, y)
    lam = _sample_inverses(xs)                     # (n, d, d)
    lam_x = np.einsum("nij,nj->ni", lam, xs)       # Lambda_i x_i
    quad = np.einsum("ni,ni->n", xs, lam_x)        # x_i^T Lambda_i x_i
    lam_sum = lam.mean(axis=0)                     # (1/n) sum_k Lambda_k
    # Omega_ij = (2/(n^2 rho) + 2 - quad_i) 1(i=j) - D_ij / n
    a1 = lam_x @ xs.T                              # x_i^T Lambda_i x_j
    dmat = a1 + a1.T + xs @ lam_sum @ xs.T - quad[np.newaxis, :] \
        - (xs @ lam_x.sum(axis=0))[np.newaxis, :] / n
    omega = np.diag(2.0 / (n * n * rho) + 2.0 - quad) - dmat / n
    try:
        omega_lu = lu_factor(omega)
    except Exception as exc:  # singular Omega: rho pathologically large/small
        raise NumericError("Omega factorization failed") from exc

    yhat = np.zeros(n)
    s = np.zeros((n, n))
    alpha = np.zeros((n, n))
    a = np.zeros((n, d))
    p_plus = np.zeros((n, d))
    p_minus = np.zeros((n, d))
    eta = np.zeros((n, d))
    gamma = np.zeros((n, d))
    big_l = np.zeros(d)
    a_avg = np.zeros((n, d))
    yhat_avg = np.zeros(n)
    ratio = cfg.reg / rho
    y_term = 2.0 * ys / (n * n * rho)

    for _ in range(iters):
        # block 1: yhat then a (the joint minimizer solved via Omega)
        w = alpha + s
        theta = (p_plus - p_minus - eta + w.sum(axis=1)[:, np.newaxis] * xs - w @ xs) / n
        lam_theta = np.einsum("nij,nj->ni", lam, theta)
        v = np.einsum("ni,ni->n", xs, lam_theta) + xs @ lam_theta.sum(axis=0) / n \
            - np.einsum("ni,ni->", xs, lam_theta) / n
        beta = (w - w.T).sum(axis=1) / n
        yhat = lu_solve(omega_lu, y_term + v - beta)
        b_vec = theta + yhat[:, np.newaxis] * xs + ((yhat @ xs) / n)[np.newaxis, :]
        a = np.einsum("nij,nj->ni", lam, b_vec)
        # block 2: L by exact line search, then the clamp variables
        abs_ea = np.abs(eta + a)
        for dim in range(d):
            big_l[dim] = l_update(gamma[:, dim], abs_ea[:, dim], ratio)
        resid = yhat[:, np.newaxis] - yhat[np.newaxis, :] \
            - (np.einsum("ni,ni->n", a, xs)[:, np.newaxis] - a @ xs.T)
        s = np.maximum(-alpha - resid, 0.0)
        slack = big_l[np.newaxis, :] - gamma - abs_ea
        u = np.maximum(slack, 0.0)
        base = big_l[np.newaxis, :] - gamma - u
        p_plus = 0.5 * np.maximum(base + eta + a, 0.0)
        p_minus = 0.5 * np.maximum(base - eta - a, 0.0)
        # dual ascent on the three constraint groups
        alpha = alpha + resid + s
        gamma = gamma + u + p_plus + p_minus - big_l[np.newaxis, :]
        eta = eta + a - p_plus + p_minus
        a_avg += a
        yhat_avg += yhat

    a_avg /= iters
    yhat_avg /= iters
    objective = float(np.mean((yhat_avg - ys) ** 2) + cfg.reg * np.abs(a_avg).max(axis=0).sum())
    return PiecewiseLinearModel(
        anchors=xs, slopes=a_avg, offsets=yhat_avg, sign="convex",
        center=center, halfwidth=halfwidth, y_mean=y_mean, y_std=y_std,
        train_objective=objective,
    )


def fit_concave(x: np.ndarray, y: np.ndarray, cfg: AdmmConfig) -> PiecewiseLinearModel:
    """Fit a concave function by negating targets; predictions negate back."""
    model = fit_convex(x, -np.asarray(y, dtype=float), cfg)
    model.sign = "concave"
    return model


def tune_reg(x: np.ndarray, y: np.ndarray, grid_policy=REG_GRID, seed: int = 0,
             folds: int = 5, iters: int | None = None) -> float:
    """Pick reg by K-fold cross-validated MSE over a deterministic log grid.

    Grid values below the consistency lower bound are clamped up to it.
    Ties resolve to the smallest reg, and a fixed seed fixes the folds, so
    the selection is reproducible.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, np.newaxis]
    n, d = x.shape
    if n < 10:
        raise InvalidInputError("tune_reg needs n >= 10")
    lo, hi, count = grid_policy
    grid = np.unique(np.maximum(np.geomspace(lo, hi, int(count)), reg_lower_bound(n, d)))
    perm = make_rng(seed, 0xCF1).permutation(n)
    fold_ids = np.arange(n) % folds
    scores = np.zeros(grid.size)
    for gi, reg in enumerate(grid):
        mse = 0.0
        for f in range(folds):
            test = perm[fold_ids == f]
            train = perm[fold_ids != f]
            cfg = AdmmConfig(reg=float(reg), iters=iters, seed=seed)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = fit_convex(x[train], y[train], cfg)
            pred = model.predict_batch(x[test])
            mse += float(np.mean((pred - y[test]) ** 2))
        scores[gi] = mse / folds
    return float(grid[int(np.argmin(scores))])
