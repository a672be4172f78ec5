"""Sparse variational Gaussian-process regression for the continuation risk.

RBF kernel, inducing points sampled from the training data (not optimized),
Gaussian likelihood, and a free-form Gaussian variational posterior
q(f_z) = N(mu, Sigma) with Sigma parameterized by a lower-triangular factor
whose diagonal passes through a softplus. The minibatch objective is

    ELBO = (M_total / B) * sum_i [ log N(y_i | m_i, eta2) - v_i / (2 eta2) ]
           - KL[q(f_z) || p(f_z)],

with m = K_xz K_zz^-1 mu and v the marginal predictive variances. All
gradients are analytic (no autodiff); predictions use the mean
K_newZ K_zz^-1 mu. Targets are standardized inside fit_gp and predictions
unscaled on output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .errors import InvalidInputError, NumericError
from .rng import make_rng

JITTER_START = 1e-8
JITTER_MAX = 1e-4
LENGTH_FLOOR = 1e-3
NOISE_FLOOR = 1e-6
GRAD_CLIP = 10.0     # max norm of each per-datapoint gradient block
HYPER_LR_MULT = 0.1  # hyperparameters move slower than the variational terms


def _softplus(x):
    x = np.asarray(x, dtype=float)
    return np.where(x > 30.0, x, np.log1p(np.exp(np.minimum(x, 30.0))))


def _softplus_inv(y):
    y = np.asarray(y, dtype=float)
    return np.where(y > 30.0, y, np.log(np.expm1(np.maximum(y, 1e-300))))


def _sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d2 = (a * a).sum(axis=1)[:, np.newaxis] + (b * b).sum(axis=1)[np.newaxis, :] - 2.0 * a @ b.T
    return np.maximum(d2, 0.0)


def rbf_kernel(s: np.ndarray, s2: np.ndarray, sigma2: float, lengthscale: float) -> float:
    """k(s, s') = sigma2 exp(-||s - s'||^2 / (2 l^2))."""
    if lengthscale <= 0:
        raise InvalidInputError("lengthscale must be > 0")
    diff = np.asarray(s, dtype=float) - np.asarray(s2, dtype=float)
    return float(sigma2 * np.exp(-(diff @ diff) / (2.0 * lengthscale**2)))


def _kern(a: np.ndarray, b: np.ndarray, sigma2: float, length: float) -> np.ndarray:
    return sigma2 * np.exp(-_sqdist(a, b) / (2.0 * length**2))


def stable_cholesky(mat: np.ndarray, jitter: float = JITTER_START):
    """Cholesky with escalating diagonal jitter; raises NumericError past 1e-4."""
    scale = float(np.mean(np.diag(mat)))
    while jitter <= JITTER_MAX:
        try:
            low = np.linalg.cholesky(mat + jitter * scale * np.eye(mat.shape[0]))
            return low, jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericError(f"Cholesky failed up to jitter {JITTER_MAX}")


@dataclass
class GPModel:
    """Fitted sparse GP with cached K_zz solve of the variational mean."""

    inducing: np.ndarray       # (I, d)
    mu: np.ndarray             # (I,), standardized target space
    cov_chol: np.ndarray       # (I, I) lower-tri factor of Sigma
    log_sigma2: float
    log_length: float
    log_noise2: float
    y_mean: float = 0.0
    y_std: float = 1.0
    jitter: float = JITTER_START
    alpha: np.ndarray | None = None   # cached (K_zz + jitter I)^-1 mu
    elbo_trace: list = field(default_factory=list)

    @property
    def sigma2(self) -> float:
        return float(np.exp(self.log_sigma2))

    @property
    def length(self) -> float:
        return float(np.exp(self.log_length))

    @property
    def noise2(self) -> float:
        return float(np.exp(self.log_noise2))

    def kzz(self) -> np.ndarray:
        k = _kern(self.inducing, self.inducing, self.sigma2, self.length)
        scale = float(np.mean(np.diag(k)))
        return k + self.jitter * scale * np.eye(k.shape[0])

    def refresh_cache(self) -> None:
        kern = _kern(self.inducing, self.inducing, self.sigma2, self.length)
        low, _ = stable_cholesky(kern, self.jitter)
        self.alpha = cho_solve((low, True), self.mu)

    def predict_mean_batch(self, x: np.ndarray) -> np.ndarray:
        if self.alpha is None:
            self.refresh_cache()
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return _kern(x, self.inducing, self.sigma2, self.length) @ self.alpha * self.y_std + self.y_mean

    def predict_mean(self, x: np.ndarray) -> float:
        return float(self.predict_mean_batch(np.asarray(x, dtype=float)[np.newaxis])[0])

    # uniform regressor interface shared with the piecewise-linear model
    predict_batch = predict_mean_batch
    predict = predict_mean

    def to_dict(self) -> dict:
        return {
            "type": "gp", "inducing": self.inducing.tolist(), "mu": self.mu.tolist(),
            "cov_chol": self.cov_chol.tolist(), "log_sigma2": self.log_sigma2,
            "log_length": self.log_length, "log_noise2": self.log_noise2,
            "y_mean": self.y_mean, "y_std": self.y_std, "jitter": self.jitter,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GPModel":
        model = cls(
            inducing=np.asarray(doc["inducing"], dtype=float),
            mu=np.asarray(doc["mu"], dtype=float),
            cov_chol=np.asarray(doc["cov_chol"], dtype=float),
            log_sigma2=float(doc["log_sigma2"]), log_length=float(doc["log_length"]),
            log_noise2=float(doc["log_noise2"]), y_mean=float(doc["y_mean"]),
            y_std=float(doc["y_std"]), jitter=float(doc["jitter"]),
        )
        model.refresh_cache()
        return model


def _elbo_core(z, mu, cov_l, log_sigma2, log_length, log_noise2, xb, ysb, msc,
               jitter, want_grads=False):
    """ELBO (standardized targets) and analytic gradients.

    Gradients are with respect to mu, the lower-tri factor entries of Sigma,
    and the three log hyperparameters. Raises NumericError if K_zz is not
    positive definite at the fixed jitter.
    """
    sigma2 = float(np.exp(log_sigma2))
    length = float(np.exp(log_length))
    eta2 = float(np.exp(log_noise2))
    nb = xb.shape[0]
    ind = z.shape[0]

    dzz = _sqdist(z, z)
    kzz_kern = sigma2 * np.exp(-dzz / (2.0 * length**2))
    scale = float(np.mean(np.diag(kzz_kern)))
    kzz = kzz_kern + jitter * scale * np.eye(ind)
    try:
        lz = np.linalg.cholesky(kzz)
    except np.linalg.LinAlgError as exc:
        raise NumericError("K_zz Cholesky failed") from exc

    dxz = _sqdist(xb, z)
    bmat = sigma2 * np.exp(-dxz / (2.0 * length**2))
    wmat = cho_solve((lz, True), bmat.T).T            # B K_zz^-1
    m = wmat @ mu
    r = ysb - m
    sig = cov_l @ cov_l.T
    pmat = wmat @ sig
    v = sigma2 - np.einsum("ij,ij->i", wmat, bmat) + np.einsum("ij,ij->i", pmat, wmat)

    amu = cho_solve((lz, True), mu)
    asig = cho_solve((lz, True), sig)
    logdet_kzz = 2.0 * float(np.sum(np.log(np.diag(lz))))
    logdet_sig = 2.0 * float(np.sum(np.log(np.abs(np.diag(cov_l)))))
    kl = 0.5 * (np.trace(asig) + mu @ amu - ind + logdet_kzz - logdet_sig)
    ll_sum = -0.5 * nb * np.log(2.0 * np.pi * eta2) - (r @ r + v.sum()) / (2.0 * eta2)
    value = float(msc * ll_sum - kl)
    if not want_grads:
        return value, None

    amat = cho_solve((lz, True), np.eye(ind))
    grad_mu = (msc / eta2) * (wmat.T @ r) - amu
    sig_inv = cho_solve((np.linalg.cholesky(sig + 1e-12 * np.eye(ind)), True), np.eye(ind))
    g_sig = -(msc / (2.0 * eta2)) * (wmat.T @ wmat) - 0.5 * amat + 0.5 * sig_inv
    grad_cov_l = np.tril(2.0 * g_sig @ cov_l)

    w_coef = -msc / (2.0 * eta2)
    grad_b = msc * ((1.0 / eta2) * np.outer(r, amu) + (1.0 / eta2) * (wmat - pmat @ amat))
    mb = w_coef * (bmat.T @ bmat)
    t_a = (msc / eta2) * np.outer(bmat.T @ r, mu) \
        + (-mb + mb @ amat @ sig + sig @ amat @ mb) \
        - 0.5 * (sig + np.outer(mu, mu))
    grad_kzz = -amat @ t_a @ amat - 0.5 * amat

    grad_log_sigma2 = float(np.sum(grad_kzz * kzz_kern) + np.sum(grad_b * bmat)
                            + nb * w_coef * sigma2)
    grad_log_length = float(np.sum(grad_kzz * (kzz_kern * dzz)) / length**2
                            + np.sum(grad_b * (bmat * dxz)) / length**2)
    grad_log_noise2 = float(msc * (-0.5 * nb + (r @ r + v.sum()) / (2.0 * eta2)))
    grads = {
        "mu": grad_mu, "cov_l": grad_cov_l, "log_sigma2": grad_log_sigma2,
        "log_length": grad_log_length, "log_noise2": grad_log_noise2,
    }
    return value, grads


def elbo(model: GPModel, xb: np.ndarray, yb: np.ndarray, m_total: int) -> float:
    """Minibatch evidence lower bound at the model's parameters."""
    xb = np.atleast_2d(np.asarray(xb, dtype=float))
    yb = np.asarray(yb, dtype=float)
    if xb.shape[0] == 0:
        raise InvalidInputError("elbo needs a nonempty batch")
    ysb = (yb - model.y_mean) / model.y_std
    msc = m_total / xb.shape[0]
    value, _ = _elbo_core(model.inducing, model.mu, model.cov_chol, model.log_sigma2,
                          model.log_length, model.log_noise2, xb, ysb, msc, model.jitter)
    return value


def kl_divergence(model: GPModel) -> float:
    """KL[q(f_z) || p(f_z)] of the variational posterior from the prior."""
    ind = model.inducing.shape[0]
    lz = np.linalg.cholesky(model.kzz())
    sig = model.cov_chol @ model.cov_chol.T
    asig = cho_solve((lz, True), sig)
    amu = cho_solve((lz, True), model.mu)
    logdet_kzz = 2.0 * float(np.sum(np.log(np.diag(lz))))
    logdet_sig = 2.0 * float(np.sum(np.log(np.abs(np.diag(model.cov_chol)))))
    return float(0.5 * (np.trace(asig) + model.mu @ amu - ind + logdet_kzz - logdet_sig))


def _optimal_variational_init(z, xs, ys, sigma2, length, eta2, jitter):
    """Analytically optimal (mu, Sigma) for fixed hyperparameters."""
    kzz = _kern(z, z, sigma2, length)
    scale = float(np.mean(np.diag(kzz)))
    kzz = kzz + jitter * scale * np.eye(z.shape[0])
    kzx = _kern(z, xs, sigma2, length)
    sb = kzz + (kzx @ kzx.T) / eta2
    cb = cho_factor(sb, lower=True)
    mu = kzz @ cho_solve(cb, kzx @ ys) / eta2
    sig = kzz @ cho_solve(cb, kzz)
    sig = 0.5 * (sig + sig.T)
    # the exact optimum can be numerically singular; a small ridge keeps the
    # Sigma^-1 term in later gradient steps from blowing up
    sig += 1e-4 * scale * np.eye(z.shape[0])
    low, _ = stable_cholesky(sig, 1e-10)
    return mu, low


def fit_gp(x: np.ndarray, y: np.ndarray, n_inducing: int = 200, epochs: int = 30,
           batch: int = 2000, seed: int = 0, step: float = 1e-2) -> GPModel:
    """Fit by gradient ascent on the minibatch ELBO.

    Inducing points are a seeded random subset of the inputs. The variational
    (mu, Sigma) start at their analytic optimum for the initial
    hyperparameters, then everything is optimized jointly with a fixed-step
    schedule (cosine decay). Hyperparameter floors: l >= 1e-3, eta2 >= 1e-6.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    m_total, d = x.shape
    if m_total < 1 or y.shape != (m_total,):
        raise InvalidInputError("x and y must be nonempty with matching lengths")
    n_inducing = max(1, min(n_inducing, m_total))

    y_mean = float(y.mean())
    y_std = float(y.std())
    if y_std < 1e-12:
        y_std = 1.0
    ys = (y - y_mean) / y_std

    rng = make_rng(seed, 0x6B0)
    # duplicated inducing rows add no capacity and make K_zz singular
    uniq = np.unique(x, axis=0)
    n_inducing = min(n_inducing, uniq.shape[0])
    idx = np.sort(rng.choice(uniq.shape[0], size=n_inducing, replace=False))
    z = uniq[idx].copy()

    sub = x[np.sort(rng.choice(m_total, size=min(256, m_total), replace=False))]
    d2 = _sqdist(sub, sub)
    pos = d2[d2 > 0]
    length = float(np.sqrt(np.median(pos))) if pos.size else 1.0
    length = max(length, LENGTH_FLOOR)
    sigma2 = 1.0
    eta2 = 0.1

    kzz0 = _kern(z, z, sigma2, length)
    lz0, jitter = stable_cholesky(kzz0)
    mu, cov_l = _optimal_variational_init(z, x, ys, sigma2, length, eta2, jitter)
    # restart the noise at the residual scale of this first fit; noiseless
    # targets then begin near interpolation instead of crawling down from
    # an arbitrary level, while noisy targets keep a realistic floor
    pred0 = _kern(x, z, sigma2, length) @ cho_solve((lz0, True), mu)
    eta2 = float(np.clip(np.mean((ys - pred0) ** 2), 1e-5, 1.0))
    mu, cov_l = _optimal_variational_init(z, x, ys, sigma2, length, eta2, jitter)

    log_sigma2 = float(np.log(sigma2))
    log_length = float(np.log(length))
    log_noise2 = float(np.log(eta2))
    raw_diag = _softplus_inv(np.maximum(np.diag(cov_l), 1e-8))
    cov_l = np.tril(cov_l, -1) + np.diag(_softplus(raw_diag))

    eval_n = min(batch, m_total)
    trace = []
    batches = [(lo, min(lo + batch, m_total)) for lo in range(0, m_total, batch)]
    total_steps = max(1, epochs * len(batches))
    step_no = 0
    for epoch in range(epochs):
        perm = make_rng(seed, 0xE50C, epoch).permutation(m_total)
        for lo, hi in batches:
            take = perm[lo:hi]
            msc = m_total / take.size
            lr = step * 0.5 * (1.0 + np.cos(np.pi * step_no / total_steps))
            step_no += 1
            while True:
                try:
                    _, grads = _elbo_core(z, mu, cov_l, log_sigma2, log_length,
                                          log_noise2, x[take], ys[take], msc,
                                          jitter, want_grads=True)
                    break
                except NumericError:
                    if jitter >= JITTER_MAX:
                        raise
                    jitter *= 10.0
            # ascent on the per-datapoint objective keeps steps O(1); clip
            # each block on its own so one exploding block (typically the
            # Sigma factor near interpolation) cannot freeze the others
            unit = 1.0 / m_total
            grad_raw = np.tril(grads["cov_l"], -1) \
                + np.diag(np.diag(grads["cov_l"]) * _sigmoid(raw_diag))

            def clipped(g):
                gnorm = unit * float(np.sqrt(np.sum(g * g)))
                return g * (min(1.0, GRAD_CLIP / max(gnorm, 1e-300)) * unit)

            mu = mu + lr * clipped(grads["mu"])
            raw_step = lr * clipped(grad_raw)
            raw_off = np.tril(cov_l, -1) + np.tril(raw_step, -1)
            raw_diag = raw_diag + np.diag(raw_step)
            cov_l = raw_off + np.diag(_softplus(raw_diag))
            hlr = lr * HYPER_LR_MULT
            log_sigma2 += hlr * float(clipped(np.asarray(grads["log_sigma2"])))
            log_length += hlr * float(clipped(np.asarray(grads["log_length"])))
            log_noise2 += hlr * float(clipped(np.asarray(grads["log_noise2"])))
            log_length = max(log_length, float(np.log(LENGTH_FLOOR)))
            log_noise2 = max(log_noise2, float(np.log(NOISE_FLOOR)))
        val, _ = _elbo_core(z, mu, cov_l, log_sigma2, log_length, log_noise2,
                            x[:eval_n], ys[:eval_n], m_total / eval_n, jitter)
        trace.append(val)

    model = GPModel(inducing=z, mu=mu, cov_chol=cov_l, log_sigma2=log_sigma2,
                    log_length=log_length, log_noise2=log_noise2, y_mean=y_mean,
                    y_std=y_std, jitter=jitter, elbo_trace=trace)
    model.refresh_cache()
    return model


def _sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    expx = np.exp(x[~pos])
    out[~pos] = expx / (1.0 + expx)
    return out
