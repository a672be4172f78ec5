"""Toy-scale sequential density-ratio estimation.

A linear-logit model maps a window of up to order+1 consecutive feature
vectors to K class logits; sub-windows of j samples use the trailing
j * d_feat weight columns. Pairwise LLR estimates come from the telescoping
window formula

    lam_kl(t) = sum_{s=N+1}^t [u_k - u_l](window s-N..s)
              - sum_{s=N+2}^t [u_k - u_l](window s-N..s-1)
              - log chi_kl,

where u are logits (log-posterior differences reduce to logit differences)
and chi_kl are empirical prior ratios. Training minimizes a weighted sum of
the windowed cross-entropy over all sub-window orders and the log-sum-exp
LLR loss, by full-batch gradient descent with analytic gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DegeneratePosteriorError, InvalidInputError, NumericError

__all__ = ["DREModel", "tandem_llr", "lsel_loss", "mce_loss", "train_dre"]


def _check_labels(labels: np.ndarray, k: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or not np.issubdtype(labels.dtype, np.integer):
        raise InvalidInputError("labels must be a 1-D integer array")
    if labels.min() < 1 or labels.max() > k:
        raise InvalidInputError("labels must lie in 1..K")
    return labels


def _windows(x: np.ndarray, size: int) -> np.ndarray:
    """All length-`size` windows, flattened: (M, T-size+1, size*d)."""
    m, horizon, d = x.shape
    view = np.lib.stride_tricks.sliding_window_view(x, size, axis=1)
    # view is (M, T-size+1, d, size); reorder so time-within-window is outer
    return np.ascontiguousarray(view.transpose(0, 1, 3, 2)).reshape(m, horizon - size + 1, size * d)


@dataclass
class DREModel:
    """Linear window-to-logits posterior model with empirical prior ratios."""

    weights: np.ndarray          # (K, (order+1) * d_feat)
    bias: np.ndarray             # (K,)
    order: int
    d_feat: int
    priors: np.ndarray           # (K,) empirical class frequencies
    loss_trace: list = field(default_factory=list)

    @property
    def K(self) -> int:
        return int(self.bias.shape[0])

    @property
    def chi(self) -> np.ndarray:
        return self.priors[:, np.newaxis] / self.priors[np.newaxis, :]

    def window_logits(self, win: np.ndarray, size: int) -> np.ndarray:
        """Logits for windows of `size` samples (uses trailing weight columns)."""
        if not 1 <= size <= self.order + 1:
            raise InvalidInputError(f"window size {size} outside 1..order+1")
        cols = size * self.d_feat
        win = np.asarray(win, dtype=float)
        if win.shape[-1] != cols:
            raise InvalidInputError(f"window has {win.shape[-1]} features, expected {cols}")
        return win @ self.weights[:, self.weights.shape[1] - cols:].T + self.bias

    def window_log_posterior(self, win: np.ndarray, size: int) -> np.ndarray:
        logits = self.window_logits(win, size)
        return logits - logsumexp(logits, axis=-1, keepdims=True)

    def llr_paths(self, x: np.ndarray) -> np.ndarray:
        """Estimated pairwise LLR matrices for feature paths (M, T, d_feat).

        Returns (M, T, K, K); steps t <= order carry zeros (no estimate yet,
        the induced posterior is the prior).
        """
        x = np.asarray(x, dtype=float)
        if x.ndim != 3 or x.shape[2] != self.d_feat:
            raise InvalidInputError("feature paths must be (M, T, d_feat)")
        m, horizon, _ = x.shape
        n = self.order
        if horizon < n + 1:
            raise InvalidInputError(f"horizon {horizon} < order+1 = {n + 1}")
        hi = self.window_logits(_windows(x, n + 1), n + 1)        # (M, T-n, K)
        a = np.cumsum(hi, axis=1)
        if n >= 1:
            # order-n windows ending at s-1 for s = n+2..t: ending index n+1..t-1
            lo = self.window_logits(_windows(x, n)[:, 1:horizon - n, :], n)
            b = np.concatenate([np.zeros((m, 1, self.K)), np.cumsum(lo, axis=1)], axis=1)
        else:
            logp = np.log(self.priors)
            steps = np.arange(horizon - n)[np.newaxis, :, np.newaxis]
            b = np.broadcast_to(logp[np.newaxis, np.newaxis, :] * steps,
                                (m, horizon - n, self.K))
        diff = a - b
        lam_valid = diff[..., :, np.newaxis] - diff[..., np.newaxis, :] \
            - np.log(self.chi)[np.newaxis, np.newaxis, :, :]
        lam = np.zeros((m, horizon, self.K, self.K))
        lam[:, n:] = lam_valid
        return lam

    def to_dict(self) -> dict:
        return {
            "type": "dre", "weights": self.weights.tolist(), "bias": self.bias.tolist(),
            "order": self.order, "d_feat": self.d_feat, "priors": self.priors.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DREModel":
        return cls(
            weights=np.asarray(doc["weights"], dtype=float),
            bias=np.asarray(doc["bias"], dtype=float),
            order=int(doc["order"]), d_feat=int(doc["d_feat"]),
            priors=np.asarray(doc["priors"], dtype=float),
        )


def tandem_llr(post_hi: np.ndarray, post_lo: np.ndarray, chi: np.ndarray) -> np.ndarray:
    """One LLR matrix from explicit window posteriors.

    post_hi: (t-N, K) posteriors of the order-(N+1) windows ending at
    N+1..t; post_lo: (t-N-1, K) posteriors of the order-N windows ending at
    N+1..t-1 (for N=0 pass repeated priors). chi is the prior-ratio matrix.
    """
    post_hi = np.atleast_2d(np.asarray(post_hi, dtype=float))
    post_lo = np.atleast_2d(np.asarray(post_lo, dtype=float)) if post_lo is not None \
        else np.empty((0, post_hi.shape[1]))
    if post_hi.shape[0] != post_lo.shape[0] + 1:
        raise InvalidInputError("need exactly one more high-order window than low-order")
    for block in (post_hi, post_lo):
        if block.size and (block <= 0).any():
            raise DegeneratePosteriorError("window posterior not strictly interior")
    a = np.log(post_hi).sum(axis=0)
    b = np.log(post_lo).sum(axis=0) if post_lo.size else np.zeros_like(a)
    diff = a - b
    return diff[:, np.newaxis] - diff[np.newaxis, :] - np.log(np.asarray(chi, dtype=float))


def _pair_losses(lam: np.ndarray, labels: np.ndarray):
    """Per-(i, t) LSEL terms and softmax weights over the competing classes.

    lam: (M, T', K, K) valid-step LLR matrices. Returns (loss (M, T'),
    weights (M, T', K)) where weights row w satisfies w_l = e^{-lam_kl}/Z for
    l != k and w_k = 0.
    """
    m, tp, k, _ = lam.shape
    rows = np.arange(m)
    lam_k = lam[rows, :, labels - 1, :]                 # (M, T', K)
    neg = -lam_k
    neg[rows, :, labels - 1] = -np.inf                  # exclude the true class
    with_zero = np.concatenate([np.zeros((m, tp, 1)), neg], axis=2)
    lse = logsumexp(with_zero, axis=2)                  # log(1 + sum exp)
    weights = np.exp(neg - lse[..., np.newaxis])
    return lse, weights


def lsel_loss(model: DREModel, x: np.ndarray, labels: np.ndarray) -> float:
    """Log-sum-exp LLR loss, class-balanced and averaged over valid steps."""
    x = np.asarray(x, dtype=float)
    labels = _check_labels(labels, model.K)
    lam = model.llr_paths(x)[:, model.order:]
    loss, _ = _pair_losses(lam, labels)
    per_i = loss.mean(axis=1)
    total = 0.0
    for cls in range(1, model.K + 1):
        mask = labels == cls
        if not mask.any():
            raise InvalidInputError(f"class {cls} missing from dataset")
        total += per_i[mask].mean()
    return float(total / model.K)


def mce_loss(model: DREModel, x: np.ndarray, labels: np.ndarray) -> float:
    """Windowed cross-entropy over all sub-window orders 1..order+1."""
    x = np.asarray(x, dtype=float)
    labels = _check_labels(labels, model.K)
    m, horizon, _ = x.shape
    n = model.order
    if horizon < n + 1:
        raise InvalidInputError(f"horizon {horizon} < order+1 = {n + 1}")
    for cls in range(1, model.K + 1):
        if not (labels == cls).any():
            raise InvalidInputError(f"class {cls} missing from dataset")
    rows = np.arange(m)
    total = 0.0
    for size in range(1, n + 2):
        # windows of `size` samples ending at t = size..T-(n+1-size)
        wins = _windows(x, size)[:, :horizon - n, :]
        logpi = model.window_log_posterior(wins, size)
        total += float(-logpi[rows, :, labels - 1].sum())
    return total / (m * (horizon - n))


def _combined_loss_and_grads(w_model, bias, order, priors, x, labels,
                             mce_w, lsel_w):
    """Losses and analytic gradients of mce_w * MCE + lsel_w * LSEL."""
    m, horizon, d = x.shape
    n = order
    k = bias.shape[0]
    width = w_model.shape[1]
    rows = np.arange(m)
    grad_w = np.zeros_like(w_model)
    grad_b = np.zeros_like(bias)

    # --- MCE over all sub-window orders
    mce = 0.0
    norm = 1.0 / (m * (horizon - n))
    for size in range(1, n + 2):
        cols = size * d
        wins = _windows(x, size)[:, :horizon - n, :]
        logits = wins @ w_model[:, width - cols:].T + bias
        logpi = logits - logsumexp(logits, axis=-1, keepdims=True)
        mce += float(-logpi[rows, :, labels - 1].sum()) * norm
        delta = np.exp(logpi)
        delta[rows, :, labels - 1] -= 1.0                  # softmax minus onehot
        delta *= mce_w * norm
        flat_d = delta.reshape(-1, k)
        grad_w[:, width - cols:] += flat_d.T @ wins.reshape(-1, cols)
        grad_b += flat_d.sum(axis=0)

    # --- LSEL on the telescoped LLRs
    tp = horizon - n
    hi_wins = _windows(x, n + 1)
    hi = hi_wins @ w_model.T + bias
    a = np.cumsum(hi, axis=1)
    if n >= 1:
        cols_lo = n * d
        lo_wins = _windows(x, n)[:, 1:tp, :]
        lo = lo_wins @ w_model[:, width - cols_lo:].T + bias
        b_cum = np.concatenate([np.zeros((m, 1, k)), np.cumsum(lo, axis=1)], axis=1)
    else:
        logp = np.log(priors)
        steps = np.arange(tp)[np.newaxis, :, np.newaxis]
        b_cum = np.broadcast_to(logp[np.newaxis, np.newaxis, :] * steps, (m, tp, k))
    diff = a - b_cum
    chi = priors[:, np.newaxis] / priors[np.newaxis, :]
    lam = diff[..., :, np.newaxis] - diff[..., np.newaxis, :] \
        - np.log(chi)[np.newaxis, np.newaxis, :, :]
    loss_it, wts = _pair_losses(lam, labels)

    counts = np.bincount(labels - 1, minlength=k).astype(float)
    if (counts == 0).any():
        raise InvalidInputError("every class must appear in the training set")
    lsel = float((loss_it.mean(axis=1) / (k * counts[labels - 1])).sum())

    # d loss(i,t) / d u_j of each contributing high-order window is
    # +w_j for j != label, -(sum_l w_l) at the label (logit differences).
    g = wts.copy()
    g[rows, :, labels - 1] = -wts.sum(axis=2)
    scale_i = lsel_w / (k * tp * counts[labels - 1])
    g *= scale_i[:, np.newaxis, np.newaxis]
    # window at valid index s contributes to every t >= s
    g_hi = np.cumsum(g[:, ::-1, :], axis=1)[:, ::-1, :]
    flat_g = g_hi.reshape(-1, k)
    grad_w += flat_g.T @ hi_wins.reshape(-1, (n + 1) * d)
    grad_b += flat_g.sum(axis=0)
    if n >= 1:
        # low-order window at lo-index u enters negatively for all t >= u+1
        g_lo = -g_hi[:, 1:, :]
        flat_lo = g_lo.reshape(-1, k)
        grad_w[:, width - n * d:] += flat_lo.T @ lo_wins.reshape(-1, n * d)
        grad_b += flat_lo.sum(axis=0)

    return mce, lsel, grad_w, grad_b


def train_dre(x: np.ndarray, labels: np.ndarray, order: int = 0,
              weights: tuple = (1.0, 0.8), epochs: int = 150, lr: float = 0.2,
              seed: int = 0) -> DREModel:
    """Fit the linear window model by full-batch gradient descent.

    weights = (mce_w, lsel_w). Zero epochs returns the (zero) initialization.
    Divergence to NaN raises NumericError naming the epoch.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 3:
        raise InvalidInputError("feature paths must be (M, T, d_feat)")
    m, horizon, d = x.shape
    if m < 1:
        raise InvalidInputError("dataset must be nonempty")
    if d > 8:
        raise InvalidInputError("d_feat > 8: this estimator is toy-scale only")
    if order < 0 or horizon < order + 1:
        raise InvalidInputError("need horizon >= order+1 and order >= 0")
    k = int(np.max(labels))
    labels = _check_labels(labels, k)
    counts = np.bincount(labels - 1, minlength=k).astype(float)
    if (counts == 0).any():
        raise InvalidInputError("every class in 1..max(label) must appear")
    priors = counts / counts.sum()
    mce_w, lsel_w = float(weights[0]), float(weights[1])

    wmat = np.zeros((k, (order + 1) * d))
    bias = np.zeros(k)
    trace = []
    for epoch in range(epochs):
        # gradients of the weighted sum; loss pieces reported separately
        mce, lsel, gw_m, gb_m = _combined_loss_and_grads(
            wmat, bias, order, priors, x, labels, mce_w, lsel_w)
        combined = mce_w * mce + lsel_w * lsel
        if not np.isfinite(combined):
            raise NumericError(f"training diverged at epoch {epoch}")
        trace.append({"epoch": epoch, "mce": mce, "lsel": lsel, "combined": combined})
        wmat = wmat - lr * gw_m
        bias = bias - lr * gb_m
    model = DREModel(weights=wmat, bias=bias, order=order, d_feat=d,
                     priors=priors, loss_trace=trace)
    return model
