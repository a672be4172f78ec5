"""Backward-induction fitting and deployment of learned stopping policies.

The continuation value at step t is regressed on the step-t posterior with
either the convex-function-learning regressor or the sparse GP. Labels are
built backward from the horizon: the step-T value is the stopping risk, and
each earlier value is min(stopping risk, predicted continuation + cost).
Regressors store the raw conditional expectation; the per-step cost is added
at prediction time. Deployment stops at the first step where the stopping
risk is <= the predicted continuation risk (ties stop), with a forced stop
at the horizon.

Decisions depend on (penalty, cost) only through their ratio, so fitting and
deployment run in penalty-normalized units (divide both by mean penalty).
Joint rescaling (alpha L, alpha c) then reproduces the identical regression
problem bit for bit and the deployed decisions are exactly invariant.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import cfl as _cfl
from . import gp as _gp
from .errors import DataIOError, InvalidInputError
from .rng import make_rng
from .stats import RiskParams, Trajectory, check_posterior

POLICY_FORMAT = "firmbound-policy"
POLICY_VERSION = 1

DEFAULT_SUBSAMPLE = 800
DEFAULT_CFL_SUBSAMPLE = 300
DEFAULT_CFL_REG = 1e-2
DEFAULT_CFL_RHO = 1e-5
DEFAULT_CFL_ITERS = 2000
DEFAULT_GP_INDUCING = 200
DEFAULT_GP_EPOCHS = 3
DEFAULT_GP_BATCH = 2000
STRATIFY_BINS = 100


def normalized_params(params: RiskParams) -> RiskParams:
    """Divide penalty and cost by the mean penalty.

    x / x == 1 exactly in IEEE arithmetic, so uniform penalties normalize to
    exact ones and jointly rescaled (alpha L, alpha c) inputs map to the same
    normalized parameters whenever the products alpha L and alpha c are exact.
    """
    norm = float(np.mean(params.penalty))
    if norm <= 0.0:
        raise InvalidInputError("penalty must have a positive mean")
    return RiskParams(params.penalty / norm, params.cost / norm, params.priors)


def stopping_risk_batch(pis: np.ndarray, params: RiskParams) -> np.ndarray:
    """min_k penalty_k (1 - pi_k) for each posterior row."""
    pis = np.atleast_2d(np.asarray(pis, dtype=float))
    if pis.shape[-1] != params.K:
        raise InvalidInputError("posterior dimension does not match params")
    return (params.penalty[np.newaxis, :] * (1.0 - pis)).min(axis=-1)


def stopping_risk(pi: np.ndarray, params: RiskParams) -> float:
    check_posterior(np.asarray(pi, dtype=float))
    return float(stopping_risk_batch(np.asarray(pi)[np.newaxis], params)[0])


def terminal_decision_batch(pis: np.ndarray, params: RiskParams) -> np.ndarray:
    """1-based argmin of the conditional risk; ties go to the lowest class."""
    pis = np.atleast_2d(np.asarray(pis, dtype=float))
    return np.argmin(params.penalty[np.newaxis, :] * (1.0 - pis), axis=-1) + 1


def _fit_step(x, y, method, seed, cfl_config, gp_inducing, gp_epochs, gp_batch):
    if method == "cfl":
        return _cfl.fit_concave(x, y, cfl_config)
    if method == "gp":
        return _gp.fit_gp(x, y, n_inducing=gp_inducing, epochs=gp_epochs,
                          batch=gp_batch, seed=seed)
    raise InvalidInputError(f"unknown method {method!r}")


@dataclass
class StoppingPolicy:
    """Time-indexed continuation-risk regressors plus the risk parameters.

    models[t-1] predicts E[value at t+1 | posterior at t] for t = 1..T-1
    (raw expectation, standardized internally by each regressor; the
    observation cost is added in gtilde_batch).
    """

    params: RiskParams
    horizon: int
    method: str
    models: list
    fit_log: list = field(default_factory=list)
    dataset_hash: str | None = None
    meta: dict = field(default_factory=dict)

    @property
    def work_params(self) -> RiskParams:
        """Penalty-normalized parameters; the models predict in these units."""
        work = getattr(self, "_work_params", None)
        if work is None:
            work = normalized_params(self.params)
            object.__setattr__(self, "_work_params", work)
        return work

    @property
    def scale(self) -> float:
        """Mean penalty; multiplies model outputs back to original units."""
        return float(np.mean(self.params.penalty))

    def gtilde_batch(self, pis: np.ndarray, t: int) -> np.ndarray:
        """Predicted continuation risk at step t in original risk units."""
        if not 1 <= t <= self.horizon - 1:
            raise InvalidInputError(f"no continuation model for step {t}")
        model = self.models[t - 1]
        raw = model.predict_batch(np.atleast_2d(np.asarray(pis, dtype=float)))
        return (raw + self.work_params.cost) * self.scale

    def stop_batch(self, pis: np.ndarray, t: int) -> np.ndarray:
        """Stop decisions at step t; computed in normalized units, ties stop."""
        if not 1 <= t <= self.horizon - 1:
            raise InvalidInputError(f"no continuation model for step {t}")
        work = self.work_params
        pis = np.atleast_2d(np.asarray(pis, dtype=float))
        gst = stopping_risk_batch(pis, work)
        raw = self.models[t - 1].predict_batch(pis)
        return gst <= raw + work.cost

    def deploy_batch(self, posteriors: np.ndarray):
        """Run the stopping rule on (M, T, K) posterior paths.

        Returns (classes, taus, forced) arrays; classes are 1-based.
        """
        post = np.asarray(posteriors, dtype=float)
        if post.ndim != 3 or post.shape[1] != self.horizon or post.shape[2] != self.params.K:
            raise InvalidInputError("posteriors must be (M, horizon, K)")
        m = post.shape[0]
        taus = np.full(m, self.horizon, dtype=np.int64)
        forced = np.ones(m, dtype=bool)
        open_mask = np.ones(m, dtype=bool)
        for t in range(1, self.horizon):
            if not open_mask.any():
                break
            pis = post[open_mask, t - 1]
            stop = self.stop_batch(pis, t)
            idx = np.flatnonzero(open_mask)[stop]
            taus[idx] = t
            forced[idx] = False
            open_mask[idx] = False
        classes = terminal_decision_batch(post[np.arange(m), taus - 1],
                                          self.work_params)
        return classes, taus, forced

    def deploy(self, traj: Trajectory):
        post = traj.stats if traj.kind == "posterior" else None
        if post is None:
            raise InvalidInputError("deploy expects a posterior trajectory")
        cls, tau, force = self.deploy_batch(post[np.newaxis])
        return int(cls[0]), int(tau[0]), bool(force[0])

    def to_json(self) -> str:
        doc = {
            "format": POLICY_FORMAT, "version": POLICY_VERSION,
            "method": self.method, "horizon": self.horizon,
            "params": {
                "penalty": self.params.penalty.tolist(),
                "cost": self.params.cost,
                "priors": self.params.priors.tolist(),
            },
            "models": [m.to_dict() for m in self.models],
            "fit_log": self.fit_log, "dataset_hash": self.dataset_hash,
            "meta": self.meta,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "StoppingPolicy":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataIOError(f"policy JSON is malformed: {exc}") from exc
        if doc.get("format") != POLICY_FORMAT:
            raise DataIOError("not a stopping-policy document")
        if doc.get("version") != POLICY_VERSION:
            raise DataIOError(f"unsupported policy version {doc.get('version')!r}")
        params = RiskParams(
            penalty=np.asarray(doc["params"]["penalty"], dtype=float),
            cost=float(doc["params"]["cost"]),
            priors=np.asarray(doc["params"]["priors"], dtype=float),
        )
        models = []
        for entry in doc["models"]:
            if entry.get("type") == "cfl":
                models.append(_cfl.PiecewiseLinearModel.from_dict(entry))
            elif entry.get("type") == "gp":
                models.append(_gp.GPModel.from_dict(entry))
            else:
                raise DataIOError(f"unknown model type {entry.get('type')!r}")
        return cls(params=params, horizon=int(doc["horizon"]), method=doc["method"],
                   models=models, fit_log=list(doc.get("fit_log", [])),
                   dataset_hash=doc.get("dataset_hash"), meta=dict(doc.get("meta", {})))

    def save(self, path) -> None:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(self.to_json())
        except OSError as exc:
            raise DataIOError(f"cannot write policy to {path}: {exc}") from exc

    @classmethod
    def load(cls, path) -> "StoppingPolicy":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataIOError(f"cannot read policy from {path}: {exc}") from exc
        return cls.from_json(text)


def _stratified_take(gst: np.ndarray, n_fit: int, rng,
                     bins: int | None = None) -> np.ndarray:
    """Round-robin subsample across equal-width stopping-risk bins.

    Posterior paths pile up near the simplex corners where the stopping risk
    is ~0, so a uniform draw starves the decision boundary of training
    points. Cycling through nonempty risk bins, one shuffled index at a time,
    equalizes coverage across risk levels.
    """
    if bins is None:
        bins = STRATIFY_BINS
    m = gst.size
    top = float(gst.max())
    if top <= 0.0:
        return np.sort(rng.choice(m, size=n_fit, replace=False))
    edges = np.linspace(0.0, top, bins + 1)
    which = np.clip(np.digitize(gst, edges) - 1, 0, bins - 1)
    order = rng.permutation(m)
    rank = np.empty(m, dtype=np.int64)
    for b in range(bins):
        members = order[which[order] == b]
        rank[members] = np.arange(members.size)
    # sorting by (rank within bin, bin index) visits the bins in rotation
    chosen = np.argsort(rank * bins + which, kind="stable")[:n_fit]
    return np.sort(chosen)


def build_labels(next_posteriors: np.ndarray, next_continuation: np.ndarray | None,
                 params: RiskParams) -> np.ndarray:
    """Regression targets: min(stopping risk, continuation) at the next step.

    next_continuation already includes the cost term; pass None at the
    horizon, where only stopping is possible.
    """
    gst = stopping_risk_batch(next_posteriors, params)
    if next_continuation is None:
        return gst
    return np.minimum(gst, np.asarray(next_continuation, dtype=float))


def fit_policy(posteriors: np.ndarray, params: RiskParams, method: str = "cfl",
               seed: int = 0, subsample: int | None = None,
               cfl_config: "_cfl.AdmmConfig | None" = None,
               gp_inducing: int = DEFAULT_GP_INDUCING,
               gp_epochs: int = DEFAULT_GP_EPOCHS,
               gp_batch: int = DEFAULT_GP_BATCH,
               dataset_hash: str | None = None) -> StoppingPolicy:
    """Fit the T-1 continuation-risk regressors by backward induction.

    posteriors: (M, T, K) training paths. Each step's regressor is trained on
    a seeded subsample stratified by stopping risk (so the decision boundary
    is not drowned out by near-corner mass) but its predictions propagate
    through the full set, so later (earlier-step) labels see all M paths.
    Labels live in penalty-normalized units, making the fit invariant to
    joint (L, c) scaling. subsample None picks a per-method default sized to
    the regressor's cost curve.
    """
    post = np.asarray(posteriors, dtype=float)
    if post.ndim != 3:
        raise InvalidInputError("posteriors must be (M, T, K)")
    m, horizon, k = post.shape
    if k != params.K:
        raise InvalidInputError("posterior dimension does not match params")
    if horizon < 2:
        raise InvalidInputError("horizon must be >= 2 to learn a policy")
    if m < 2:
        raise InvalidInputError("need at least 2 training paths")
    work = normalized_params(params)

    if subsample is None:
        subsample = DEFAULT_CFL_SUBSAMPLE if method == "cfl" else DEFAULT_SUBSAMPLE
    n_fit = min(subsample, m)
    if method == "cfl" and cfl_config is None:
        # small reg keeps the boundary pieces steep; the small fixed step
        # size converges far faster here than the solver's n-scaled default
        cfl_config = _cfl.AdmmConfig(reg=DEFAULT_CFL_REG, rho=DEFAULT_CFL_RHO,
                                     iters=DEFAULT_CFL_ITERS, seed=seed)

    models: list = [None] * (horizon - 1)
    fit_log: list = []
    values = stopping_risk_batch(post[:, horizon - 1], work)
    for t in range(horizon - 1, 0, -1):
        xs_all = post[:, t - 1]
        if n_fit < m:
            take = _stratified_take(stopping_risk_batch(xs_all, work), n_fit,
                                    make_rng(seed, 0xF17, t))
        else:
            take = np.arange(m)
        t0 = time.perf_counter()
        model = _fit_step(xs_all[take], values[take], method, seed, cfl_config,
                          gp_inducing, gp_epochs, gp_batch)
        seconds = time.perf_counter() - t0
        pred = model.predict_batch(xs_all[take])
        mse = float(np.mean((pred - values[take]) ** 2))
        fit_log.append({"step": t, "n": int(take.size), "mse": mse,
                        "seconds": round(seconds, 4)})
        models[t - 1] = model
        gtilde = model.predict_batch(xs_all) + work.cost
        values = build_labels(xs_all, gtilde, work)
    fit_log.reverse()

    return StoppingPolicy(params=params, horizon=horizon, method=method,
                          models=models, fit_log=fit_log, dataset_hash=dataset_hash,
                          meta={"subsample": n_fit, "seed": seed})
