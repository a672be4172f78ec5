"""Evaluation: deploy stoppers on datasets, exact lattice oracle, CSV output.

Everything reports through one row schema so downstream tooling can consume
a single CSV format regardless of which stopper produced the row:

    policy_id,cost,threshold_or_NA,mean_ht,var_ht,aapr,macro_error,seed

Floats are written with repr() so round-tripping is exact; files are UTF-8
with LF line endings.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .datasets import bernoulli_posterior
from .errors import DataIOError, InvalidInputError
from .policy import StoppingPolicy, stopping_risk_batch, terminal_decision_batch
from .rng import make_rng
from .sprt import random_stops, sprt_decide_batch, static_schedule
from .stats import RiskParams

CSV_HEADER = ["policy_id", "cost", "threshold_or_NA", "mean_ht", "var_ht",
              "aapr", "macro_error", "seed"]


@dataclass
class EvalReport:
    policy_id: str
    cost: float
    threshold: float | None
    mean_ht: float
    var_ht: float
    aapr: float
    macro_error: float
    seed: int
    extra: dict = field(default_factory=dict)

    def to_row(self) -> list:
        return [
            self.policy_id, repr(float(self.cost)),
            "NA" if self.threshold is None else repr(float(self.threshold)),
            repr(float(self.mean_ht)), repr(float(self.var_ht)),
            repr(float(self.aapr)), repr(float(self.macro_error)), str(int(self.seed)),
        ]


def _metrics(classes: np.ndarray, taus: np.ndarray, labels: np.ndarray,
             params: RiskParams):
    labels = np.asarray(labels)
    if classes.shape != labels.shape or taus.shape != labels.shape:
        raise InvalidInputError("classes, taus and labels must align")
    wrong = classes != labels
    aapr = float(np.mean(params.penalty[labels - 1] * wrong + params.cost * taus))
    errs = []
    for cls in range(1, params.K + 1):
        mask = labels == cls
        if not mask.any():
            raise InvalidInputError(f"class {cls} absent; macro error undefined")
        errs.append(float(wrong[mask].mean()))
    mean_ht = float(taus.mean())
    var_ht = float(taus.var(ddof=1)) if taus.size > 1 else 0.0
    return mean_ht, var_ht, aapr, float(np.mean(errs))


def evaluate_policy(policy: StoppingPolicy, posteriors: np.ndarray,
                    labels: np.ndarray, policy_id: str = "firmbound",
                    seed: int = 0) -> EvalReport:
    """Deploy a learned stopping policy on posterior paths."""
    classes, taus, forced = policy.deploy_batch(posteriors)
    mean_ht, var_ht, aapr, macro = _metrics(classes, taus, labels, policy.params)
    return EvalReport(policy_id, policy.params.cost, None, mean_ht, var_ht,
                      aapr, macro, seed, extra={"forced_frac": float(forced.mean())})


def evaluate_schedule(schedule: np.ndarray, llrs: np.ndarray, labels: np.ndarray,
                      params: RiskParams, policy_id: str, threshold: float | None,
                      seed: int = 0) -> EvalReport:
    """Run the threshold rule with a (T, K) schedule on LLR matrix paths."""
    classes, taus, _ = sprt_decide_batch(llrs, schedule)
    mean_ht, var_ht, aapr, macro = _metrics(classes, taus, labels, params)
    return EvalReport(policy_id, params.cost, threshold, mean_ht, var_ht,
                      aapr, macro, seed)


def evaluate_random(posteriors: np.ndarray, labels: np.ndarray, params: RiskParams,
                    seed: int = 0, policy_id: str = "random") -> EvalReport:
    """Stop at a uniform random step, decide by minimum conditional risk."""
    post = np.asarray(posteriors, dtype=float)
    m, horizon, _ = post.shape
    taus = random_stops(m, horizon, seed)
    classes = terminal_decision_batch(post[np.arange(m), taus - 1], params)
    mean_ht, var_ht, aapr, macro = _metrics(classes, taus, labels, params)
    return EvalReport(policy_id, params.cost, None, mean_ht, var_ht, aapr, macro, seed)


def static_sweep(llrs: np.ndarray, labels: np.ndarray, params: RiskParams,
                 thresholds, seed: int = 0, policy_id: str = "static") -> list:
    """Speed-accuracy sweep of constant thresholds."""
    horizon = llrs.shape[1]
    k = llrs.shape[2]
    out = []
    for a in thresholds:
        sched = static_schedule(float(a), horizon, k)
        out.append(evaluate_schedule(sched, llrs, labels, params, policy_id,
                                     float(a), seed))
    return out


def match_mean_static(llrs: np.ndarray, labels: np.ndarray, params: RiskParams,
                      target_mean: float, iters: int = 40):
    """Bisect a constant threshold whose mean hitting time matches a target.

    Returns (threshold, report, achieved |gap|). Mean hitting time is a
    nondecreasing step function of the threshold, so plain bisection on the
    threshold converges; with finite data the gap may not reach zero.
    """
    horizon, k = llrs.shape[1], llrs.shape[2]

    def mean_at(a: float):
        sched = static_schedule(a, horizon, k)
        _, taus, _ = sprt_decide_batch(llrs, sched)
        return float(taus.mean())

    lo = 0.0
    hi = 1.0
    for _ in range(60):
        if mean_at(hi) >= target_mean:
            break
        hi *= 2.0
    best_a, best_gap = hi, abs(mean_at(hi) - target_mean)
    if abs(mean_at(lo) - target_mean) < best_gap:
        best_a, best_gap = lo, abs(mean_at(lo) - target_mean)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        mean_mid = mean_at(mid)
        gap = abs(mean_mid - target_mean)
        if gap < best_gap:
            best_a, best_gap = mid, gap
        if mean_mid >= target_mean:
            hi = mid
        else:
            lo = mid
    sched = static_schedule(best_a, horizon, k)
    report = evaluate_schedule(sched, llrs, labels, params, "static-matched",
                               best_a, 0)
    return best_a, report, best_gap


@dataclass
class OracleDP:
    """Exact backward-induction solution on the Bernoulli (t, heads) lattice.

    stop[t][h] is the optimal stop decision after t flips with h heads
    (t = 1..horizon; row t has t+1 entries; at the horizon stopping is
    forced). value[t][h] is the optimal cost-to-go excluding sunk costs,
    occupancy[t][h] the mass arriving at (t, h) before the step-t decision
    under the optimal policy, and aapr the exact average posterior risk.
    """

    p0: float
    p1: float
    priors: np.ndarray
    params: RiskParams
    horizon: int
    stop: list
    value: list
    occupancy: list
    aapr: float

    def posterior(self, t: int, heads: int) -> np.ndarray:
        return bernoulli_posterior(self.p0, self.p1, self.priors, t, heads)


def dp_oracle(p0: float, p1: float, priors, params: RiskParams,
              horizon: int) -> OracleDP:
    """Solve the two-class Bernoulli stopping problem exactly.

    Class 1 emits heads with probability p0, class 2 with p1. The head count
    is a sufficient statistic, so backward induction over the (t, heads)
    lattice is exact, as is the forward occupancy pass used for the AAPR.
    """
    priors = np.asarray(priors, dtype=float)
    if params.K != 2 or priors.shape != (2,):
        raise InvalidInputError("the lattice oracle is two-class only")
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")

    post = [np.stack([bernoulli_posterior(p0, p1, priors, t, h) for h in range(t + 1)])
            for t in range(horizon + 1)]
    gst = [stopping_risk_batch(post[t], params) for t in range(horizon + 1)]
    heads_prob = [post[t][:, 0] * p0 + post[t][:, 1] * p1 for t in range(horizon + 1)]

    value = [None] * (horizon + 1)
    stop = [None] * (horizon + 1)
    value[horizon] = gst[horizon].copy()
    stop[horizon] = np.ones(horizon + 1, dtype=bool)
    for t in range(horizon - 1, -1, -1):
        q = heads_prob[t]
        cont = params.cost + q * value[t + 1][1:] + (1.0 - q) * value[t + 1][:-1]
        if t == 0:
            # no decision before the first observation
            stop[t] = np.zeros(1, dtype=bool)
            value[t] = cont
        else:
            stop[t] = gst[t] <= cont
            value[t] = np.where(stop[t], gst[t], cont)

    occupancy = [np.zeros(t + 1) for t in range(horizon + 1)]
    occupancy[0][0] = 1.0
    aapr = 0.0
    for t in range(horizon + 1):
        occ = occupancy[t]
        survive = occ * ~stop[t]
        aapr += float(np.sum(occ * stop[t] * (gst[t] + params.cost * t)))
        if t < horizon:
            q = heads_prob[t]
            occupancy[t + 1][1:] += survive * q
            occupancy[t + 1][:-1] += survive * (1.0 - q)

    return OracleDP(p0=p0, p1=p1, priors=priors, params=params, horizon=horizon,
                    stop=stop, value=value, occupancy=occupancy, aapr=aapr)


def oracle_agreement(oracle: OracleDP, stop_fn) -> float:
    """Occupancy-weighted agreement with the oracle's stop/continue calls.

    stop_fn(t, posteriors (n, 2)) must return a boolean stop mask. States are
    weighted by the oracle's own still-running occupancy at each decision
    step 1..horizon-1 (the horizon is forced for both rules).
    """
    agree = 0.0
    mass = 0.0
    running = [occ.copy() for occ in oracle.occupancy]
    for t in range(1, oracle.horizon):
        occ = running[t]
        pis = np.stack([oracle.posterior(t, h) for h in range(t + 1)])
        learned = np.asarray(stop_fn(t, pis), dtype=bool)
        agree += float(np.sum(occ * (learned == oracle.stop[t])))
        mass += float(occ.sum())
    if mass <= 0:
        raise InvalidInputError("oracle occupancy vanished before the horizon")
    return agree / mass


def policy_stop_fn(policy: StoppingPolicy):
    """Adapter: a StoppingPolicy's stop rule as a lattice stop_fn."""
    def stop_fn(t, pis):
        return policy.stop_batch(pis, t)
    return stop_fn


def write_csv(reports, path) -> None:
    """Write evaluation rows in the fixed schema (UTF-8, LF, repr floats)."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for rep in reports:
                writer.writerow(rep.to_row())
    except OSError as exc:
        raise DataIOError(f"cannot write CSV to {path}: {exc}") from exc


def render_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rep in reports:
        writer.writerow(rep.to_row())
    return buf.getvalue()


def read_csv(path) -> list:
    """Read rows written by write_csv back into EvalReport objects."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise DataIOError(f"cannot read CSV from {path}: {exc}") from exc
    if not rows or rows[0] != CSV_HEADER:
        raise DataIOError("CSV header does not match the evaluation schema")
    out = []
    for row in rows[1:]:
        if len(row) != len(CSV_HEADER):
            raise DataIOError(f"CSV row has {len(row)} fields, expected {len(CSV_HEADER)}")
        out.append(EvalReport(
            policy_id=row[0], cost=float(row[1]),
            threshold=None if row[2] == "NA" else float(row[2]),
            mean_ht=float(row[3]), var_ht=float(row[4]), aapr=float(row[5]),
            macro_error=float(row[6]), seed=int(row[7]),
        ))
    return out
