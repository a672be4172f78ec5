"""Threshold decision rule against a brute-force per-trajectory oracle."""

import numpy as np
import pytest

from firmbound.errors import InvalidInputError
from firmbound.stats import RiskParams, Trajectory, pairwise_to_full
from firmbound.sprt import (
    Decision,
    check_schedule,
    minmargin_statistic,
    random_stops,
    sprt_decide,
    sprt_decide_batch,
    static_schedule,
    tapering_schedule,
    terminal_decision,
)


def brute_force_decide(lam, sched):
    """Slow reference rule: scan steps, first crossing wins, argmax class.

    lam (T, K, K), sched (T, K). Ties on the decision statistic break toward
    the lowest class index, matching plain argmax.
    """
    horizon, k = lam.shape[0], lam.shape[1]
    for t in range(horizon):
        margins = np.array([min(lam[t, a, b] for b in range(k) if b != a) for a in range(k)])
        gap = margins - sched[t]
        if np.max(gap) >= 0.0:
            return int(np.argmax(gap)) + 1, t + 1, False
    margins = np.array([min(lam[-1, a, b] for b in range(k) if b != a) for a in range(k)])
    gap = margins - sched[-1]
    return int(np.argmax(gap)) + 1, horizon, True


def random_llr_paths(rng, m, horizon, k):
    pw = np.cumsum(rng.normal(scale=1.0, size=(m, horizon, k * (k - 1) // 2)), axis=1)
    return pairwise_to_full(pw, k)


class TestSchedules:
    def test_static_shape_and_value(self):
        sched = static_schedule(2.5, 7, 3)
        assert sched.shape == (7, 3)
        assert np.all(sched == 2.5)

    def test_tapering_endpoint_zero(self):
        sched = tapering_schedule(4.0, 10, kappa=0.0)
        assert sched.shape == (10, 2)
        # f(t) = A (1 - t/T)^(e^kappa) hits zero at t = T
        assert sched[-1, 0] == 0.0
        np.testing.assert_allclose(sched[:, 0], 4.0 * (1.0 - np.arange(1, 11) / 10.0))

    def test_tapering_curvature(self):
        concave = tapering_schedule(1.0, 100, kappa=-1.0)[:, 0]
        convex = tapering_schedule(1.0, 100, kappa=1.0)[:, 0]
        mid = 49
        line = 1.0 - np.arange(1, 101) / 100.0
        assert concave[mid] > line[mid] > convex[mid]

    def test_tapering_rejects_negative_magnitude(self):
        with pytest.raises(InvalidInputError):
            tapering_schedule(-1.0, 10, kappa=0.0)

    def test_check_schedule_rejects_bad(self):
        with pytest.raises(InvalidInputError):
            check_schedule(np.zeros(5))
        with pytest.raises(InvalidInputError):
            check_schedule(np.full((5, 2), np.nan))

    def test_random_stops_range_and_determinism(self):
        taus = random_stops(500, 20, seed=3)
        assert taus.min() >= 1 and taus.max() <= 20
        np.testing.assert_array_equal(taus, random_stops(500, 20, seed=3))
        assert not np.array_equal(taus, random_stops(500, 20, seed=4))
        # uniform over [1, 20]: mean 10.5, tolerate 5 sigma
        assert abs(taus.mean() - 10.5) < 5.0 * 20.0 / np.sqrt(12.0 * 500.0)


class TestMinMargin:
    def test_hand_value(self):
        lam = np.array(
            [[0.0, 2.0, -1.0],
             [-2.0, 0.0, 3.0],
             [1.0, -3.0, 0.0]]
        )
        np.testing.assert_array_equal(minmargin_statistic(lam), [-1.0, -2.0, -3.0])

    def test_diagonal_excluded(self):
        lam = np.array([[0.0, 5.0], [-5.0, 0.0]])
        np.testing.assert_array_equal(minmargin_statistic(lam), [5.0, -5.0])


class TestDecideBatch:
    @pytest.mark.parametrize("k,horizon,seed", [(2, 10, 0), (3, 8, 1), (4, 6, 2)])
    def test_matches_brute_force_static(self, k, horizon, seed):
        rng = np.random.default_rng(seed)
        lam = random_llr_paths(rng, 64, horizon, k)
        sched = static_schedule(1.7, horizon, k)
        cls, tau, forced = sprt_decide_batch(lam, sched)
        for i in range(64):
            ec, et, ef = brute_force_decide(lam[i], sched)
            assert (cls[i], tau[i], forced[i]) == (ec, et, ef)

    @pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0])
    def test_matches_brute_force_tapering(self, kappa):
        rng = np.random.default_rng(9)
        lam = random_llr_paths(rng, 48, 10, 2)
        sched = tapering_schedule(3.0, 10, kappa)
        cls, tau, forced = sprt_decide_batch(lam, sched)
        for i in range(48):
            ec, et, ef = brute_force_decide(lam[i], sched)
            assert (cls[i], tau[i], forced[i]) == (ec, et, ef)

    def test_tie_breaks_to_lowest_class(self):
        # both classes cross with the same statistic at t = 1
        lam = np.zeros((1, 1, 2, 2))
        sched = static_schedule(0.0, 1, 2)
        cls, tau, forced = sprt_decide_batch(lam, sched)
        assert cls[0] == 1 and tau[0] == 1 and not forced[0]

    def test_forced_stop_flag(self):
        lam = np.zeros((3, 4, 2, 2))  # margins 0 < threshold forever
        sched = static_schedule(10.0, 4, 2)
        cls, tau, forced = sprt_decide_batch(lam, sched)
        assert np.all(tau == 4) and np.all(forced)

    def test_schedule_shorter_than_horizon_rejected(self):
        lam = np.zeros((2, 5, 2, 2))
        with pytest.raises(InvalidInputError):
            sprt_decide_batch(lam, static_schedule(1.0, 4, 2))

    def test_longer_schedule_is_truncated(self):
        rng = np.random.default_rng(2)
        lam = random_llr_paths(rng, 16, 5, 2)
        short = static_schedule(1.0, 5, 2)
        long = static_schedule(1.0, 9, 2)
        a = sprt_decide_batch(lam, short)
        b = sprt_decide_batch(lam, long)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_monotone_in_threshold(self):
        # larger thresholds never stop earlier
        rng = np.random.default_rng(4)
        lam = random_llr_paths(rng, 200, 12, 3)
        _, tau_lo, _ = sprt_decide_batch(lam, static_schedule(0.5, 12, 3))
        _, tau_hi, _ = sprt_decide_batch(lam, static_schedule(2.5, 12, 3))
        assert np.all(tau_hi >= tau_lo)


class TestSingleTrajectory:
    def test_decision_dataclass(self):
        rng = np.random.default_rng(6)
        lam = random_llr_paths(rng, 1, 8, 3)[0]
        traj = Trajectory(stats=lam, label=1)
        dec = sprt_decide(traj, static_schedule(1.0, 8, 3))
        assert isinstance(dec, Decision)
        ec, et, ef = brute_force_decide(lam, static_schedule(1.0, 8, 3))
        assert (dec.cls, dec.tau, dec.forced) == (ec, et, ef)

    def test_rejects_posterior_kind(self):
        traj = Trajectory(stats=np.full((4, 2), 0.5), label=1, kind="posterior")
        with pytest.raises(InvalidInputError):
            sprt_decide(traj, static_schedule(1.0, 4, 2))


class TestTerminalDecision:
    def test_argmin_risk(self):
        params = RiskParams(penalty=np.array([1.0, 10.0]), cost=0.0)
        # risks L_k (1 - pi_k): (0.2, 8.0) then (0.95, 0.5)
        assert terminal_decision(np.array([0.8, 0.2]), params) == 1
        assert terminal_decision(np.array([0.05, 0.95]), params) == 2

    def test_tie_to_lowest_index(self):
        params = RiskParams(penalty=np.ones(2), cost=0.0)
        assert terminal_decision(np.array([0.5, 0.5]), params) == 1
