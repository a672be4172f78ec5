"""Synthetic generators: analytic LLR identities, determinism, binary IO."""

import numpy as np
import pytest

from firmbound.datasets import (
    DOLSpec,
    GaussianSpec,
    SequenceDataset,
    bernoulli_posterior,
    dol_curve,
    gen_bernoulli_toy,
    gen_dol,
    gen_gaussian,
    read_fbds,
    write_fbds,
)
from firmbound.errors import DataIOError, InvalidInputError
from firmbound.rng import make_rng, normal


class TestGaussian:
    def test_mean_injection_gives_linear_llr(self):
        # x_t = mu_1 exactly: lambda_12(t) = t |mu_1 - mu_2|^2 / 2 = 0.25 t
        spec = GaussianSpec(K=2, d=4, horizon=6, m=2, seed=0)
        means = spec.resolved_means()
        ds = gen_gaussian(spec)
        diffs = means[0] - means[1]
        x = np.tile(means[0], (6, 1))
        lam = np.cumsum(x @ diffs - (means[0] @ means[0] - means[1] @ means[1]) / 2.0)
        np.testing.assert_allclose(lam, 0.25 * np.arange(1, 7), atol=1e-12)
        assert ds.llr.shape == (2, 6, 1)

    def test_llr_matches_features(self):
        # recompute the cumulative LLR from the stored observations
        spec = GaussianSpec(K=3, d=5, horizon=7, m=9, seed=3)
        ds = gen_gaussian(spec, keep_features=True)
        means = spec.resolved_means()
        full = ds.llr_full()
        for i in range(ds.M):
            x = ds.features[i].astype(float)
            for idx, (a, b) in enumerate([(0, 1), (0, 2), (1, 2)]):
                inc = x @ (means[a] - means[b]) - (means[a] @ means[a] - means[b] @ means[b]) / 2.0
                np.testing.assert_allclose(ds.llr[i, :, idx], np.cumsum(inc), rtol=1e-5, atol=1e-5)
        np.testing.assert_allclose(full[..., 1, 0], -ds.llr[..., 0], atol=0.0)

    def test_expected_drift(self):
        # E[lambda_12(T) | y = 1] = T |mu_1 - mu_2|^2 / 2 = 12.5 at T = 50
        ds = gen_gaussian(GaussianSpec(K=2, d=128, horizon=50, m=400, seed=1),
                          keep_features=False)
        lam_T = ds.llr[ds.labels == 1, -1, 0]
        se = np.sqrt(50 * 0.5) / np.sqrt(lam_T.size)
        assert abs(lam_T.mean() - 12.5) < 3.0 * se

    def test_balanced_labels(self):
        ds = gen_gaussian(GaussianSpec(K=3, d=3, horizon=2, m=9, seed=0),
                          keep_features=False)
        assert np.bincount(ds.labels, minlength=4).tolist() == [0, 3, 3, 3]

    def test_thread_count_does_not_change_content(self):
        spec = GaussianSpec(K=2, d=6, horizon=5, m=700, seed=5)
        a = gen_gaussian(spec, keep_features=True, threads=1)
        b = gen_gaussian(spec, keep_features=True, threads=4)
        np.testing.assert_array_equal(a.llr, b.llr)
        np.testing.assert_array_equal(a.features, b.features)

    def test_stream_changes_content(self):
        a = gen_gaussian(GaussianSpec(K=2, d=4, horizon=3, m=8, seed=2, stream=0))
        b = gen_gaussian(GaussianSpec(K=2, d=4, horizon=3, m=8, seed=2, stream=1))
        assert not np.array_equal(a.llr, b.llr)

    def test_custom_means_shape_checked(self):
        with pytest.raises(InvalidInputError):
            gen_gaussian(GaussianSpec(K=2, d=3, m=2, means=np.zeros((2, 5))))
        with pytest.raises(InvalidInputError):
            gen_gaussian(GaussianSpec(K=5, d=3, m=2))  # default means need d >= K


class TestDOL:
    def test_curve_closed_form(self):
        t = np.arange(1, 11, dtype=float)
        got = dol_curve(1.0, 10, amp=2.0, beta=0.1, omega=1.5, kappa=-0.5)
        want = (1.0 - (1.0 - t / 10.0) ** np.exp(-0.5)) + 2.0 * np.exp(-0.1 * t) * np.sin(1.5 * t)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_generated_path_reproduces_formula(self):
        spec = DOLSpec(horizon=8, m=4, seed=6)
        ds = gen_dol(spec)
        t = np.arange(1, 9, dtype=float)
        for i in range(4):
            rng = make_rng(6, 0, i)
            amp = 2.0 + 2.0 * normal(rng, 1)[0]
            beta = 0.02 + 0.18 * rng.random()
            omega = -2.0 + 5.0 * rng.random()
            kappa = -2.5 + 2.5 * rng.random()
            sigma = abs(normal(rng, 1)[0])
            gamma = 1.0 if ds.labels[i] == 1 else -1.0
            wave = gamma * (1.0 - (1.0 - t / 8.0) ** np.exp(kappa))
            wave = wave + amp * np.exp(-beta * t) * np.sin(omega * t)
            wave = wave + sigma * normal(rng, 8)
            np.testing.assert_allclose(ds.llr[i, :, 0], wave, atol=1e-12)

    def test_class_sign_direction(self):
        # gamma = +1 for class 1 pushes lambda_12 up on average
        ds = gen_dol(DOLSpec(horizon=50, m=600, seed=0))
        end = ds.llr[:, -1, 0]
        assert end[ds.labels == 1].mean() > end[ds.labels == 2].mean()

    def test_thread_invariance(self):
        spec = DOLSpec(horizon=6, m=520, seed=9)
        np.testing.assert_array_equal(gen_dol(spec, threads=1).llr,
                                      gen_dol(spec, threads=8).llr)


class TestBernoulli:
    def test_llr_closed_form(self):
        ds = gen_bernoulli_toy(0.4, 0.6, 5, 6, seed=0)
        flips = ds.features[:, :, 0].astype(float)
        inc = flips * np.log(0.4 / 0.6) + (1.0 - flips) * np.log(0.6 / 0.4)
        np.testing.assert_allclose(ds.llr[:, :, 0], np.cumsum(inc, axis=1), atol=1e-12)

    def test_posterior_matches_lattice_formula(self):
        priors = np.array([0.5, 0.5])
        ds = gen_bernoulli_toy(0.3, 0.7, 6, 10, seed=1)
        post = ds.posteriors(priors)
        heads = np.cumsum(ds.features[:, :, 0], axis=1).astype(int)
        for i in range(10):
            for t in range(1, 7):
                want = bernoulli_posterior(0.3, 0.7, priors, t, int(heads[i, t - 1]))
                np.testing.assert_allclose(post[i, t - 1], want, atol=1e-10)

    def test_bernoulli_posterior_hand_value(self):
        # two heads in two flips, uniform prior:
        # w1 = 0.25^2, w2 = 0.75^2, pi_2 = 9/10
        pi = bernoulli_posterior(0.25, 0.75, (0.5, 0.5), 2, 2)
        np.testing.assert_allclose(pi, [0.1, 0.9], atol=1e-12)

    def test_parameter_validation(self):
        with pytest.raises(InvalidInputError):
            gen_bernoulli_toy(0.7, 0.3, 5, 4, seed=0)
        with pytest.raises(InvalidInputError):
            gen_bernoulli_toy(0.4, 0.6, 13, 4, seed=0)
        with pytest.raises(InvalidInputError):
            gen_bernoulli_toy(0.0, 0.6, 5, 4, seed=0)

    def test_equal_probabilities_give_zero_llr(self):
        ds = gen_bernoulli_toy(0.5, 0.5, 4, 4, seed=0)
        assert np.all(ds.llr == 0.0)

    def test_stream_disjointness(self):
        a = gen_bernoulli_toy(0.4, 0.6, 8, 50, seed=0, stream=0)
        b = gen_bernoulli_toy(0.4, 0.6, 8, 50, seed=0, stream=2)
        assert not np.array_equal(a.features, b.features)


class TestFBDS:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        data = rng.normal(size=(5, 4, 3)).astype(np.float32)
        path = tmp_path / "toy.fbds"
        write_fbds(path, data, k=2, sidecar={"kind": "test", "labels": [1, 2, 1, 2, 1]})
        back, header, sidecar = read_fbds(path)
        np.testing.assert_array_equal(back, data)
        assert header == {"version": 1, "K": 2, "T": 4, "d": 3, "M": 5}
        assert sidecar["kind"] == "test"

    def test_header_layout(self, tmp_path):
        data = np.zeros((2, 3, 1), dtype=np.float32)
        path = tmp_path / "h.fbds"
        write_fbds(path, data, k=2, sidecar={})
        raw = path.read_bytes()
        assert raw[:4] == b"FBDS"
        assert len(raw) == 24 + 4 * 2 * 3 * 1
        # little-endian uint32: version, K, T, d, M
        assert np.frombuffer(raw[4:24], dtype="<u4").tolist() == [1, 2, 3, 1, 2]

    def test_truncated_rejected(self, tmp_path):
        data = np.zeros((2, 3, 1), dtype=np.float32)
        path = tmp_path / "t.fbds"
        write_fbds(path, data, k=2, sidecar={})
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(DataIOError):
            read_fbds(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.fbds"
        path.write_bytes(b"NOPE" + b"\x00" * 40)
        with pytest.raises(DataIOError):
            read_fbds(path)

    def test_missing_file_raises_dataio(self, tmp_path):
        with pytest.raises(DataIOError):
            read_fbds(tmp_path / "absent.fbds")

    def test_write_rejects_bad_rank(self, tmp_path):
        with pytest.raises(InvalidInputError):
            write_fbds(tmp_path / "x.fbds", np.zeros((3, 4), dtype=np.float32), 2, {})


class TestSequenceDataset:
    def test_posteriors_on_simplex(self):
        ds = gen_gaussian(GaussianSpec(K=3, d=3, horizon=4, m=6, seed=0),
                          keep_features=False)
        post = ds.posteriors(np.full(3, 1.0 / 3.0))
        assert post.shape == (6, 4, 3)
        np.testing.assert_allclose(post.sum(axis=-1), 1.0, atol=1e-9)
        assert np.all(post >= 0.0)

    def test_llr_full_antisymmetric(self):
        ds = gen_gaussian(GaussianSpec(K=3, d=3, horizon=4, m=6, seed=0),
                          keep_features=False)
        full = ds.llr_full()
        np.testing.assert_allclose(full, -np.swapaxes(full, -1, -2), atol=0.0)
        assert isinstance(ds, SequenceDataset)
