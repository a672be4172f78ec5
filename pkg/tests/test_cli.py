"""Command line: config resolution, pipeline flow, exit codes, artifacts."""

import json
import shutil
import subprocess

import numpy as np
import pytest

from firmbound import datasets as ds
from firmbound.cli import DEFAULT_CONFIG, config_hash, main
from firmbound.evalharness import CSV_HEADER, read_csv


def write_config(path, **overrides):
    doc = {
        "dataset": "bernoulli",
        "regressor": "gp",
        "costs": [0.05],
        "desk_train": 120,
        "desk_test": 80,
        "fit": {"subsample": 120, "gp_inducing": 25, "gp_epochs": 2,
                "gp_batch": 256},
    }
    doc.update(overrides)
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


class TestConfig:
    def test_hash_ignores_out_and_threads(self):
        a = dict(DEFAULT_CONFIG)
        b = dict(DEFAULT_CONFIG, out="elsewhere", threads=7)
        c = dict(DEFAULT_CONFIG, costs=[0.5])
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(c)

    def test_unknown_key_exits_2(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}), encoding="utf-8")
        assert main(["gen", "--config", str(cfg)]) == 2

    def test_malformed_json_exits_2(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json", encoding="utf-8")
        assert main(["gen", "--config", str(cfg)]) == 2

    def test_missing_config_exits_4(self, tmp_path):
        assert main(["gen", "--config", str(tmp_path / "absent.json")]) == 4

    def test_bad_dataset_exits_2(self, tmp_path):
        assert main(["gen", "--dataset", "nope", "--out", str(tmp_path)]) == 2

    def test_env_out_with_flag_override(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path / "cfg.json")
        env_dir = tmp_path / "from_env"
        flag_dir = tmp_path / "from_flag"
        monkeypatch.setenv("FIRMBOUND_OUT", str(env_dir))
        assert main(["gen", "--config", cfg]) == 0
        assert (env_dir / "bernoulli_desk_s0_train.fbds").exists()
        assert main(["gen", "--config", cfg, "--out", str(flag_dir)]) == 0
        assert (flag_dir / "bernoulli_desk_s0_train.fbds").exists()


class TestPipeline:
    def test_gen_fit_eval_flow(self, tmp_path):
        out = tmp_path / "runs"
        cfg = write_config(tmp_path / "cfg.json", out=str(out))

        assert main(["gen", "--config", cfg]) == 0
        for split in ("train", "test"):
            assert (out / f"bernoulli_desk_s0_{split}.fbds").exists()
            assert (out / f"bernoulli_desk_s0_{split}_feat.fbds").exists()
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        assert "bernoulli_desk_s0_train.fbds" in manifest["files"]

        assert main(["fit", "--config", cfg]) == 0
        policy_path = out / "policy_bernoulli_desk_analytic_gp_s0_c0.json"
        assert policy_path.exists()

        assert main(["eval", "--config", cfg, "--baseline", "random",
                     "--oracle"]) == 0
        rows = read_csv(out / "reports.csv")
        ids = {r.policy_id for r in rows}
        assert "firmbound-gp" in ids and "random" in ids
        report_doc = json.loads((out / "reports.json").read_text(encoding="utf-8"))
        info = report_doc["oracle"]["seed0_cost0"]
        assert 0.0 <= info["agreement"] <= 1.0

    def test_eval_without_policy_exits_4(self, tmp_path):
        out = tmp_path / "runs"
        cfg = write_config(tmp_path / "cfg.json", out=str(out))
        assert main(["gen", "--config", cfg]) == 0
        assert main(["eval", "--config", cfg]) == 4

    def test_fit_without_data_exits_4(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", out=str(tmp_path / "empty"))
        assert main(["fit", "--config", cfg]) == 4

    def test_multiple_costs_make_indexed_policies(self, tmp_path):
        out = tmp_path / "runs"
        cfg = write_config(tmp_path / "cfg.json", out=str(out),
                           costs=[0.02, 0.2])
        assert main(["gen", "--config", cfg]) == 0
        assert main(["fit", "--config", cfg]) == 0
        assert (out / "policy_bernoulli_desk_analytic_gp_s0_c0.json").exists()
        assert (out / "policy_bernoulli_desk_analytic_gp_s0_c1.json").exists()
        assert main(["eval", "--config", cfg]) == 0
        costs = sorted({r.cost for r in read_csv(out / "reports.csv")})
        assert costs == [0.02, 0.2]

    def test_sweep_one_shot(self, tmp_path):
        out = tmp_path / "runs"
        cfg = write_config(tmp_path / "cfg.json", out=str(out))
        assert main(["sweep", "--config", cfg, "--baseline",
                     "tapering:grid=5,kappa=1.5"]) == 0
        rows = read_csv(out / "reports.csv")
        ids = {r.policy_id for r in rows}
        assert "firmbound-gp" in ids and "tapering_k1.5" in ids

    def test_bad_baseline_exits_2(self, tmp_path):
        out = tmp_path / "runs"
        cfg = write_config(tmp_path / "cfg.json", out=str(out))
        assert main(["gen", "--config", cfg]) == 0
        assert main(["fit", "--config", cfg]) == 0
        assert main(["eval", "--config", cfg, "--baseline", "bogus"]) == 2

    def test_oracle_requires_bernoulli(self, tmp_path):
        assert main(["oracle", "--dataset", "gaussian2",
                     "--out", str(tmp_path)]) == 2

    def test_oracle_writes_exact_values(self, tmp_path):
        out = tmp_path / "runs"
        cfg = write_config(tmp_path / "cfg.json", out=str(out))
        assert main(["oracle", "--config", cfg]) == 0
        doc = json.loads((out / "oracle.json").read_text(encoding="utf-8"))
        entry = doc["costs"]["0.05"]
        assert entry["aapr"] > 0
        assert entry["stop"]["10"] == [1] * 11   # horizon row is forced


class TestHashGuards:
    def test_config_change_refused_then_forced(self, tmp_path):
        out = tmp_path / "runs"
        cfg_a = write_config(tmp_path / "a.json", out=str(out))
        assert main(["gen", "--config", cfg_a]) == 0
        assert main(["fit", "--config", cfg_a]) == 0
        # same artifact paths, different hash-relevant field
        cfg_b = write_config(tmp_path / "b.json", out=str(out),
                             dre={"epochs": 7})
        assert main(["eval", "--config", cfg_b]) == 2
        assert main(["eval", "--config", cfg_b, "--force"]) == 0

    def test_dataset_tamper_refused_then_forced(self, tmp_path):
        out = tmp_path / "runs"
        cfg = write_config(tmp_path / "cfg.json", out=str(out))
        assert main(["gen", "--config", cfg]) == 0
        assert main(["fit", "--config", cfg]) == 0
        mpath = out / "manifest.json"
        doc = json.loads(mpath.read_text(encoding="utf-8"))
        doc["files"]["bernoulli_desk_s0_train.fbds"] = "0" * 64
        mpath.write_text(json.dumps(doc), encoding="utf-8")
        assert main(["eval", "--config", cfg]) == 2
        assert main(["eval", "--config", cfg, "--force"]) == 0


class TestNumericFailure:
    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_diverging_dre_exits_3(self, tmp_path):
        main_path = tmp_path / "huge.fbds"
        feat_path = tmp_path / "huge_feat.fbds"
        m, horizon = 8, 4
        ds.write_fbds(feat_path, np.full((m, horizon, 1), 1e300, dtype=np.float64),
                      2, {"payload": "features"})
        ds.write_fbds(main_path, np.zeros((m, horizon, 1), dtype=np.float32), 2,
                      {"kind": "custom", "K": 2, "labels": "balanced",
                       "payload": "llr_pairs", "features_file": feat_path.name})
        cfg = write_config(tmp_path / "cfg.json", dataset=str(main_path),
                           out=str(tmp_path))
        assert main(["train-dre", "--config", cfg]) == 3


class TestThreadInvariance:
    def test_gen_output_independent_of_threads(self, tmp_path):
        gaussian = {"d": 4, "horizon": 6, "means": None}
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        cfg_a = write_config(tmp_path / "a.json", dataset="gaussian2",
                             gaussian=gaussian, desk_train=300, desk_test=64,
                             out=str(out_a))
        cfg_b = write_config(tmp_path / "b.json", dataset="gaussian2",
                             gaussian=gaussian, desk_train=300, desk_test=64,
                             out=str(out_b))
        assert main(["gen", "--config", cfg_a, "--threads", "1"]) == 0
        assert main(["gen", "--config", cfg_b, "--threads", "3"]) == 0
        for name in ("gaussian2_desk_s0_train.fbds", "gaussian2_desk_s0_test.fbds",
                     "gaussian2_desk_s0_train_feat.fbds"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


class TestEntryPoint:
    def test_console_script_help(self):
        exe = shutil.which("firmbound")
        assert exe is not None
        proc = subprocess.run([exe, "gen", "--help"], capture_output=True)
        assert proc.returncode == 0
        assert b"--config" in proc.stdout
