"""Configuration-driven command line for the full pipeline.

Subcommands: gen, train-dre, fit, eval, sweep, oracle. Configuration is a
JSON file; command-line flags override config fields, and the FIRMBOUND_OUT
environment variable overrides the output directory (flags beat both). Every
artifact carries the hash of the resolved configuration so downstream
commands can detect mismatched inputs; eval refuses a policy whose hashes
disagree with the current run unless --force is given.

Exit codes: 0 success, 2 configuration/input error, 3 numeric failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import datasets as ds
from . import evalharness as ev
from .dre import DREModel, train_dre
from .errors import DataIOError, InvalidInputError, NumericError
from .policy import StoppingPolicy, fit_policy
from .sprt import minmargin_statistic, tapering_schedule
from .stats import RiskParams, posterior_from_llr_batch

DATASET_NAMES = ("gaussian2", "gaussian3", "dol", "bernoulli")

DEFAULT_CONFIG = {
    "dataset": "gaussian2",
    "statistic": "analytic",
    "regressor": "cfl",
    "penalty": None,
    "priors": None,
    "costs": [0.001],
    "seeds": [0],
    "scale": "desk",
    "out": "runs",
    "gaussian": {"d": 128, "horizon": 50, "means": None},
    "dol": {"horizon": 50},
    "bernoulli": {"p0": 0.4, "p1": 0.6, "horizon": 10},
    "dre": {"order": 0, "epochs": 150, "lr": 0.2, "mce_weight": 1.0, "lsel_weight": 0.8},
    "fit": {"subsample": None, "cfl_iters": None, "cfl_reg": None,
            "gp_inducing": 200, "gp_epochs": 3, "gp_batch": 2000},
    "threads": None,
    "desk_train": ds.DESK_TRAIN,
    "desk_test": ds.DESK_TEST,
}

# fields that change where or how fast things run, never what is computed
HASH_EXCLUDE = ("out", "threads")


class ConfigError(InvalidInputError):
    pass


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, path + key + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise DataIOError(f"cannot read config {args.config}: {exc}") from exc
        try:
            user = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
        cfg = _merge(cfg, user)

    env_out = os.environ.get("FIRMBOUND_OUT")
    if env_out:
        cfg["out"] = env_out
    for key in ("dataset", "statistic", "regressor", "scale", "out"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "cost", None):
        cfg["costs"] = [float(c) for c in args.cost]
    if getattr(args, "seed", None):
        cfg["seeds"] = [int(s) for s in args.seed]
    if getattr(args, "threads", None) is not None:
        cfg["threads"] = int(args.threads)

    _validate_config(cfg)
    return cfg


def _validate_config(cfg: dict) -> None:
    name = cfg["dataset"]
    if name not in DATASET_NAMES and not str(name).endswith(".fbds"):
        raise ConfigError(f"dataset must be one of {DATASET_NAMES} or an .fbds path")
    if str(name).endswith(".fbds") and not Path(name).exists():
        raise ConfigError(f"dataset file {name} does not exist")
    if cfg["statistic"] not in ("analytic", "dre"):
        raise ConfigError("statistic must be 'analytic' or 'dre'")
    if cfg["regressor"] not in ("cfl", "gp"):
        raise ConfigError("regressor must be 'cfl' or 'gp'")
    if cfg["scale"] not in ("desk", "paper"):
        raise ConfigError("scale must be 'desk' or 'paper'")
    if not cfg["costs"]:
        raise ConfigError("cost list must be nonempty")
    if not cfg["seeds"]:
        raise ConfigError("seed list must be nonempty")
    if any(float(c) < 0 for c in cfg["costs"]):
        raise ConfigError("costs must be >= 0")


def config_hash(cfg: dict) -> str:
    doc = {k: v for k, v in cfg.items() if k not in HASH_EXCLUDE}
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _threads(cfg: dict) -> int:
    if cfg["threads"] is not None:
        return max(1, int(cfg["threads"]))
    return max(1, os.cpu_count() or 1)


def _dataset_k(cfg: dict) -> int:
    return 3 if cfg["dataset"] == "gaussian3" else 2


def _risk_params(cfg: dict, cost: float) -> RiskParams:
    k = _dataset_k(cfg)
    penalty = np.ones(k) if cfg["penalty"] is None else np.asarray(cfg["penalty"], dtype=float)
    priors = np.full(k, 1.0 / k) if cfg["priors"] is None else np.asarray(cfg["priors"], dtype=float)
    try:
        return RiskParams(penalty=penalty, cost=float(cost), priors=priors)
    except InvalidInputError as exc:
        raise ConfigError(str(exc)) from exc


def _split_sizes(cfg: dict):
    if cfg["scale"] == "desk":
        return {"train": int(cfg["desk_train"]), "test": int(cfg["desk_test"])}
    name = cfg["dataset"]
    if name in ds.FULL_SPLITS:
        train, val, test = ds.FULL_SPLITS[name]
    elif name == "dol":
        train, val, test = ds.FULL_SPLITS["gaussian2"]
    else:
        raise ConfigError(f"paper scale is not defined for dataset {name!r}")
    return {"train": train, "val": val, "test": test}

SPLIT_STREAMS = {"train": 0, "val": 1, "test": 2}


def _data_stem(cfg: dict, seed: int, split: str) -> str:
    return f"{cfg['dataset']}_{cfg['scale']}_s{seed}_{split}"


def _generate_split(cfg: dict, seed: int, split: str, m: int, threads: int):
    name = cfg["dataset"]
    stream = SPLIT_STREAMS[split]
    if name in ("gaussian2", "gaussian3"):
        k = 2 if name == "gaussian2" else 3
        g = cfg["gaussian"]
        keep = g["d"] <= 8    # raw features only kept at estimator scale
        spec = ds.GaussianSpec(K=k, d=int(g["d"]), horizon=int(g["horizon"]), m=m,
                               seed=seed, stream=stream,
                               means=None if g["means"] is None else np.asarray(g["means"], dtype=float))
        return ds.gen_gaussian(spec, keep_features=keep, threads=threads)
    if name == "dol":
        spec = ds.DOLSpec(horizon=int(cfg["dol"]["horizon"]), m=m, seed=seed, stream=stream)
        return ds.gen_dol(spec, threads=threads)
    if name == "bernoulli":
        b = cfg["bernoulli"]
        priors = (0.5, 0.5) if cfg["priors"] is None else tuple(cfg["priors"])
        return ds.gen_bernoulli_toy(float(b["p0"]), float(b["p1"]), int(b["horizon"]),
                                    m, seed, priors=priors, stream=stream)
    raise ConfigError("gen requires a synthetic dataset name, not a file path")


def _update_manifest(out: Path, entries: dict, chash: str) -> None:
    path = out / "manifest.json"
    doc = {"config_hash": chash, "files": {}}
    if path.exists():
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            doc = {"config_hash": chash, "files": {}}
    doc["config_hash"] = chash
    doc.setdefault("files", {}).update(entries)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def cmd_gen(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)
    threads = _threads(cfg)
    entries = {}
    for seed in cfg["seeds"]:
        for split, m in _split_sizes(cfg).items():
            data = _generate_split(cfg, int(seed), split, m, threads)
            stem = _data_stem(cfg, int(seed), split)
            main = out / (stem + ".fbds")
            sidecar = {
                "kind": data.kind, "K": data.K, "labels": "balanced",
                "seed": int(seed), "stream": SPLIT_STREAMS[split],
                "split": split, "config_hash": chash,
                "payload": "llr_pairs", "meta": _json_safe(data.meta),
                "features_file": None,
            }
            if data.features is not None:
                feat = out / (stem + "_feat.fbds")
                sidecar["features_file"] = feat.name
                ds.write_fbds(feat, data.features, data.K,
                              {"kind": data.kind, "K": data.K, "labels": "balanced",
                               "payload": "features", "config_hash": chash})
                entries[feat.name] = _file_hash(feat)
            ds.write_fbds(main, data.llr.astype(np.float32), data.K, sidecar)
            entries[main.name] = _file_hash(main)
            print(f"wrote {main}")
    _update_manifest(out, entries, chash)
    print(f"wrote {out / 'manifest.json'}")
    return 0


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _load_split(cfg: dict, seed: int, split: str):
    """Load one split back as (dataset, main_path). Labels are rebuilt from
    the balanced-label contract unless the sidecar lists them explicitly."""
    name = cfg["dataset"]
    if str(name).endswith(".fbds"):
        main = Path(name)
    else:
        main = Path(cfg["out"]) / (_data_stem(cfg, seed, split) + ".fbds")
    if not main.exists():
        raise DataIOError(f"dataset file {main} not found; run gen first")
    data, header, sidecar = ds.read_fbds(main)
    k = header["K"]
    if sidecar.get("labels") == "balanced" or "labels" not in sidecar:
        labels = ds._balanced_labels(header["M"], k)
    else:
        labels = np.asarray(sidecar["labels"], dtype=np.int64)
    features = None
    if sidecar.get("features_file"):
        fpath = main.parent / sidecar["features_file"]
        if fpath.exists():
            features, _, _ = ds.read_fbds(fpath)
    dataset = ds.SequenceDataset(kind=sidecar.get("kind", "file"),
                                 llr=data.astype(float), labels=labels, K=k,
                                 features=features, meta=sidecar.get("meta", {}))
    return dataset, main


def _dre_path(cfg: dict, seed: int) -> Path:
    return Path(cfg["out"]) / f"dre_{cfg['dataset']}_{cfg['scale']}_s{seed}.json"


def cmd_train_dre(cfg: dict) -> int:
    chash = config_hash(cfg)
    for seed in cfg["seeds"]:
        data, _ = _load_split(cfg, int(seed), "train")
        if data.features is None:
            raise ConfigError("train-dre needs raw features; generate a dataset "
                              "with feature dim <= 8")
        dcfg = cfg["dre"]
        model = train_dre(data.features.astype(float), data.labels,
                          order=int(dcfg["order"]), epochs=int(dcfg["epochs"]),
                          lr=float(dcfg["lr"]), seed=int(seed),
                          weights=(float(dcfg["mce_weight"]), float(dcfg["lsel_weight"])))
        doc = model.to_dict()
        doc["config_hash"] = chash
        doc["loss_trace"] = model.loss_trace
        path = _dre_path(cfg, int(seed))
        path.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
        final = model.loss_trace[-1]["combined"] if model.loss_trace else float("nan")
        print(f"wrote {path} (final combined loss {final:.6f})")
    return 0


def _statistic_posteriors(cfg: dict, dataset, seed: int, params: RiskParams):
    """Posterior paths (M, T, K) from the configured statistic source."""
    if cfg["statistic"] == "analytic":
        return dataset.posteriors(params.priors)
    path = _dre_path(cfg, seed)
    if not path.exists():
        raise ConfigError(f"statistic=dre but no trained model at {path}; "
                          "run train-dre first (no analytic fallback)")
    doc = json.loads(path.read_text(encoding="utf-8"))
    model = DREModel.from_dict(doc)
    if dataset.features is None:
        raise ConfigError("statistic=dre needs a dataset with raw features")
    lam = model.llr_paths(dataset.features.astype(float))
    return posterior_from_llr_batch(lam, model.priors)


def _policy_path(cfg: dict, seed: int, cost_idx: int) -> Path:
    return Path(cfg["out"]) / (
        f"policy_{cfg['dataset']}_{cfg['scale']}_{cfg['statistic']}_"
        f"{cfg['regressor']}_s{seed}_c{cost_idx}.json")


def cmd_fit(cfg: dict) -> int:
    chash = config_hash(cfg)
    fcfg = cfg["fit"]
    for seed in cfg["seeds"]:
        data, main = _load_split(cfg, int(seed), "train")
        dhash = _file_hash(main)
        for ci, cost in enumerate(cfg["costs"]):
            params = _risk_params(cfg, float(cost))
            post = _statistic_posteriors(cfg, data, int(seed), params)
            cfl_config = None
            custom_cfl = fcfg["cfl_reg"] is not None or fcfg["cfl_iters"] is not None
            if cfg["regressor"] == "cfl" and custom_cfl:
                from .cfl import AdmmConfig
                from .policy import DEFAULT_CFL_ITERS, DEFAULT_CFL_REG, DEFAULT_CFL_RHO
                reg = DEFAULT_CFL_REG if fcfg["cfl_reg"] is None else float(fcfg["cfl_reg"])
                iters = DEFAULT_CFL_ITERS if fcfg["cfl_iters"] is None else int(fcfg["cfl_iters"])
                cfl_config = AdmmConfig(reg=reg, rho=DEFAULT_CFL_RHO, iters=iters,
                                        seed=int(seed))
            sub = fcfg["subsample"]
            try:
                policy = fit_policy(
                    post, params, method=cfg["regressor"], seed=int(seed),
                    subsample=None if sub is None else int(sub), cfl_config=cfl_config,
                    gp_inducing=int(fcfg["gp_inducing"]),
                    gp_epochs=int(fcfg["gp_epochs"]), gp_batch=int(fcfg["gp_batch"]),
                    dataset_hash=dhash)
            except NumericError as exc:
                raise NumericError(f"fit failed (seed {seed}, cost {cost}): {exc}") from exc
            policy.meta["config_hash"] = chash
            policy.meta["cost_index"] = ci
            path = _policy_path(cfg, int(seed), ci)
            policy.save(path)
            worst = max(entry["mse"] for entry in policy.fit_log)
            print(f"wrote {path} (steps {len(policy.models)}, max step MSE {worst:.6g})")
    return 0


def _parse_baseline(text: str):
    parts = text.split(":")
    kind = parts[0]
    opts = {}
    for part in parts[1:]:
        for piece in part.split(","):
            if not piece:
                continue
            if "=" not in piece:
                raise ConfigError(f"bad baseline option {piece!r} in {text!r}")
            key, val = piece.split("=", 1)
            opts[key] = val
    if kind not in ("static", "tapering", "random"):
        raise ConfigError(f"unknown baseline kind {kind!r}")
    return kind, opts


def _baseline_reports(kind: str, opts: dict, dataset, params: RiskParams,
                      seed: int) -> list:
    lam = dataset.llr_full()
    if kind == "random":
        post = dataset.posteriors(params.priors)
        return [ev.evaluate_random(post, dataset.labels, params, seed=seed)]
    grid = int(opts.get("grid", 50))
    stat_max = float(minmargin_statistic(lam).max())
    if stat_max <= 0:
        stat_max = 1.0
    thresholds = np.geomspace(max(stat_max * 1e-3, 1e-3), stat_max * 1.001, grid)
    if kind == "static":
        return ev.static_sweep(lam, dataset.labels, params, thresholds, seed=seed)
    kappa = float(opts.get("kappa", 1.0))
    out = []
    for a in thresholds:
        sched = tapering_schedule(float(a), lam.shape[1], kappa, k=lam.shape[2])
        out.append(ev.evaluate_schedule(sched, lam, dataset.labels, params,
                                        f"tapering_k{kappa:g}", float(a), seed))
    return out


def cmd_eval(cfg: dict, force: bool, baselines, with_oracle: bool) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)
    manifest = {}
    mpath = out / "manifest.json"
    if mpath.exists():
        try:
            manifest = json.loads(mpath.read_text(encoding="utf-8")).get("files", {})
        except (OSError, json.JSONDecodeError):
            manifest = {}

    reports = []
    oracle_info = {}
    for seed in cfg["seeds"]:
        data, _ = _load_split(cfg, int(seed), "test")
        for ci, cost in enumerate(cfg["costs"]):
            params = _risk_params(cfg, float(cost))
            ppath = _policy_path(cfg, int(seed), ci)
            if not ppath.exists():
                raise DataIOError(f"policy {ppath} not found; run fit first")
            policy = StoppingPolicy.load(ppath)
            if policy.horizon != data.T:
                raise ConfigError(f"policy horizon {policy.horizon} != dataset "
                                  f"horizon {data.T}")
            stored = policy.meta.get("config_hash")
            if stored is not None and stored != chash and not force:
                raise ConfigError(f"policy {ppath.name} was fit under config hash "
                                  f"{stored[:12]}, current is {chash[:12]}; "
                                  "rerun fit or pass --force")
            train_name = _data_stem(cfg, int(seed), "train") + ".fbds"
            known = manifest.get(train_name)
            if (known is not None and policy.dataset_hash is not None
                    and known != policy.dataset_hash and not force):
                raise ConfigError(f"policy {ppath.name} was fit on different data "
                                  f"than {train_name}; pass --force to override")
            post = _statistic_posteriors(cfg, data, int(seed), params)
            rep = ev.evaluate_policy(policy, post, data.labels,
                                     policy_id=f"firmbound-{cfg['regressor']}",
                                     seed=int(seed))
            reports.append(rep)
            if with_oracle:
                if cfg["dataset"] != "bernoulli":
                    raise ConfigError("--oracle needs the bernoulli dataset")
                b = cfg["bernoulli"]
                oracle = ev.dp_oracle(float(b["p0"]), float(b["p1"]), params.priors,
                                      params, int(b["horizon"]))
                agree = ev.oracle_agreement(oracle, ev.policy_stop_fn(policy))
                oracle_info[f"seed{seed}_cost{ci}"] = {
                    "oracle_aapr": oracle.aapr, "agreement": agree,
                    "policy_aapr": rep.aapr,
                }
        for spec_text in baselines:
            kind, opts = _parse_baseline(spec_text)
            for ci, cost in enumerate(cfg["costs"]):
                params = _risk_params(cfg, float(cost))
                reports.extend(_baseline_reports(kind, opts, data, params, int(seed)))

    csv_path = out / "reports.csv"
    ev.write_csv(reports, csv_path)
    doc = {"config_hash": chash, "rows": len(reports),
           "reports": [r.to_row() for r in reports]}
    if oracle_info:
        doc["oracle"] = oracle_info
    (out / "reports.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n",
                                      encoding="utf-8")
    print(f"wrote {csv_path} ({len(reports)} rows)")
    if oracle_info:
        for key, info in sorted(oracle_info.items()):
            print(f"oracle {key}: agreement {info['agreement']:.4f}, "
                  f"oracle AAPR {info['oracle_aapr']:.6f}, "
                  f"policy AAPR {info['policy_aapr']:.6f}")
    return 0


def cmd_sweep(cfg: dict, force: bool, baselines) -> int:
    """gen (if needed) + fit + eval across all seeds and costs, one CSV."""
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    missing = []
    for seed in cfg["seeds"]:
        for split in _split_sizes(cfg):
            if not (out / (_data_stem(cfg, int(seed), split) + ".fbds")).exists():
                missing.append(seed)
                break
    if missing and not str(cfg["dataset"]).endswith(".fbds"):
        cmd_gen(cfg)
    if cfg["statistic"] == "dre":
        for seed in cfg["seeds"]:
            if not _dre_path(cfg, int(seed)).exists():
                cmd_train_dre(cfg)
                break
    cmd_fit(cfg)
    return cmd_eval(cfg, force, baselines, with_oracle=False)


def cmd_oracle(cfg: dict) -> int:
    if cfg["dataset"] != "bernoulli":
        raise ConfigError("oracle requires dataset=bernoulli")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    b = cfg["bernoulli"]
    doc = {"config_hash": config_hash(cfg), "costs": {}}
    for cost in cfg["costs"]:
        params = _risk_params(cfg, float(cost))
        oracle = ev.dp_oracle(float(b["p0"]), float(b["p1"]), params.priors,
                              params, int(b["horizon"]))
        stops = {str(t): oracle.stop[t].astype(int).tolist()
                 for t in range(1, oracle.horizon + 1)}
        doc["costs"][repr(float(cost))] = {"aapr": oracle.aapr, "stop": stops}
        print(f"oracle cost {cost}: exact AAPR {oracle.aapr!r}")
    path = out / "oracle.json"
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="firmbound",
        description="Learn and evaluate cost-aware stopping boundaries for "
                    "sequential classification.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--dataset", help="dataset name or .fbds path")
        p.add_argument("--statistic", choices=["analytic", "dre"])
        p.add_argument("--regressor", choices=["cfl", "gp"])
        p.add_argument("--scale", choices=["desk", "paper"])
        p.add_argument("--cost", action="append", type=float,
                       help="observation cost (repeatable)")
        p.add_argument("--seed", action="append", type=int,
                       help="experiment seed (repeatable)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int,
                       help="worker cap; outputs do not depend on it")

    for name in ("gen", "train-dre", "fit", "oracle"):
        common(sub.add_parser(name))
    for name in ("eval", "sweep"):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--force", action="store_true",
                       help="skip config/dataset hash verification")
        p.add_argument("--baseline", action="append", default=[],
                       help="static:grid=N | tapering:grid=N,kappa=X | random")
        if name == "eval":
            p.add_argument("--oracle", action="store_true",
                           help="bernoulli only: compare against the exact oracle")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "gen":
            return cmd_gen(cfg)
        if args.command == "train-dre":
            return cmd_train_dre(cfg)
        if args.command == "fit":
            return cmd_fit(cfg)
        if args.command == "eval":
            return cmd_eval(cfg, args.force, args.baseline, args.oracle)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.force, args.baseline)
        if args.command == "oracle":
            return cmd_oracle(cfg)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvalidInputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except DataIOError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
