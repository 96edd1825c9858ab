"""Experiment command line: dataset generation, training runs, transition
sweeps, and report consolidation.

Subcommands: generate, train, sweep-transition, report. Options can also be
supplied through a flat key=value config file (--config); explicit flags win.
The MORPHLAB_OUT environment variable sets the default output root.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical
failure, 5 partial report.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import data
from .errors import (ConfigurationError, DatasetParseError, MorphlabError,
                     NumericalFailureError)
from .runlog import read_metrics_csv, write_metrics_csv
from .training import TrainConfig, run_default, run_morph, run_small_loss

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4
EXIT_PARTIAL = 5

REPORT_HEADER = ("run,seed,epoch,phase,train_loss,test_error,mr,mp,lr,lp,f1,"
                 "tau_hat,mem_size,safe_size,learn_rate,ramp_w")


@dataclass
class ExperimentSpec:
    """Fully resolved experiment description (dataset + training + execution)."""
    method: str = "morph"
    k: int = 10
    n_per_class: int = 300
    n_test_per_class: int = 100
    dim: int = 16
    spread: float = 1.1
    cluster_std: float = 1.0
    noise_type: str = "symmetric"
    tau: float = 0.4
    epochs: int = 100
    batch_size: int = 128
    lr0: float = 0.2
    momentum: float = 0.9
    q: int = 10
    w_max: float = 5.0
    ramp_epochs: int = 20
    warmup: int = 5
    alpha_offset: float = 0.0        # percentage points added to tau_hat
    jitter_std: float = 0.1
    hidden: tuple = (256, 256)
    keep_fraction: Optional[float] = None
    regularization: bool = True
    seed: int = 1
    repeat: int = 1
    out: str = field(default_factory=lambda: os.environ.get("MORPHLAB_OUT", "."))

    def validate(self):
        if self.method not in ("morph", "default", "small_loss"):
            raise ConfigurationError(f"method: unknown value {self.method!r}")
        if self.noise_type not in ("none", "symmetric", "asymmetric"):
            raise ConfigurationError(f"noise_type: unknown value {self.noise_type!r}")
        if not 0.0 <= self.tau < 1.0:
            raise ConfigurationError("tau: must be in [0, 1)")
        if self.repeat < 1:
            raise ConfigurationError("repeat: must be >= 1")
        self.train_config(self.seed).validate()
        return self

    def train_config(self, seed):
        return TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size, lr0=self.lr0,
            momentum=self.momentum, q=self.q, w_max=self.w_max,
            ramp_epochs=self.ramp_epochs, warmup_epochs_min=self.warmup,
            transition_offset=self.alpha_offset / 100.0,
            jitter_std=self.jitter_std, seed=seed,
            regularization=self.regularization,
            hidden_dims=tuple(self.hidden))

    def datasets(self, seed):
        return data.make_benchmark_pair(
            k=self.k, n_train_per_class=self.n_per_class,
            n_test_per_class=self.n_test_per_class, dim=self.dim,
            center_spread=self.spread, cluster_std=self.cluster_std,
            noise_type=self.noise_type, tau=self.tau, seed=seed)

    def as_flat_dict(self):
        d = {}
        for k, v in vars(self).items():
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            d[k] = v
        return d


def _write_config(spec, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in spec.as_flat_dict().items():
            fh.write(f"{k}={v}\n")


def read_config_file(path):
    """Flat key=value file -> dict of raw string values."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


_SPEC_FIELDS = {f.name: f for f in ExperimentSpec.__dataclass_fields__.values()}


def _coerce(key, raw):
    if key not in _SPEC_FIELDS:
        raise ConfigurationError(f"unknown config key {key!r}")
    current = getattr(ExperimentSpec(), key)
    if key == "hidden":
        return tuple(int(x) for x in str(raw).split(",") if x)
    if key == "keep_fraction":
        return None if raw in (None, "", "none") else float(raw)
    if key == "regularization":
        return str(raw).lower() in ("1", "true", "yes")
    if isinstance(current, bool):
        return str(raw).lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return str(raw)


def build_spec(args):
    """ExperimentSpec from defaults < config file < explicit flags."""
    spec = ExperimentSpec()
    if getattr(args, "config", None):
        for key, raw in read_config_file(args.config).items():
            setattr(spec, key, _coerce(key, raw))
    for key in _SPEC_FIELDS:
        val = getattr(args, key, None)
        if val is not None:
            setattr(spec, key, _coerce(key, val))
    return spec.validate()


def _warn_ignored(spec):
    if spec.method == "default" and (spec.w_max != 0.0 or spec.alpha_offset != 0.0):
        print("warning: w_max/alpha_offset are ignored for method=default",
              file=sys.stderr)
    if spec.method != "small_loss" and spec.keep_fraction is not None:
        print("warning: keep_fraction is ignored unless method=small_loss",
              file=sys.stderr)


def _run_one(spec, seed):
    train, test = spec.datasets(seed)
    cfg = spec.train_config(seed)
    if spec.method == "morph":
        return run_morph(train, test, cfg)
    if spec.method == "default":
        return run_default(train, test, cfg)
    return run_small_loss(train, test, cfg, keep_fraction=spec.keep_fraction)


def cmd_generate(spec):
    os.makedirs(spec.out, exist_ok=True)
    train, test = spec.datasets(spec.seed)
    data.save_csv(train, os.path.join(spec.out, "train.csv"))
    data.save_csv(test, os.path.join(spec.out, "test.csv"))
    flips = int(np.count_nonzero(train.noisy_labels != train.true_labels))
    if spec.noise_type == "symmetric":
        T = data.symmetric_matrix(spec.k, spec.tau).entries.tolist()
    elif spec.noise_type == "asymmetric":
        T = data.asymmetric_matrix(spec.k, spec.tau).entries.tolist()
    else:
        T = np.eye(spec.k).tolist()
    manifest = {
        "k": spec.k, "dim": spec.dim, "noise_type": spec.noise_type,
        "tau": spec.tau, "seed": spec.seed, "flip_count": flips,
        "n_train": train.n, "n_test": test.n, "transition_matrix": T,
    }
    with open(os.path.join(spec.out, "manifest.json"), "w",
              encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote train/test CSVs and manifest to {spec.out}")
    return EXIT_OK


def train_seeds(spec, out_dir):
    """Run repeat seeds, write per-seed metrics CSVs + summary; returns summary."""
    os.makedirs(out_dir, exist_ok=True)
    _write_config(spec, os.path.join(out_dir, "config.txt"))
    best_errors, final_f1s, t_trs = [], [], []
    for seed in range(spec.seed, spec.seed + spec.repeat):
        result = _run_one(spec, seed)
        write_metrics_csv(os.path.join(out_dir, f"metrics_seed{seed}.csv"),
                          result.metrics)
        if result.safe_set is not None:
            result.safe_set.write_indices(
                os.path.join(out_dir, f"safe_set_seed{seed}.txt"))
        best_errors.append(result.best_test_error)
        final = result.metrics[-1]
        final_f1s.append(final.f1)
        t_trs.append(result.t_tr_epoch)
    summary = {
        "method": spec.method,
        "noise_type": spec.noise_type,
        "tau": spec.tau,
        "seeds": list(range(spec.seed, spec.seed + spec.repeat)),
        "best_test_errors": best_errors,
        "best_test_error_mean": float(np.mean(best_errors)),
        "best_test_error_std": float(np.std(best_errors)),
        "final_f1": final_f1s,
        "final_f1_mean": (float(np.mean([f for f in final_f1s if f is not None]))
                          if any(f is not None for f in final_f1s) else None),
        "t_tr_epochs": t_trs,
        "no_transition_seeds": [s for s, t in zip(
            range(spec.seed, spec.seed + spec.repeat), t_trs)
            if spec.method == "morph" and t is None],
    }
    with open(os.path.join(out_dir, "summary.json"), "w",
              encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def cmd_train(spec):
    _warn_ignored(spec)
    summary = train_seeds(spec, spec.out)
    print(f"{spec.method}: best test error "
          f"{summary['best_test_error_mean']:.4f} "
          f"+/- {summary['best_test_error_std']:.4f} over "
          f"{spec.repeat} seed(s); output in {spec.out}")
    return EXIT_OK


def cmd_sweep_transition(spec, offsets):
    if spec.method != "morph":
        raise ConfigurationError("sweep-transition requires method=morph")
    os.makedirs(spec.out, exist_ok=True)
    table = []
    for off in offsets:
        sub = ExperimentSpec(**{**vars(spec), "alpha_offset": off,
                                "out": spec.out})
        sub.validate()
        out_dir = os.path.join(spec.out, f"offset_{off:+g}pp")
        summary = train_seeds(sub, out_dir)
        table.append((off, summary["best_test_error_mean"],
                      summary["t_tr_epochs"]))
    lines = ["offset_pp,best_test_error_mean"]
    for off, err, _ in table:
        lines.append(f"{off:+g},{err:.6f}")
    with open(os.path.join(spec.out, "sweep.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    for off, err, ttrs in table:
        print(f"offset {off:+6.1f}pp: mean best test error {err:.4f} "
              f"(t_tr epochs {ttrs})")
    return EXIT_OK


def cmd_report(run_dirs, out_path):
    rows = []
    failures = []
    for run_dir in run_dirs:
        csvs = sorted(f for f in (os.listdir(run_dir)
                                  if os.path.isdir(run_dir) else [])
                      if f.startswith("metrics_seed") and f.endswith(".csv"))
        if not csvs:
            failures.append(f"{run_dir}: no metrics CSVs")
            continue
        name = os.path.basename(os.path.normpath(run_dir))
        for f in csvs:
            seed = f[len("metrics_seed"):-len(".csv")]
            try:
                metrics = read_metrics_csv(os.path.join(run_dir, f))
            except (DatasetParseError, OSError) as exc:
                failures.append(f"{run_dir}/{f}: {exc}")
                continue
            from .runlog import format_row
            for m in metrics:
                rows.append(f"{name},{seed},{format_row(m)}")
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(REPORT_HEADER + "\n")
        for r in rows:
            fh.write(r + "\n")
    print(f"report: {len(rows)} rows -> {out_path}")
    if failures:
        for f in failures:
            print(f"skipped: {f}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _add_spec_flags(p, include_method=True):
    p.add_argument("--config", help="flat key=value config file")
    if include_method:
        p.add_argument("--method", choices=["morph", "default", "small_loss"])
    p.add_argument("--k", type=int)
    p.add_argument("--n-per-class", dest="n_per_class", type=int)
    p.add_argument("--n-test-per-class", dest="n_test_per_class", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--spread", type=float)
    p.add_argument("--cluster-std", dest="cluster_std", type=float)
    p.add_argument("--noise-type", dest="noise_type",
                   choices=["none", "symmetric", "asymmetric"])
    p.add_argument("--tau", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr0", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--q", type=int)
    p.add_argument("--w-max", dest="w_max", type=float)
    p.add_argument("--ramp-epochs", dest="ramp_epochs", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--alpha-offset", dest="alpha_offset", type=float,
                   help="percentage points added to the estimated noise rate")
    p.add_argument("--jitter-std", dest="jitter_std", type=float)
    p.add_argument("--hidden", help="comma-separated hidden layer sizes")
    p.add_argument("--keep-fraction", dest="keep_fraction", type=float)
    p.add_argument("--no-regularization", dest="regularization",
                   action="store_const", const="false")
    p.add_argument("--repeat", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default $MORPHLAB_OUT)")


def make_parser():
    parser = argparse.ArgumentParser(
        prog="morphlab", description="noisy-label training experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write train/test dataset CSVs")
    _add_spec_flags(p, include_method=False)

    p = sub.add_parser("train", help="run an experiment over repeated seeds")
    _add_spec_flags(p)

    p = sub.add_parser("sweep-transition",
                       help="sweep the transition offset (morph only)")
    _add_spec_flags(p)
    p.add_argument("--offsets", default="10,5,0,-5,-10",
                   help="comma-separated offsets in percentage points")

    p = sub.add_parser("report", help="merge run directories into one CSV")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--out", default="report.csv")
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args.run_dirs, args.out)
        spec = build_spec(args)
        if args.command == "generate":
            return cmd_generate(spec)
        if args.command == "train":
            return cmd_train(spec)
        offsets = [float(x) for x in args.offsets.split(",")]
        return cmd_sweep_transition(spec, offsets)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, DatasetParseError, MorphlabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
