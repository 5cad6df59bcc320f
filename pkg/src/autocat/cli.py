"""Command-line driver: deterministic runs, CSV data and JSON reports.

Every command is fully determined by (config, seed); data files are
byte-identical across reruns.  Each output file gets a `<name>.meta.json`
sidecar echoing the command, config, seed and version, which is enough to
reproduce the run.

Exit codes: 0 success/check passed, 1 check failed, 2 usage or config
error, 3 event cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import metadata as _metadata

import numpy as np

from .analytic import stationary_mixture
from .model import (
    ConfigError,
    EventCapError,
    HypothesisError,
    ReactionNetwork,
    network_from_config,
)
from .simulate import (
    ensemble_sample,
    event_cap_from_env,
    simulate_trajectory,
    write_ensemble_csv,
    write_trajectory_csv,
)
from .scaling import scaling_sweep, write_sweep_csv
from .verify import (
    drift_report,
    lumpability_check,
    master_equation_sweep,
    moment_zscore_report,
    oracle_comparison,
)

try:
    __version__ = _metadata.version("autocat")
except _metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0+src"


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")


def default_initial_state(net: ReactionNetwork) -> np.ndarray:
    """Rounded stationary mean lambda_i/delta_i (the fluid equilibrium)."""
    return np.maximum(np.round(net.lam / net.delta), 0).astype(np.int64)


def _write_sidecar(out_path: str, command: str, config: dict, seed: int,
                   extra: dict, wall_time: float) -> None:
    meta = {
        "command": command,
        "config": config,
        "seed": int(seed),
        "version": __version__,
        "wall_time_s": wall_time,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    meta.update(extra)
    with open(str(out_path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def _emit_report(report, out: str | None) -> int:
    text = report.to_json(indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report.passed else 1


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    net = network_from_config(config)
    x0 = default_initial_state(net)
    cap = event_cap_from_env()
    t0 = time.perf_counter()
    if args.trajectories > 1:
        ens = ensemble_sample(net, x0, args.time, args.trajectories,
                              args.seed, event_cap=cap)
        if args.format == "json":
            payload = {"end_states": ens.end_states.tolist(),
                       "seeds": [int(s) for s in ens.seeds],
                       "config": ens.config}
            with open(args.out, "w") as fh:
                json.dump(payload, fh)
                fh.write("\n")
        else:
            write_ensemble_csv(ens, args.out)
        extra = {"n_traj": args.trajectories, "T": args.time,
                 "x0": x0.tolist(), "output": str(args.out)}
    else:
        traj = simulate_trajectory(net, x0, args.time, args.seed,
                                   event_cap=cap)
        if args.format == "json":
            payload = {"times": traj.times.tolist(),
                       "states": traj.states.tolist(),
                       "initial_state": traj.initial_state.tolist(),
                       "end_time": traj.end_time, "seed": traj.seed}
            with open(args.out, "w") as fh:
                json.dump(payload, fh)
                fh.write("\n")
        else:
            write_trajectory_csv(traj, args.out)
        extra = {"n_events": traj.n_events, "T": args.time,
                 "x0": x0.tolist(), "output": str(args.out)}
    _write_sidecar(args.out, "simulate", config, args.seed, extra,
                   time.perf_counter() - t0)
    return 0


def cmd_verify(args) -> int:
    config = _load_config(args.config)
    net = network_from_config(config)
    t0 = time.perf_counter()
    if args.which == "lumpability":
        report = lumpability_check(net, args.n_max)
    elif args.which == "master-eq":
        ms = stationary_mixture(net)
        report = master_equation_sweep(net, ms.conditional, args.n_max)
    elif args.which == "drift":
        report = drift_report(net, args.scan)
    elif args.which == "oracle":
        ms = stationary_mixture(net)
        report = oracle_comparison(net, ms, args.n or 25)
    else:  # moments
        ms = stationary_mixture(net)
        V = float(config.get("volume", {}).get("V", 1.0))
        x0 = default_initial_state(net)
        ens = ensemble_sample(net, x0, args.time, args.trajectories,
                              args.seed, event_cap=event_cap_from_env())
        report = moment_zscore_report(ens, ms, V)
    code = _emit_report(report, args.out)
    if args.out:
        _write_sidecar(args.out, f"verify {args.which}", config, args.seed,
                       {"passed": report.passed}, time.perf_counter() - t0)
    return code


def cmd_sweep(args) -> int:
    config = _load_config(args.config)
    try:
        volumes = [float(v) for v in args.volumes.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad volume grid: {args.volumes!r}")
    if not volumes:
        raise ConfigError("volume grid is empty")
    vol = config.get("volume")
    if not vol:
        raise ConfigError("sweep needs a config with a volume object "
                          "(kappa_prime, lambda_prime, delta_prime)")
    t0 = time.perf_counter()
    sweep = scaling_sweep(vol["kappa_prime"], vol["lambda_prime"],
                          vol["delta_prime"], volumes,
                          int(config["dimension"]), config["topology"],
                          reference_n=args.n)
    write_sweep_csv(sweep, args.out)
    _write_sidecar(args.out, "sweep", config, args.seed,
                   {"volumes": volumes, "output": str(args.out)},
                   time.perf_counter() - t0)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autocat",
        description="Autocatalytic network simulator and verifier")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="network config JSON")
        p.add_argument("--seed", type=int, default=0, help="64-bit seed")
        p.add_argument("--out", default=None, help="output path")

    p = sub.add_parser("simulate", help="trajectory or ensemble CSV")
    common(p)
    p.add_argument("--time", type=float, default=50.0, help="horizon T")
    p.add_argument("--trajectories", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_simulate, needs_out=True)

    p = sub.add_parser("verify", help="run one verification check")
    p.add_argument("which", choices=("lumpability", "master-eq", "drift",
                                     "oracle", "moments"))
    common(p)
    p.add_argument("--n-max", type=int, default=30, dest="n_max")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--scan", type=int, default=100)
    p.add_argument("--time", type=float, default=50.0)
    p.add_argument("--trajectories", type=int, default=10_000)
    p.set_defaults(func=cmd_verify, needs_out=False)

    p = sub.add_parser("sweep", help="volume-scaling sweep CSV")
    common(p)
    p.add_argument("--volumes", required=True,
                   help="comma-separated volume grid")
    p.add_argument("--n", type=int, default=None,
                   help="reference total for flatness/corner mass")
    p.set_defaults(func=cmd_sweep, needs_out=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "needs_out", False) and not args.out:
        parser.exit(2, "error: --out is required for this command\n")
    try:
        return args.func(args)
    except EventCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, HypothesisError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
