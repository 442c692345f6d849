"""Command-line entry point.

Subcommands
-----------
optimize <config.yaml>      tune generator parameters on an environment
evaluate <record.json>      re-run a stored solution deterministically
robustness <record.json> <sweep.yaml>   sensor-corruption / disturbance sweep
metrics <csv-dir>           aggregate run CSVs into normalized statistics
bridge-check <endpoint>     handshake an external-task server

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import metrics, perturb, runner
from .envs import BridgeError, make_env
from .envs.bridge import open_channel
from .oscillators import PolicyVariant
from .rollout import make_open_loop_policy
from .runner import ConfigError, ExperimentConfig, RunRecord


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="osclab")
    sub = parser.add_subparsers(dest="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the master seed")
    common.add_argument("--out", type=str, default=None, help="output directory")
    common.add_argument("--jobs", type=int, default=None, help="parallel candidate evaluations")

    p_opt = sub.add_parser("optimize", parents=[common])
    p_opt.add_argument("config", type=str)
    p_opt.add_argument("--print-config", action="store_true",
                       help="print the resolved configuration and exit")

    p_eval = sub.add_parser("evaluate", parents=[common])
    p_eval.add_argument("record", type=str)
    p_eval.add_argument("--seeds", type=str, default=None, help="comma-separated seeds")

    p_rob = sub.add_parser("robustness", parents=[common])
    p_rob.add_argument("record", type=str)
    p_rob.add_argument("sweep_config", type=str)

    p_met = sub.add_parser("metrics", parents=[common])
    p_met.add_argument("csv_dir", type=str)
    p_met.add_argument("--min-method", type=str, default="random")
    p_met.add_argument("--max-method", type=str, default="open_loop_full")

    p_bridge = sub.add_parser("bridge-check", parents=[common])
    p_bridge.add_argument("endpoint", type=str)
    return parser


def _cmd_optimize(args) -> int:
    config = ExperimentConfig.from_yaml(args.config)
    if args.seed is not None:
        config.seeds = (args.seed,)
    if args.jobs is not None:
        config.jobs = args.jobs
    if args.out is not None:
        config.out_dir = args.out
    config = config.resolved()
    if args.print_config:
        sys.stdout.write(config.to_yaml())
        return 0
    out_dir = Path(config.out_dir or "runs") / config.config_hash()
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    failed = False
    for record in runner.optimize_all(config):
        record.save(out_dir / f"record_seed{record.seed}.json")
        rows.extend(runner.generation_rows(config, record))
        status = "aborted" if record.aborted else (
            "incomplete" if record.incomplete else "ok"
        )
        print(
            f"seed {record.seed}: best {record.best_fitness:.6g} "
            f"({len(record.best_per_generation)} generations, "
            f"{record.env_steps} env steps, {status})"
        )
        failed = failed or record.aborted is not None
    metrics.write_scores_csv(out_dir / "generations.csv", rows)
    print(f"records written to {out_dir}")
    return 2 if failed else 0


def _cmd_evaluate(args) -> int:
    record = RunRecord.load(args.record)
    seeds = (
        [int(s) for s in args.seeds.split(",")]
        if args.seeds
        else [record.best_episode_seed if record.best_episode_seed is not None else 0]
    )
    env = make_env(record.env)
    row = runner.env_defaults(record.env)
    result = runner.evaluate(
        record.oscillator_params(),
        PolicyVariant(record.variant),
        env,
        seeds,
        gains=row.pd,
        qpos_indices=row.qpos_indices,
        qvel_indices=row.qvel_indices,
    )
    for seed, value in zip(seeds, result.returns):
        print(f"seed {seed}: return {value!r}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        np.savez(
            out_dir / "actions.npz",
            **{f"seed_{seed}": acts for seed, acts in zip(seeds, result.actions)},
        )
        print(f"action streams written to {out_dir / 'actions.npz'}")
    return 0


def _load_sweep(path) -> tuple[list[int], list[perturb.PerturbationConfig]]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"sweep config not found: {path}")
    with open(path, "r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle) or {}
    seeds = [int(s) for s in data.get("seeds", range(10))]
    blocks = data.get("perturbations")
    if blocks is None:
        return seeds, perturb.default_sweep_configs()
    configs = []
    for block in blocks:
        kind = block.pop("kind", None)
        if kind is None:
            raise ConfigError("each perturbation block needs a 'kind'")
        try:
            configs.append(perturb.PerturbationConfig(kind=kind, **block))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad perturbation block: {exc}") from exc
    return seeds, configs


def _cmd_robustness(args) -> int:
    record = RunRecord.load(args.record)
    seeds, configs = _load_sweep(args.sweep_config)
    if args.seed is not None:
        seeds = [args.seed]
    env = make_env(record.env)
    policy = make_open_loop_policy(
        record.oscillator_params(), PolicyVariant(record.variant), env.spec
    )

    # Anchors: random-policy mean as the floor, unperturbed open-loop as the top.
    from .rollout import rollout

    baseline = [rollout(env, policy, s).episode_return for s in seeds]
    random_returns = runner.random_policy_returns(make_env(record.env), seeds)
    r_min = float(np.mean(random_returns))
    r_max = float(np.max(baseline))
    anchors = {record.env: (r_min, r_max)} if r_max != r_min else None

    report = perturb.robustness_sweep(
        policy,
        lambda: make_env(record.env),
        configs,
        seeds,
        env_name=record.env,
        anchors=anchors,
    )
    scores = dict(report.scores)
    for seed, value in zip(seeds, baseline):
        scores[(record.env, "unperturbed", int(seed))] = value
    out_dir = Path(args.out or Path(args.record).parent / "robustness")
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics.write_scores_csv(
        out_dir / "returns.csv",
        [
            {
                "env": env_name,
                "method": method,
                "variant": record.variant,
                "seed": seed,
                "generation": 0,
                "return": value,
            }
            for (env_name, method, seed), value in sorted(scores.items())
        ],
    )
    metrics.write_report(report, out_dir)
    print(f"robustness report written to {out_dir}")
    return 0


def _cmd_metrics(args) -> int:
    csv_dir = Path(args.csv_dir)
    if not csv_dir.is_dir():
        raise ConfigError(f"not a directory: {csv_dir}")
    paths = sorted(csv_dir.glob("*.csv"))
    if not paths:
        raise ConfigError(f"no CSV files in {csv_dir}")
    rows = metrics.read_scores_csv(paths)
    scores = metrics.final_scores(rows)
    try:
        anchors = metrics.anchors_from_scores(
            scores, min_method=args.min_method, max_method=args.max_method
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = metrics.aggregate(
        metrics.ScoreTable(returns=scores, anchors=anchors),
        improvement_baseline=args.max_method,
    )
    out_dir = Path(args.out or csv_dir / "metrics")
    metrics.write_report(report, out_dir)
    print(f"metrics written to {out_dir}")
    return 0


def _cmd_bridge_check(args) -> int:
    import json as _json

    channel = open_channel(args.endpoint)
    try:
        def ask(obj):
            channel.send(_json.dumps(obj))
            response = _json.loads(channel.recv(10.0))
            if not response.get("ok", False):
                raise BridgeError(response.get("error", "bridge error"))
            return response

        info = ask({"op": "spec"})["spec"]
        for key in ("obs_dim", "act_dim", "control_period"):
            if key not in info:
                raise BridgeError(f"spec response missing {key!r}")
        obs = ask({"op": "reset", "seed": 0})["obs"]
        if len(obs) != info["obs_dim"]:
            raise BridgeError("reset observation length does not match spec")
        step = ask({"op": "step", "action": [0.0] * int(info["act_dim"])})
        for key in ("obs", "reward", "terminated", "truncated"):
            if key not in step:
                raise BridgeError(f"step response missing {key!r}")
        print(
            f"bridge ok: obs_dim={info['obs_dim']} act_dim={info['act_dim']} "
            f"control_period={info['control_period']}"
        )
        return 0
    finally:
        try:
            channel.send(_json.dumps({"op": "close"}))
        except Exception:
            pass
        channel.close()


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map to the config-error code
        # (0 stays 0 so --help behaves).
        return 0 if exc.code == 0 else 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    handlers = {
        "optimize": _cmd_optimize,
        "evaluate": _cmd_evaluate,
        "robustness": _cmd_robustness,
        "metrics": _cmd_metrics,
        "bridge-check": _cmd_bridge_check,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (BridgeError, OSError, RuntimeError, ValueError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
