#!/usr/bin/env python3
"""Grid-search certification of variant-gap baselines on the built-in plants.

Exhaustively evaluates the reduced variants (and the full generator) on a
uniform grid over the production search boxes, at a stated resolution per
axis, and reports the best return found for each variant.  The acceptance
suite freezes these numbers as the reference ceilings that the optimized
full variant must beat by the certified margins.

Run from the repository root:

    python scripts/grid_oracle.py --env crawler --resolution 10
    python scripts/grid_oracle.py --env purcell_swimmer --resolution 10
"""

import argparse
import itertools
import json
import math
import time

import numpy as np

from osclab.envs import make_env
from osclab.oscillators import OscillatorParams, PolicyVariant, precompute_trajectory
from osclab.rollout import TrajectoryPolicy, rollout

TWO_PI = 2.0 * math.pi


def episode_return(env, params, variant):
    trajectory = precompute_trajectory(
        params, variant, env.spec.episode_horizon, env.spec.control_period
    )
    return rollout(env, TrajectoryPolicy(trajectory), seed=0).episode_return


def crawler_grids(resolution):
    amps = np.linspace(-0.5, 0.5, resolution)
    offs = np.linspace(-0.5, 0.5, resolution)
    omegas = np.linspace(TWO_PI * 0.4, TWO_PI * 2.0, resolution)
    return amps, offs, omegas


def certify_crawler(resolution):
    env = make_env("crawler")
    amps, offs, omegas = crawler_grids(resolution)

    best = {"no_swing": (-np.inf, None), "full": (-np.inf, None)}
    for a, b, w in itertools.product(amps, offs, omegas):
        params = OscillatorParams(np.array([a]), np.array([b]), np.array([0.0]), w, w)
        r = episode_return(env, params, PolicyVariant.NO_SWING)
        if r > best["no_swing"][0]:
            best["no_swing"] = (r, {"a": a, "b": b, "omega": w})
    for a, b, ws, wst in itertools.product(amps, offs, omegas, omegas):
        params = OscillatorParams(np.array([a]), np.array([b]), np.array([0.0]), ws, wst)
        r = episode_return(env, params, PolicyVariant.FULL)
        if r > best["full"][0]:
            best["full"] = (r, {"a": a, "b": b, "omega_swing": ws, "omega_stance": wst})
    return best


def certify_purcell(resolution):
    env = make_env("purcell_swimmer")
    phases = np.linspace(0.0, TWO_PI, resolution)
    omegas = np.linspace(TWO_PI * 0.4, TWO_PI * 2.0, resolution)

    best = {"no_phase": (-np.inf, None), "full": (-np.inf, None)}
    for ws, wst in itertools.product(omegas, omegas):
        params = OscillatorParams(
            np.array([1.0, 1.0]), np.zeros(2), np.zeros(2), ws, wst
        )
        r = episode_return(env, params, PolicyVariant.NO_PHASE)
        if r > best["no_phase"][0]:
            best["no_phase"] = (r, {"omega_swing": ws, "omega_stance": wst})
    for phi, ws, wst in itertools.product(phases, omegas, omegas):
        params = OscillatorParams(
            np.array([1.0, 1.0]), np.zeros(2), np.array([0.0, phi]), ws, wst
        )
        r = episode_return(env, params, PolicyVariant.FULL)
        if r > best["full"][0]:
            best["full"] = (r, {"phi_1": phi, "omega_swing": ws, "omega_stance": wst})
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--env", choices=["crawler", "purcell_swimmer"], required=True)
    parser.add_argument("--resolution", type=int, default=10)
    args = parser.parse_args()

    t0 = time.perf_counter()
    if args.env == "crawler":
        best = certify_crawler(args.resolution)
    else:
        best = certify_purcell(args.resolution)
    elapsed = time.perf_counter() - t0

    out = {
        "env": args.env,
        "resolution": args.resolution,
        "elapsed_s": round(elapsed, 1),
    }
    for variant, (value, cfg) in best.items():
        out[variant] = {"best_return": value, "argmax": cfg}
    ratios = {}
    if "no_swing" in best:
        ratios["full_over_no_swing"] = best["full"][0] / best["no_swing"][0]
    if "no_phase" in best and abs(best["no_phase"][0]) > 1e-12:
        ratios["full_over_no_phase"] = best["full"][0] / best["no_phase"][0]
    out["ratios"] = ratios
    print(json.dumps(out, indent=2, default=float))


if __name__ == "__main__":
    main()
