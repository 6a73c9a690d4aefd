#!/usr/bin/env python3
"""Generate a small exp4+exp5+exp10 run corpus.

Used for plotting-pipeline development and fixtures: same directory layout
and manifests as `nexus-sim exp`, with shrunken scenarios so the output
stays a few hundred kilobytes.
"""

import argparse
import json
import os
from dataclasses import replace

from nexus_sim.config import PoolConfig
from nexus_sim.engine import run_scenario, write_outputs
from nexus_sim.presets import experiment_preset


def shrink(cfg, rounds):
    n_gpu = max(6, cfg.pools.gpu // 4)
    n_cpu = max(6, cfg.pools.cpu // 4) if cfg.pools.cpu else 0
    k = min(cfg.k_train, max(3, n_gpu // 2))
    sybil = replace(cfg.sybil, count=cfg.sybil.count // 4,
                    injection_round=min(cfg.sybil.injection_round, rounds // 3))
    return replace(
        cfg,
        rounds=rounds,
        pools=PoolConfig(gpu=n_gpu, cpu=n_cpu),
        k_train=k,
        min_updates=min(cfg.min_updates, k) if cfg.min_updates else 0,
        learner=replace(cfg.learner, n_examples=max(900, cfg.learner.n_examples // 4)),
        sybil=sybil,
    )


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="demo-runs")
    parser.add_argument("--seeds", type=int, default=2)
    parser.add_argument("--rounds", type=int, default=16)
    args = parser.parse_args()

    for exp_id in ("exp4", "exp5", "exp10"):
        spec = experiment_preset(exp_id)
        out_root = os.path.join(args.out, exp_id)
        os.makedirs(out_root, exist_ok=True)
        seeds = 1 if exp_id == "exp5" else args.seeds
        manifest = {"experiment": exp_id, "title": spec.title, "scale": 0,
                    "seeds": seeds, "arms": {}}
        for arm_name, cfg in spec.arms:
            small = shrink(cfg, args.rounds)
            run_dirs = []
            for k in range(seeds):
                run_dir = os.path.join(out_root, arm_name, f"seed{k}")
                write_outputs(run_scenario(replace(small, seed=small.seed + k)), run_dir)
                run_dirs.append(os.path.relpath(run_dir, out_root))
            manifest["arms"][arm_name] = run_dirs
            print(f"{exp_id}/{arm_name}: done")
        with open(os.path.join(out_root, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2)


if __name__ == "__main__":
    main()
