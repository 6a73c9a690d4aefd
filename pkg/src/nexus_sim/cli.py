"""Command line interface.

    nexus-sim run --config scenario.yaml [--seed N] --out DIR
    nexus-sim exp exp1..exp10 [--scale N] [--seeds K] --out DIR
    nexus-sim validate-config scenario.yaml

Seed precedence: the NEXUS_SIM_SEED environment variable overrides
everything, then --seed, then the config file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import network
from .config import ConfigError, load_config
from .engine import build_state, run_scenario, write_outputs
from .presets import EXPERIMENT_IDS, experiment_preset
from .rng import substream


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, seed_override=args.seed)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    metrics = run_scenario(cfg)
    write_outputs(metrics, args.out)
    print(f"wrote {args.out} (success rate {metrics.success_rate():.3f})")
    return 0


def _infrastructure_stats(cfg, n_lookups: int = 1000) -> dict:
    """Routing and gossip statistics for a freshly built overlay."""
    state = build_state(cfg)
    rng = state.rng("infra")
    ids = state.net.alive_ids()
    hops = []
    for _ in range(n_lookups):
        a, b = rng.choice(len(ids), size=2, replace=False)
        _, h = network.lookup(state.net, ids[a], ids[b], alpha=cfg.dht_alpha, k=cfg.dht_k)
        hops.append(h)
    trace = network.gossip_broadcast(
        state.net, ids[int(rng.integers(0, len(ids)))],
        fanout=cfg.gossip_fanout, ttl=cfg.gossip_ttl,
        rng=rng, rounds=max(cfg.gossip_ttl, 4),
    )
    rounds_to_99 = next((i + 1 for i, c in enumerate(trace) if c >= 0.99), 0)
    return {
        "nodes": len(ids),
        "mean_lookup_hops": float(np.mean(hops)),
        "log2_ceiling": int(np.ceil(np.log2(len(ids)))),
        "gossip_coverage_by_round": [round(c, 4) for c in trace],
        "gossip_rounds_to_99": rounds_to_99,
    }


def _cmd_exp(args) -> int:
    spec = experiment_preset(args.experiment, scale=args.scale)
    out_root = os.path.join(args.out, spec.exp_id)
    os.makedirs(out_root, exist_ok=True)
    manifest = {"experiment": spec.exp_id, "title": spec.title, "scale": args.scale,
                "seeds": args.seeds, "arms": {}}
    for arm_name, cfg in spec.arms:
        arm_dir = os.path.join(out_root, arm_name)
        run_dirs = []
        for k in range(args.seeds):
            run_cfg = replace(cfg, seed=cfg.seed + k)
            run_dir = os.path.join(arm_dir, f"seed{k}")
            metrics = run_scenario(run_cfg)
            write_outputs(metrics, run_dir)
            run_dirs.append(os.path.relpath(run_dir, out_root))
        manifest["arms"][arm_name] = run_dirs
        print(f"{spec.exp_id}/{arm_name}: {args.seeds} run(s) done")
    if spec.exp_id == "exp7":
        infra = {name: _infrastructure_stats(cfg) for name, cfg in spec.arms}
        with open(os.path.join(out_root, "infrastructure.json"), "w") as fh:
            json.dump(infra, fh, indent=2)
        print(f"{spec.exp_id}: infrastructure stats written")
    with open(os.path.join(out_root, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    print(f"wrote {out_root}")
    return 0


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config, seed_override=args.seed)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 2
    print(f"ok: {args.config} (seed {cfg.seed}, {cfg.rounds} rounds, "
          f"{cfg.pools.total} nodes)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nexus-sim",
        description="Deterministic simulator for reputation-driven decentralized FL",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario config")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", required=True)
    run.set_defaults(func=_cmd_run)

    exp = sub.add_parser("exp", help="run an experiment preset")
    exp.add_argument("experiment", choices=EXPERIMENT_IDS)
    exp.add_argument("--scale", type=int, default=1)
    exp.add_argument("--seeds", type=int, default=1)
    exp.add_argument("--out", required=True)
    exp.set_defaults(func=_cmd_exp)

    val = sub.add_parser("validate-config", help="validate a scenario config")
    val.add_argument("config")
    val.add_argument("--seed", type=int, default=None)
    val.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
