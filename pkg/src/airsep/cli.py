"""Command-line surface: network/scenario generation, training, evaluation."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import evaluation, network as netmod, scenario as scenmod
from .agent import SacdAgent
from .config import ConfigError, default_config_text, load_config
from .harness import (AsyncHarness, HarnessConfig, MetricsWriter,
                      ScenarioStream, SyncHarness)
from .nn import CheckpointError


def _out_dir(args) -> Path:
    out = Path(os.environ.get("AIRSEP_OUT", args.out))
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airsep",
        description="corridor traffic separation assurance: simulate, train, evaluate")
    parser.add_argument("--config", type=Path, default=None,
                        help="flat key-value configuration file")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--workers", type=int, default=None,
                        help="rollout worker count override")
    parser.add_argument("--out", type=Path, default=Path("out"),
                        help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-network", help="generate a corridor network file")
    p.add_argument("--topology", choices=("grid", "ring-radial", "crossing"),
                   default=None)
    p.add_argument("--vertiports", type=int, default=None)

    p = sub.add_parser("gen-scenario", help="generate a demand scenario file")
    p.add_argument("--network", type=Path, default=None,
                   help="network file (default: generate from config)")
    p.add_argument("--fleet", type=int, default=None)
    p.add_argument("--duration", type=float, default=None)

    p = sub.add_parser("train", help="train the separation policy")
    p.add_argument("--checkpoint", type=Path, default=None,
                   help="resume from this checkpoint stem")

    p = sub.add_parser("evaluate", help="evaluate a checkpoint vs. the paired baseline")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--episodes", type=int, default=None)

    p = sub.add_parser("sweep", help="sensitivity sweep over one stressor axis")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--axis", choices=evaluation.SWEEP_AXES, required=True)
    p.add_argument("--values", required=True, help="comma-separated axis values")

    p = sub.add_parser("report", help="render a machine-readable results table")
    p.add_argument("results", type=Path)

    sub.add_parser("print-config", help="print the full default configuration")
    return parser


def _network_from_config(cfg, seed, topology=None):
    topology = topology or cfg.network.topology
    if topology == "crossing":
        return netmod.crossing_network(parking=cfg.network.parking,
                                       lanes=cfg.network.lanes)
    netcfg = cfg.network
    netcfg.topology = topology
    return netmod.generate_network(netcfg, seed)


def run(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.train.seed
    if args.workers is not None:
        cfg.harness.workers = args.workers
    cfg.harness.seed = seed

    if args.command == "print-config":
        sys.stdout.write(default_config_text())
        return 0

    out = _out_dir(args)

    if args.command == "gen-network":
        if args.vertiports is not None:
            cfg.network.n_vertiports = args.vertiports
        net = _network_from_config(cfg, seed, args.topology)
        path = out / "network.txt"
        netmod.save_network(net, path)
        print(f"wrote {path}")
        return 0

    if args.command == "gen-scenario":
        if args.network:
            net = netmod.load_network(args.network)
        else:
            net = _network_from_config(cfg, seed)
        fleet = args.fleet if args.fleet is not None else cfg.scenario.fleet_size
        duration = (args.duration if args.duration is not None
                    else cfg.scenario.duration)
        scen = scenmod.generate_scenario(net, fleet, duration, cfg.p_comm,
                                         cfg.p_equip, seed, cfg.scenario)
        path = out / "scenario.txt"
        scenmod.save_scenario(scen, path)
        print(f"wrote {path} ({len(scen.demands)} demands)")
        return 0

    if args.command == "train":
        net = _network_from_config(cfg, seed)
        agent = SacdAgent(cfg.agent, seed=seed)
        metrics = MetricsWriter(out / "metrics.txt")
        stem = out / "checkpoint"
        if cfg.train.mode == "async":
            harness = AsyncHarness(agent, net, cfg.scenario, cfg.harness,
                                   p_comm=cfg.p_comm, p_equip=cfg.p_equip)
            with harness:
                harness.learner_loop(cfg.train.learner_steps, metrics)
            agent.save(stem)
        else:
            stream = ScenarioStream(net, cfg.scenario, cfg.p_comm, cfg.p_equip,
                                    base_seed=seed)
            harness = SyncHarness(agent, stream, cfg.harness)
            if args.checkpoint:
                harness.restore(args.checkpoint)
            harness.run(cfg.train.iterations, metrics)
            harness.checkpoint(stem)
        metrics.close()
        print(f"wrote {stem}.json / {stem}.bin "
              f"(env steps {harness.counter.env_steps}, "
              f"learner steps {harness.counter.learner_steps})")
        return 0

    if args.command == "evaluate":
        actor = evaluation.load_actor(args.checkpoint)
        net = _network_from_config(cfg, seed)
        evcfg = cfg.eval
        if args.episodes is not None:
            evcfg.episodes = args.episodes
        evcfg.seed = seed
        report = evaluation.evaluate(actor, net, evcfg)
        path = out / "results.txt"
        evaluation.write_results([report], path)
        print(evaluation.render_report(evaluation.read_results(path)))
        print(f"wrote {path}")
        return 0

    if args.command == "sweep":
        actor = evaluation.load_actor(args.checkpoint)
        net = _network_from_config(cfg, seed)
        values = [v for v in args.values.split(",") if v]
        cfg.eval.seed = seed
        reports = evaluation.sweep(actor, net, args.axis, values, cfg.eval)
        path = out / f"sweep_{args.axis}.txt"
        evaluation.write_results(reports, path)
        print(evaluation.render_report(evaluation.read_results(path)))
        print(f"wrote {path}")
        return 0

    if args.command == "report":
        rows = evaluation.read_results(args.results)
        print(evaluation.render_report(rows))
        return 0

    raise AssertionError(f"unhandled command {args.command}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return run(args)
    except (ConfigError, CheckpointError, FileNotFoundError,
            evaluation.EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
