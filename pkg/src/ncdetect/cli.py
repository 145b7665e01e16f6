"""Command line front end: simulate, game, overhead, bench."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import intermac, overhead, protocols, simulator


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ncdetect",
        description="pollution detection for inter-session network coding")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scheme on a topology")
    sim.add_argument("--topology", default="butterfly",
                     help="fixture name (butterfly, four_pair, random_dag) "
                          "or a YAML topology file")
    sim.add_argument("--scheme", default="none", choices=simulator.SCHEMES)
    sim.add_argument("--adversary", default="default",
                     choices=["default", "none"],
                     help="'none' strips the topology's adversary block")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--q", type=int, default=65521)
    sim.add_argument("--gen-size", type=int, default=1)
    sim.add_argument("--data-len", type=int, default=2)
    sim.add_argument("--tag-slots", type=int, default=1)
    sim.add_argument("--report", help="write a JSONL report here")

    game = sub.add_parser("game", help="run a tag-forgery game")
    game.add_argument("--scheme", default="intermac",
                      choices=["intermac", "spacemac"])
    game.add_argument("--q", type=int, default=251)
    game.add_argument("--trials", type=int, default=100_000)
    game.add_argument("--tags", type=int, default=1)
    game.add_argument("--strategy", default="random-tag")
    game.add_argument("--seed", type=int, default=0)

    ov = sub.add_parser("overhead", help="dump one overhead figure as CSV")
    ov.add_argument("--figure", type=int, required=True, choices=[5, 6, 7])
    ov.add_argument("--out", required=True)

    be = sub.add_parser("bench", help="measure this machine's field op rate")
    be.add_argument("--op", default="mult", choices=["mult", "exp"])
    be.add_argument("--q-bits", type=int, default=128)
    return ap


def _resolve_topology(args) -> simulator.Topology:
    name = args.topology
    if name == "butterfly":
        topo = simulator.butterfly()
    elif name == "four_pair":
        topo = simulator.four_pair(gen_size=args.gen_size)
    elif name == "random_dag":
        topo = simulator.random_dag(seed=args.seed)
    else:
        topo = simulator.load_topology(name)
    if args.adversary == "none":
        topo = topo.without_adversaries()
    return topo


def _cmd_simulate(args) -> int:
    try:
        topo = _resolve_topology(args)
    except (simulator.ConfigError, OSError) as exc:
        print(f"bad topology: {exc}", file=sys.stderr)
        return 2
    subsets = simulator.FOUR_PAIR_SUBSETS if topo.name == "four_pair" else None
    cfg = simulator.RunConfig(
        scheme=args.scheme, gen_size=args.gen_size, data_len=args.data_len,
        q=args.q, seed=args.seed, tag_slots=args.tag_slots,
        key_subsets=subsets)
    try:
        report = simulator.run(topo, cfg)
    except simulator.InvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    summary = {
        "topology": report.topology, "scheme": report.scheme,
        "seed": report.seed, "rounds": report.rounds,
        "bytes_sent": report.bytes_sent, "mults": report.mults,
        "exps": report.exps,
        "dropped": {n: r.dropped for n, r in report.nodes.items() if r.dropped},
        "corrupted_accepted": sum(r.corrupted_accepted
                                  for r in report.nodes.values()),
        "receivers": {n: r.ok for n, r in report.receivers.items()},
    }
    print(json.dumps(summary))
    if args.report:
        report.to_jsonl(args.report)
    return 0


def _cmd_game(args) -> int:
    if args.scheme == "intermac":
        res = intermac.attack_game_1(
            args.trials, q=args.q, strategy=args.strategy,
            tag_slots=args.tags, seed=args.seed)
    else:
        res = protocols.attack_game_2(
            args.trials, q=args.q, strategy=args.strategy,
            tag_slots=args.tags, seed=args.seed)
    out = dataclasses.asdict(res)
    out["rate"] = res.rate
    print(json.dumps(out))
    return 0


def _cmd_overhead(args) -> int:
    overhead.dump_csv(args.figure, args.out)
    p = overhead.DEFAULTS
    lines = {
        "baseline_over_ours_online": overhead.online_baseline_ratio(p),
        "single_tag_pct": 100 * overhead.online_fraction(p, "single"),
        "cpk_saved_pct": 100 * overhead.offline_saving(p, "intermac_cpk"),
        "pm_saved_pct": 100 * overhead.offline_saving(p, "spacemac_pm"),
        "mac_ms": 1000 * overhead.compute_cost(p, "mac").seconds,
        "baseline_ms": 1000 * overhead.compute_cost(p, "baseline").seconds,
    }
    print(json.dumps({k: round(v, 4) for k, v in lines.items()}))
    return 0


def _cmd_bench(args) -> int:
    print(json.dumps(overhead.bench(args.op, args.q_bits)))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "simulate": _cmd_simulate,
        "game": _cmd_game,
        "overhead": _cmd_overhead,
        "bench": _cmd_bench,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
