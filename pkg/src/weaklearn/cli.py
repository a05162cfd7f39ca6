"""Command-line front end.

Subcommands::

    weaklearn run <config.json> [--out DIR] [--seed-override N]
    weaklearn validate <config.json>
    weaklearn rank-scan --model {gaussian|diversity} --s-range A:B --h-range A:B --draws N

Exit codes: 0 success, 1 config error, 2 runtime error, 3 the run finished
but at least one receiving agent is non-identifiable (rank-scan only
tabulates rank frequencies and never fails).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .experiment import ConfigError, run_experiment, validate_config
from .inverse import build_system
from .models import diversity_model, structured_gaussian_model

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_NON_IDENTIFIABLE = 3


def _parse_range(text: str) -> range:
    lo, _, hi = text.partition(":")
    return range(int(lo), int(hi) + 1)


def _distinct_means(rng: np.random.Generator, count: int, min_gap: float = 0.05) -> np.ndarray:
    while True:
        means = rng.uniform(-5.0, 5.0, size=count)
        if np.min(np.abs(np.subtract.outer(means, means) + np.eye(count))) >= min_gap:
            return means


def _cmd_run(args) -> int:
    try:
        config = validate_config(args.config)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(config, out_dir=args.out, seed_override=args.seed_override)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote results to {report.out_dir}")
    if not report.identifiable:
        print("warning: at least one receiving agent is non-identifiable", file=sys.stderr)
        return EXIT_NON_IDENTIFIABLE
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        config = validate_config(args.config)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    part = config.partition
    print(
        f"config ok: {part.n_agents} agents "
        f"({part.num_sending} sending / {part.num_receiving} receiving sub-networks), "
        f"H={config.n_hypotheses}, steps={config.steps}, trials={config.trials}"
    )
    return EXIT_OK


def _cmd_rank_scan(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = []
    for S in _parse_range(args.s_range):
        for H in _parse_range(args.h_range):
            if args.model == "gaussian" and S > H:
                continue  # structured model needs S <= H
            counts: dict[int, int] = {}
            total = 0
            for _ in range(args.draws):
                if args.model == "gaussian":
                    means = _distinct_means(rng, H)
                    _, D = structured_gaussian_model(means, S)
                else:
                    base = np.arange(1.0, max(H, S) + 1.0)
                    _, D = diversity_model(
                        H, S, base, args.perturb, seed=int(rng.integers(2**32))
                    )
                for theta_star in range(1, H + 1):
                    sys_k = build_system(D, theta_star, np.zeros(H), tol=args.tol)
                    counts[sys_k.rank] = counts.get(sys_k.rank, 0) + 1
                    total += 1
            freq = ", ".join(
                f"rank {r}: {c}/{total}" for r, c in sorted(counts.items())
            )
            feasible = counts.get(S, 0) == total
            rows.append((S, H, freq, "identifiable" if feasible else "flagged: rank-deficient"))
    width = max(len(r[2]) for r in rows) if rows else 0
    print(f"model: {args.model}  draws per (S, H): {args.draws}  tol: {args.tol:g}")
    for S, H, freq, verdict in rows:
        print(f"S={S} H={H}  {freq:<{width}}  {verdict}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weaklearn",
        description="Social learning over weak graphs and influence-topology recovery.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config-driven experiment end to end")
    p_run.add_argument("config", help="path to the experiment JSON config")
    p_run.add_argument("--out", default=None, help="output directory (overrides config)")
    p_run.add_argument(
        "--seed-override", type=int, default=None, help="replace the simulation seed"
    )
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a config and report every violation")
    p_val.add_argument("config", help="path to the experiment JSON config")
    p_val.set_defaults(func=_cmd_validate)

    p_scan = sub.add_parser(
        "rank-scan", help="tabulate rank(C) frequencies over random model draws"
    )
    p_scan.add_argument("--model", choices=("gaussian", "diversity"), required=True)
    p_scan.add_argument("--s-range", required=True, help="sending sub-network counts, A:B inclusive")
    p_scan.add_argument("--h-range", required=True, help="hypothesis counts, A:B inclusive")
    p_scan.add_argument("--draws", type=int, required=True, help="random draws per (S, H) cell")
    p_scan.add_argument("--seed", type=int, default=0)
    p_scan.add_argument("--perturb", type=float, default=0.1, help="diversity perturbation range")
    p_scan.add_argument("--tol", type=float, default=1e-10, help="relative rank tolerance")
    p_scan.set_defaults(func=_cmd_rank_scan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
