"""Command line entry point: ``agritrust <command> ...``.

Exit codes: 0 ok, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from agritrust.agronomics import ScheduleSummary
from agritrust.harness.config import ConfigError, load_config
from agritrust.harness.report import write_report
from agritrust.harness.runs import climate_sweep, parse_scenario, rollout, survey_weighted_rank, train
from agritrust.learner.dqn import PreferenceWeight
from agritrust.trust import TrustParams, trust_score

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _floats(text: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} numbers, got {len(vals)}")
    return vals


def _config(args, **overrides):
    return load_config(args.config, **overrides)


def cmd_train(args) -> int:
    over = {"seed": args.seed} if args.seed is not None else {}
    if args.out:
        over["output_dir"] = args.out
    cfg = _config(args, **over)
    doc = train(cfg)
    print(json.dumps({"output_dir": cfg.output_dir, "front": doc["front"], "selected": doc["selected"]}, indent=2))
    return EXIT_OK


def cmd_rollout(args) -> int:
    cfg = _config(args)
    weight = PreferenceWeight(*_floats(args.weight, 2)) if args.weight else None
    res = rollout(cfg, policy=args.policy, baseline=args.baseline, weight=weight, seed=args.seed)
    print(json.dumps(res.as_dict(), indent=2))
    return EXIT_OK


def cmd_trust_score(args) -> int:
    if args.summary:
        src = args.summary
        raw = Path(src).read_text() if Path(src).is_file() else src
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--summary is neither a JSON file nor JSON text: {exc}") from None
    else:
        missing = [f for f in ("yield_kg_ha", "total_n", "n_apps", "in_window", "leach") if getattr(args, f) is None]
        if missing:
            raise ConfigError("give --summary or all of --yield-kg-ha --total-n --n-apps --in-window --leach")
        data = {
            "yield_kg_ha": args.yield_kg_ha,
            "total_n_kg_ha": args.total_n,
            "n_apps": args.n_apps,
            "in_window_apps": args.in_window,
            "total_leach_kg_ha": args.leach,
        }
    try:
        s = ScheduleSummary(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad summary: {exc}") from None
    print(json.dumps(trust_score(s, TrustParams()).as_dict(), indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    tokens = [t for t in args.scenarios.split(",") if t.strip()] if args.scenarios else []
    try:
        for t in tokens:
            parse_scenario(t)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    over = {"seed": args.seed} if args.seed is not None else {}
    cfg = _config(args, **over)
    if args.out:
        cfg = replace(cfg, output_dir=args.out)
    rows = climate_sweep(cfg, tokens)
    print(json.dumps(rows, indent=2))
    return EXIT_OK


def cmd_report(args) -> int:
    out = args.out or args.dirs[0]
    for path in write_report(args.dirs, out):
        print(path)
    return EXIT_OK


def cmd_survey_stats(args) -> int:
    dist = _floats(args.dist, 5)
    try:
        score = survey_weighted_rank(dist)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(f"{score:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="agritrust", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one policy per preference weight")
    t.add_argument("--config", help="TOML or JSON file layered over the profile")
    t.add_argument("--seed", type=int)
    t.add_argument("--out", help="override output_dir")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("rollout", help="greedy episode of a policy or baseline")
    g = r.add_mutually_exclusive_group(required=True)
    g.add_argument("--policy", help="checkpoint file")
    g.add_argument("--baseline", help="named plan, e.g. expert")
    r.add_argument("--config")
    r.add_argument("--weight", help="preference weight w_reward,w_trust for vector policies")
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_rollout)

    ts = sub.add_parser("trust-score", help="trust breakdown of a schedule summary")
    ts.add_argument("--summary", help="JSON file or JSON text with ScheduleSummary fields")
    ts.add_argument("--yield-kg-ha", type=float)
    ts.add_argument("--total-n", type=float)
    ts.add_argument("--n-apps", type=int)
    ts.add_argument("--in-window", type=int)
    ts.add_argument("--leach", type=float)
    ts.set_defaults(func=cmd_trust_score)

    s = sub.add_parser("sweep", help="base run plus climate perturbations")
    s.add_argument("--config", help="TOML or JSON file layered over the profile")
    s.add_argument("--scenarios", default="", help="comma list such as +1C,+2C,-20%%")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("report", help="render markdown and SVG from run directories")
    rp.add_argument("dirs", nargs="+")
    rp.add_argument("--out", help="directory for report.md (default: first run dir)")
    rp.set_defaults(func=cmd_report)

    ss = sub.add_parser("survey-stats", help="weighted rank score of a rank distribution")
    ss.add_argument("--dist", required=True, help="five shares, most preferred first")
    ss.set_defaults(func=cmd_survey_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
