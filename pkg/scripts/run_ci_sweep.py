"""Train the CI profile (five weights) and print the criterion-9 check.

    python scripts/run_ci_sweep.py --out runs/ci
    AGRITRUST_CI_RUN=runs/ci pytest tests/test_acceptance.py

The second line re-checks the saved run instead of training again.
"""
import argparse
import json
import logging
import time

from agritrust.harness.config import load_config
from agritrust.harness.runs import train


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/ci")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = load_config(profile="ci", output_dir=args.out, seed=args.seed, workers=args.workers)
    t0 = time.perf_counter()
    doc = train(cfg)
    minutes = (time.perf_counter() - t0) / 60

    by_id = {p["run_id"]: p for p in doc["policies"]}
    for p in doc["policies"]:
        print(f"{p['run_id']} w={p['weight']} reward={p['reward']:.1f} trust={p['trust']:.3f} "
              f"N={p['total_n_kg_ha']:.0f} apps={p['n_apps']:.1f}")
    sel, agn = by_id[doc["selected"]], by_id[doc["agnostic"]]
    ratio = sel["reward"] / agn["reward"]
    ok = sel["trust"] >= 0.5 and abs(ratio - 1) <= 0.15 and minutes < 15
    print(json.dumps({"selected": sel["run_id"], "reward_ratio": round(ratio, 4), "selected_trust": sel["trust"],
                      "front_size": len(doc["front"]), "minutes": round(minutes, 2), "pass": ok}, indent=2))


if __name__ == "__main__":
    main()
