"""Spark counts and steady-state error for every class/mode/clamp combination.

Prints a table; runs are paired, so rows for one class/mode share their inputs.

    python3 scripts/clamp_policy_sweep.py --runs 20 --beta 0.08
"""

import argparse

from subtrace.harness import ExperimentSpec, find_sparks, run_arm, steady_state_db
from subtrace.metrics import aggregate
from subtrace.model import ScenarioConfig
from subtrace.tracker import AlgoClass, ClampPolicy, Mode, TrackerConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--beta", type=float, default=0.08)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    scenario = ScenarioConfig(seed=args.seed)
    print(f"{'class':<6}{'mode':<8}{'clamp':<9}{'sparks':>8}{'runs':>6}{'steady dB':>11}")
    for algo in AlgoClass:
        for mode in Mode:
            for policy in ClampPolicy:
                tracker = TrackerConfig(algo, mode, args.beta, policy)
                spec = ExperimentSpec(scenario=scenario, tracker=tracker, n_runs=args.runs)
                runs = run_arm(spec)
                sparks = find_sparks(spec, runs)
                ss = steady_state_db(aggregate(runs), scenario.break_step, spec.spark_window)
                hit = len({e.run_index for e in sparks})
                print(f"{algo.value:<6}{mode.value:<8}{policy.value:<9}{len(sparks):>8}{hit:>6}{ss:>11.2f}")


if __name__ == "__main__":
    main()
