#!/usr/bin/env python3
"""Run the three figure pipelines plus the equivalence check in one go.

Writes figN.{json,csv} and equiv.{json,csv} into the output directory and
prints a one-line summary per experiment.  Fully deterministic for a fixed
seed; see the package README for what each report contains.
"""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from realmask import experiments
from realmask.experiments import ExperimentConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=experiments.DEFAULT_SEED)
    parser.add_argument("--noise-p", type=float, default=experiments.DEFAULT_NOISE_P)
    parser.add_argument("--out", type=Path, default=Path("results"))
    args = parser.parse_args()

    cfg = ExperimentConfig(seed=args.seed, noise_p=args.noise_p)

    rep3 = experiments.run_fig3(cfg)
    experiments.write_report(rep3, args.out)
    fids = [row["fidelity"]["estimate"] for row in rep3["probes"]]
    purs = [row["purity"]["estimate"] for row in rep3["probes"]]
    print(f"fig3: fidelities {[f'{f:.4f}' for f in fids]}, avg purities {[f'{p:.4f}' for p in purs]}")

    rep4 = experiments.run_fig4(cfg)
    experiments.write_report(rep4, args.out)
    print(f"fig4: decoding fidelity {rep4['fidelity']['estimate']:.4f} "
          f"+/- {rep4['fidelity']['error']:.4f} (bootstrap std)")

    rep5 = experiments.run_fig5(cfg)
    experiments.write_report(rep5, args.out)
    pairs = [(p["phi_deg"], p["estimate"]) for p in rep5["points"]]
    print("fig5: concurrence " + ", ".join(f"{phi:.0f}deg={c:.3f}" for phi, c in pairs))

    repe = experiments.run_equivalence(cfg)
    experiments.write_report(repe, args.out)
    print(f"equiv: max infidelity {repe['max_infidelity']:.2e} (pass={repe['pass']})")

    print(f"reports written to {args.out}/")
    return 0 if repe["pass"] else 2


if __name__ == "__main__":
    sys.exit(main())
