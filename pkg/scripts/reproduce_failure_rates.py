#!/usr/bin/env python3
"""Reproduce the headline failure rates of the arbitrated-signature scheme.

Runs, at full Monte Carlo scale by default:
  - single-qubit forgery (m=1, per-qubit comparison): acceptance ~ 3/4
  - whole-register forgery (n=3, general-unitary keys): acceptance ~ 0.5625
  - signature garbling: acceptance ~ 1/2
  - honest-run recovery failure under MeasureX: mean candidate fidelity ~ 2/3

Writes one JSON report per experiment into --out-dir and prints a summary
table. Use --trials to trade accuracy for speed.
"""

import argparse
import json
import pathlib
import sys

from aqsim.attacks import (
    ForgeryStrategy,
    StrategyKind,
    estimate_forgery_acceptance,
    recovery_failure_experiment,
)
from aqsim.crypto import SigningModel
from aqsim.protocol import (
    ComparisonMode,
    MessageKnowledge,
    MtMode,
    ProtocolVariant,
    RPrimeSource,
    RunConfig,
)
from aqsim import serialize

PER_QUBIT = ProtocolVariant(
    RPrimeSource.FROM_MESSAGE_P,
    MtMode.MEASURE_X,
    MessageKnowledge.ALICE_ONLY,
    SigningModel.PER_QUBIT_PRODUCT,
    ComparisonMode.PER_QUBIT,
)
WHOLE_REGISTER = ProtocolVariant(
    RPrimeSource.FROM_MESSAGE_P,
    MtMode.MEASURE_X,
    MessageKnowledge.ALICE_ONLY,
    SigningModel.GENERAL_UNITARY,
    ComparisonMode.WHOLE_REGISTER,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out-dir", default="reports")
    args = parser.parse_args(argv)

    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    experiments = [
        (
            "forge_one_qubit",
            RunConfig(1, PER_QUBIT),
            ForgeryStrategy(StrategyKind.REPLACE_QUBITS, m=1),
        ),
        (
            "forge_whole_register_n3",
            RunConfig(3, WHOLE_REGISTER),
            ForgeryStrategy(StrategyKind.REPLACE_WHOLE_REGISTER),
        ),
        (
            "garble_signature",
            RunConfig(1, PER_QUBIT),
            ForgeryStrategy(StrategyKind.GARBLE_SIGNATURE),
        ),
    ]

    rows = []
    for name, cfg, strategy in experiments:
        rep = estimate_forgery_acceptance(
            cfg, strategy, args.trials, args.seed, args.workers
        )
        (out_dir / f"{name}.json").write_text(serialize.dumps(rep.to_dict()))
        rows.append((name, rep.acceptance_rate, rep.analytic_prediction))

    mean_fid = recovery_failure_experiment(
        RunConfig(1, PER_QUBIT), args.trials, args.seed, args.workers
    )
    (out_dir / "recovery_failure.json").write_text(
        serialize.dumps({"trials": args.trials, "mean_candidate_fidelity": mean_fid})
    )
    rows.append(("recovery_failure (fidelity)", mean_fid, 2 / 3))

    width = max(len(name) for name, _, _ in rows)
    print(f"{'experiment':<{width}}  {'measured':>9}  {'predicted':>9}")
    for name, measured, predicted in rows:
        print(f"{name:<{width}}  {measured:>9.4f}  {predicted:>9.4f}")
    print(f"reports in {out_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
