#!/usr/bin/env python3
"""Sweep forged-qubit count m for an n-qubit message and tabulate acceptance.

Empirical acceptance should track (3/4)^m under per-qubit keys and
comparison. Writes a CSV alongside the printed table.
"""

import argparse
import csv
import sys

from aqsim.attacks import (
    CSV_HEADER,
    ForgeryStrategy,
    StrategyKind,
    estimate_forgery_acceptance,
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

VARIANT = ProtocolVariant(
    RPrimeSource.FROM_MESSAGE_P,
    MtMode.MEASURE_X,
    MessageKnowledge.ALICE_ONLY,
    SigningModel.PER_QUBIT_PRODUCT,
    ComparisonMode.PER_QUBIT,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=4)
    parser.add_argument("--trials", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default="forgery_sweep.csv")
    args = parser.parse_args(argv)

    cfg = RunConfig(args.n, VARIANT)
    reports = [
        estimate_forgery_acceptance(
            cfg,
            ForgeryStrategy(StrategyKind.REPLACE_QUBITS, m=m),
            args.trials,
            args.seed,
            args.workers,
        )
        for m in range(1, args.n + 1)
    ]

    with open(args.out, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(r.csv_row() for r in reports)

    print(f"{'m':>3}  {'acceptance':>10}  {'(3/4)^m':>8}")
    for r in reports:
        print(f"{r.m:>3}  {r.acceptance_rate:>10.4f}  {r.analytic_prediction:>8.4f}")
    print(f"csv written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
