"""Reproducible scenario runner.

Every scenario is driven by an ExperimentConfig (flags, optionally on top of a
JSON config file; flags win). Reports are machine-first JSON or CSV; a short
human summary goes to stdout. Identical configs, including the seed, produce
byte-identical report files regardless of --workers.

Exit codes: 0 success, 2 invalid config, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import attacks, comparison, qsim, serialize
from .attacks import ForgeryStrategy, StrategyKind, binomial_ci, map_trials
from .crypto import SigningModel
from .protocol import (
    ComparisonMode,
    MessageKnowledge,
    MtMode,
    ProtocolVariant,
    RPrimeSource,
    RunConfig,
    Verdict,
    build_pauli_frame,
    run_protocol,
)

OUTPUT_DIR_ENV = "AQSIM_OUT_DIR"
DEFAULT_SEED = 0

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


class Scenario(Enum):
    HONEST = "honest"
    FORGERY = "forgery"
    Q_ESTIMATE = "q-estimate"
    CORRELATION_TABLE = "correlation-table"
    RECOVERY_FAILURE = "recovery-failure"


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario
    n: int
    m: int | None
    trials: int
    seed: int
    variant: ProtocolVariant
    idealized_comparison: bool
    strategy: StrategyKind
    output_path: str
    format: str  # "json" or "csv"
    workers: int

    def run_config(self) -> RunConfig:
        return RunConfig(self.n, self.variant, self.idealized_comparison)


class ConfigError(Exception):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


_R_PRIME = {"message": RPrimeSource.FROM_MESSAGE_P, "ghz": RPrimeSource.FROM_GHZ_PARTICLE}
_MT = {
    "measure-x": MtMode.MEASURE_X,
    "forward": MtMode.FORWARD_PARTICLE,
    "forward-particle": MtMode.FORWARD_PARTICLE,
}
_KNOWLEDGE = {"all": MessageKnowledge.KNOWN_TO_ALL, "alice-only": MessageKnowledge.ALICE_ONLY}
_KEY_MODEL = {"per-qubit": SigningModel.PER_QUBIT_PRODUCT, "general": SigningModel.GENERAL_UNITARY}
_COMPARISON = {"per-qubit": ComparisonMode.PER_QUBIT, "whole-register": ComparisonMode.WHOLE_REGISTER}
_STRATEGY = {
    "replace-qubits": StrategyKind.REPLACE_QUBITS,
    "replace-whole-register": StrategyKind.REPLACE_WHOLE_REGISTER,
    "garble-signature": StrategyKind.GARBLE_SIGNATURE,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="aqsim",
        description="Arbitrated quantum signature protocol: scenario runner",
    )
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--scenario", choices=[s.value for s in Scenario])
    p.add_argument("--n", type=int, help="message qubits (default 1)")
    p.add_argument("--m", type=int, help="forged qubits (forgery scenario)")
    p.add_argument("--trials", type=int, help="Monte Carlo trials (default 10000)")
    p.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
    p.add_argument(
        "--variant-r-prime", "--r-prime", dest="r_prime", choices=sorted(_R_PRIME)
    )
    p.add_argument("--variant-mt", "--mt", dest="mt", choices=sorted(_MT))
    p.add_argument("--knowledge", choices=sorted(_KNOWLEDGE))
    p.add_argument("--key-model", dest="key_model", choices=sorted(_KEY_MODEL))
    p.add_argument("--comparison", choices=sorted(_COMPARISON))
    p.add_argument(
        "--idealized-comparison",
        dest="idealized",
        choices=["true", "false"],
        help="compare on copies, leaving states undisturbed (default true)",
    )
    p.add_argument("--strategy", choices=sorted(_STRATEGY))
    p.add_argument("--out", help="report path (default <scenario>.<format> in $AQSIM_OUT_DIR or cwd)")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--workers", type=int, help="parallel trial workers (default 1)")
    return p


def validate_config(args: argparse.Namespace) -> ExperimentConfig:
    raw: dict = {}
    if args.config:
        try:
            with open(args.config) as f:
                raw = json.load(f)
        except OSError as e:
            raise ConfigError([f"cannot read config file: {e}"])
        except json.JSONDecodeError as e:
            raise ConfigError([f"config file is not valid JSON: {e}"])

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        return raw.get(key, default)

    errors = []
    scenario_raw = pick(args.scenario, "scenario", None)
    if scenario_raw is None:
        errors.append("--scenario is required")
        raise ConfigError(errors)
    try:
        scenario = Scenario(scenario_raw)
    except ValueError:
        raise ConfigError([f"unknown scenario {scenario_raw!r}"])

    n = int(pick(args.n, "n", 1))
    m_raw = pick(args.m, "m", None)
    m = None if m_raw is None else int(m_raw)
    trials = int(pick(args.trials, "trials", 10000))
    seed = int(pick(args.seed, "seed", DEFAULT_SEED))
    workers = int(pick(args.workers, "workers", 1))
    fmt = pick(args.format, "format", "json")

    if n < 1:
        errors.append(f"--n must be >= 1, got {n}")
    if trials < 1:
        errors.append(f"--trials must be >= 1, got {trials}")
    if workers < 1:
        errors.append(f"--workers must be >= 1, got {workers}")

    strategy = _STRATEGY[pick(args.strategy, "strategy", "replace-qubits")]
    if scenario is Scenario.FORGERY and strategy is StrategyKind.REPLACE_QUBITS:
        if m is None:
            m = 1
        if not 1 <= m <= n:
            errors.append(f"--m {m} must satisfy 1 <= m <= n (--n {n})")

    variant = ProtocolVariant(
        r_prime_source=_R_PRIME[pick(args.r_prime, "r_prime", "message")],
        m_t_mode=_MT[pick(args.mt, "mt", "measure-x")],
        message_knowledge=_KNOWLEDGE[pick(args.knowledge, "knowledge", "alice-only")],
        key_model=_KEY_MODEL[pick(args.key_model, "key_model", "per-qubit")],
        comparison_mode=_COMPARISON[pick(args.comparison, "comparison", "per-qubit")],
    )
    idealized = pick(args.idealized, "idealized_comparison", "true")
    idealized = idealized if isinstance(idealized, bool) else idealized == "true"

    out = pick(args.out, "out", None)
    if out is None:
        out_dir = os.environ.get(OUTPUT_DIR_ENV, ".")
        out = os.path.join(out_dir, f"{scenario.value}.{fmt}")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        scenario=scenario,
        n=n,
        m=m,
        trials=trials,
        seed=seed,
        variant=variant,
        idealized_comparison=idealized,
        strategy=strategy,
        output_path=out,
        format=fmt,
        workers=workers,
    )


# ---------------------------------------------------------------------------
# Scenarios. Each returns (results dict, csv header, csv rows, summary lines).


def _honest_trial(config: RunConfig, seed: int, i: int):
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
    t = run_protocol(config, int(rng.integers(0, 2**63)))
    return t.gamma, t.verdict is Verdict.ACCEPTED


def scenario_honest(cfg: ExperimentConfig):
    results = map_trials(
        _honest_trial, cfg.trials, cfg.seed, cfg.workers, config=cfg.run_config()
    )
    gamma_count = sum(g for g, _ in results)
    accepted = sum(1 for _, a in results if a)
    g_lo, g_hi = binomial_ci(gamma_count, cfg.trials)
    a_lo, a_hi = binomial_ci(accepted, cfg.trials)
    res = {
        "trials": cfg.trials,
        "gamma_rate": gamma_count / cfg.trials,
        "gamma_ci": [g_lo, g_hi],
        "acceptance_rate": accepted / cfg.trials,
        "acceptance_ci": [a_lo, a_hi],
    }
    header = ["trials", "gamma_rate", "gamma_ci_low", "gamma_ci_high", "acceptance_rate", "acceptance_ci_low", "acceptance_ci_high"]
    rows = [[cfg.trials, f"{res['gamma_rate']:.6f}", f"{g_lo:.6f}", f"{g_hi:.6f}", f"{res['acceptance_rate']:.6f}", f"{a_lo:.6f}", f"{a_hi:.6f}"]]
    summary = [
        f"honest: gamma rate {res['gamma_rate']:.4f}, acceptance {res['acceptance_rate']:.4f} "
        f"({cfg.trials} trials)"
    ]
    return res, header, rows, summary


def scenario_forgery(cfg: ExperimentConfig):
    strategy = ForgeryStrategy(cfg.strategy, cfg.m)
    report = attacks.estimate_forgery_acceptance(
        cfg.run_config(), strategy, cfg.trials, cfg.seed, cfg.workers
    )
    res = report.to_dict()
    pred = report.analytic_prediction
    summary = [
        f"forgery ({report.strategy.value}, n={report.n}, m={report.m}): "
        f"acceptance {report.acceptance_rate:.4f} "
        f"[{report.ci_low:.4f}, {report.ci_high:.4f}], "
        f"prediction {'n/a' if pred is None else f'{pred:.4f}'} "
        f"({report.trials} trials)"
    ]
    return res, attacks.CSV_HEADER, [report.csv_row()], summary


def _q_trial(n: int, seed: int, i: int):
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(n, i)))
    a = qsim.haar_random_state(n, rng)
    b = qsim.haar_random_state(n, rng)
    r = comparison.swap_test(a, b, rng)
    return r.verdict is comparison.Verdict.DEFINITELY_DIFFERENT


def scenario_q_estimate(cfg: ExperimentConfig):
    rows_data = []
    for n in range(1, cfg.n + 1):
        hits = sum(
            map_trials(_q_trial, cfg.trials, cfg.seed, cfg.workers, n=n)
        )
        lo, hi = binomial_ci(hits, cfg.trials)
        rows_data.append(
            {
                "n": n,
                "analytic_q": comparison.average_q(n),
                "empirical_q": hits / cfg.trials,
                "ci": [lo, hi],
                "trials": cfg.trials,
            }
        )
    res = {"rows": rows_data}
    header = ["n", "analytic_q", "empirical_q", "ci_low", "ci_high", "trials"]
    rows = [
        [r["n"], f"{r['analytic_q']:.6f}", f"{r['empirical_q']:.6f}", f"{r['ci'][0]:.6f}", f"{r['ci'][1]:.6f}", r["trials"]]
        for r in rows_data
    ]
    summary = [
        f"q(n={r['n']}): analytic {r['analytic_q']:.4f}, empirical {r['empirical_q']:.4f}"
        for r in rows_data
    ]
    return res, header, rows, summary


def scenario_correlation_table(cfg: ExperimentConfig):
    frame = build_pauli_frame()
    rng = np.random.default_rng(cfg.seed)
    probes = [qsim.haar_random_state(1, rng) for _ in range(100)]
    rows_data = []
    for (m_a, m_b), pauli in sorted(
        frame.table.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
    ):
        worst = 1.0
        for p in probes:
            joint = qsim.tensor(p, qsim.ghz_state())
            _, phi = qsim.project_bell(joint, 0, 1, m_a)
            _, particle = qsim.project_x(phi, 0, m_b)
            worst = min(worst, qsim.fidelity(qsim.apply_pauli(particle, pauli, 0), p))
        rows_data.append(
            {
                "bell": m_a.value,
                "x": m_b.value,
                "pauli": pauli.value,
                "verified": bool(worst >= 1.0 - qsim.ATOL),
                "min_fidelity": worst,
                "probes": len(probes),
            }
        )
    res = {"rows": rows_data}
    header = ["bell", "x", "pauli", "verified", "min_fidelity", "probes"]
    rows = [
        [r["bell"], r["x"], r["pauli"], r["verified"], f"{r['min_fidelity']:.12f}", r["probes"]]
        for r in rows_data
    ]
    summary = [f"({r['bell']}, {r['x']}) -> {r['pauli']}  verified={r['verified']}" for r in rows_data]
    return res, header, rows, summary


def scenario_recovery_failure(cfg: ExperimentConfig):
    mean_fid = attacks.recovery_failure_experiment(
        cfg.run_config(), cfg.trials, cfg.seed, cfg.workers
    )
    res = {"trials": cfg.trials, "mean_candidate_fidelity": mean_fid}
    header = ["trials", "mean_candidate_fidelity"]
    rows = [[cfg.trials, f"{mean_fid:.6f}"]]
    summary = [f"recovery failure: mean candidate fidelity {mean_fid:.4f} ({cfg.trials} trials)"]
    return res, header, rows, summary


_SCENARIOS = {
    Scenario.HONEST: scenario_honest,
    Scenario.FORGERY: scenario_forgery,
    Scenario.Q_ESTIMATE: scenario_q_estimate,
    Scenario.CORRELATION_TABLE: scenario_correlation_table,
    Scenario.RECOVERY_FAILURE: scenario_recovery_failure,
}


def _config_echo(cfg: ExperimentConfig) -> dict:
    return {
        "scenario": cfg.scenario.value,
        "n": cfg.n,
        "m": cfg.m,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "variant": serialize.variant_to_dict(cfg.variant),
        "idealized_comparison": cfg.idealized_comparison,
        "strategy": cfg.strategy.value,
        "format": cfg.format,
    }


def run_scenario(cfg: ExperimentConfig) -> int:
    results, header, rows, summary = _SCENARIOS[cfg.scenario](cfg)
    if cfg.format == "json":
        payload = serialize.dumps({"config": _config_echo(cfg), "results": results})
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        payload = buf.getvalue()
    try:
        if os.path.dirname(cfg.output_path):
            os.makedirs(os.path.dirname(cfg.output_path), exist_ok=True)
        with open(cfg.output_path, "w") as f:
            f.write(payload)
    except OSError as e:
        print(f"error: cannot write report: {e}", file=sys.stderr)
        return EXIT_IO
    for line in summary:
        print(line)
    print(f"report written to {cfg.output_path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = validate_config(args)
    except ConfigError as e:
        for err in e.errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_scenario(cfg)
    except (ValueError, KeyError) as e:
        print(f"error: invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
