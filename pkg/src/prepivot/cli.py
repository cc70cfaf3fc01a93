"""Command-line interface: randomization tests, confidence sets, simulations, enumeration."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from .config import load_run_config, settings
from .data import load_study
from .design import AssignmentSpace, BalanceCriterion
from .errors import ConfigError, InfeasibleBalanceError, PrepivotError, SchemaError
from .inference import FRTConfig, confidence_set, parse_grid, randomization_test, raw_statistic_test
from .models import NAMED, EstimatorSpec, StatisticSpec
from .pipeline import SCENARIOS, TABLE2_DIM, ScenarioConfig, run_scenario
from .utils import get_logger, set_level


logger = get_logger(__name__)

DESIGN_NAMES = {"cre": "cre", "rerand": "rerandomized", "paired": "paired", "multiarm": "multiarm"}
GAUSS_METHODS = {"auto": "auto", "mc": "monte_carlo", "closed": "closed_form"}
_NOT_ECHOED = {"threads", "verbose", "quiet", "out", "command"}


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as exceptions instead of exiting."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(f"{self.prog}: {message}")


def _add_inference_arguments(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--data", type=Path, required=True, help="Study CSV (y1..yd, z, x1..xk).")
    sub.add_argument("--design", choices=sorted(DESIGN_NAMES), default="cre")
    sub.add_argument("--statistic", choices=sorted(NAMED), default="student")
    sub.add_argument("--adjust", choices=("none", "lin"), default="none")
    sub.add_argument("--contrasts", type=Path, default=None, help="CSV of contrasts (A rows, no header).")
    sub.add_argument("--pairs-column", default="pair")
    sub.add_argument("--config", type=Path, default=None, help="JSON run configuration.")
    sub.add_argument("--criterion-a", type=float, default=None, help="Mahalanobis threshold for rerandomization.")
    sub.add_argument("--mode", choices=("auto", "exact", "sampled"), default="auto")
    sub.add_argument("--draws-omega", type=int, default=settings.draws_omega)
    sub.add_argument("--draws-gauss", type=int, default=settings.draws_gauss)
    sub.add_argument("--gauss-method", choices=sorted(GAUSS_METHODS), default="auto")
    sub.add_argument("--alpha", type=float, default=0.05)
    sub.add_argument("--seed", type=int, default=settings.seed)
    sub.add_argument("--threads", type=int, default=settings.threads)
    sub.add_argument("--out", type=Path, default=None, help="Write the JSON report here.")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="prepivot",
        description="Gaussian-prepivoted Fisher randomization tests for finite-population experiments.",
    )
    parser.add_argument("--verbose", action="store_true", help="Log debug messages.")
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors.")
    subparsers = parser.add_subparsers(dest="command")

    test = subparsers.add_parser("test", help="Run a randomization test on a study.")
    _add_inference_arguments(test)
    test.add_argument("--raw", action="store_true", help="Classical test on the statistic, no prepivoting.")
    test.add_argument("--null", default=None, help="Comma-separated hypothesized constant effect.")

    ci = subparsers.add_parser("ci", help="Confidence set by test inversion over a grid.")
    _add_inference_arguments(ci)
    ci.add_argument("--grid", required=True, help="lo:hi:step")

    simulate = subparsers.add_parser("simulate", help="Run a simulation study.")
    simulate.add_argument("--scenario", choices=SCENARIOS, default="table1")
    simulate.add_argument("--n", type=int, default=1000, dest="n_units")
    simulate.add_argument("--sims", type=int, default=500)
    simulate.add_argument("--alpha", type=float, default=None, help="Default 0.05 (table1/table2), 0.25 (errors/power).")
    simulate.add_argument("--effect", default=None, help="sharp|weak (table1/table2/errors), constant|heterogeneous (power).")
    simulate.add_argument("--tau", type=float, default=0.05)
    simulate.add_argument("--threshold", type=float, default=1.0, help="Mahalanobis threshold (table1).")
    simulate.add_argument("--dim", type=int, default=TABLE2_DIM, help="Outcome dimension (table2/errors/power).")
    simulate.add_argument("--draws-omega", type=int, default=500)
    simulate.add_argument("--draws-gauss", type=int, default=2000)
    simulate.add_argument("--seed", type=int, default=settings.seed)
    simulate.add_argument("--threads", type=int, default=settings.threads)
    simulate.add_argument("--out", type=Path, default=None, help="Output directory.")

    enumerate_ = subparsers.add_parser("enumerate", help="Print the number of assignments in a design.")
    enumerate_.add_argument("--design", choices=sorted(DESIGN_NAMES), default="cre")
    enumerate_.add_argument("--n", type=int, default=None, dest="n_units")
    enumerate_.add_argument("--n1", type=int, default=None)
    enumerate_.add_argument("--pairs", type=int, default=None, help="Number of pairs.")
    enumerate_.add_argument("--arms", default=None, help="Comma-separated arm sizes.")
    enumerate_.add_argument("--data", type=Path, default=None, help="Study CSV supplying covariates.")
    enumerate_.add_argument("--config", type=Path, default=None)
    enumerate_.add_argument("--criterion-a", type=float, default=None)
    enumerate_.add_argument("--cap", type=int, default=settings.enumeration_cap)

    return parser


def _echo(parsed: argparse.Namespace) -> Dict[str, Any]:
    return {
        key: (str(value) if isinstance(value, Path) else value)
        for key, value in sorted(vars(parsed).items())
        if key not in _NOT_ECHOED
    }


def _criterion(parsed: argparse.Namespace) -> BalanceCriterion:
    config = load_run_config(parsed.config)
    criterion = BalanceCriterion.from_config(config.get("balance"))
    if parsed.criterion_a is not None:
        metric = criterion.metric if criterion.kind == "mahalanobis" else None
        criterion = BalanceCriterion.mahalanobis(parsed.criterion_a, metric)
    return criterion


def _setup(parsed: argparse.Namespace):
    design = DESIGN_NAMES[parsed.design]
    n_arms = None if design == "multiarm" else 2
    pairs_column = parsed.pairs_column if design == "paired" else None
    if not parsed.data.exists():
        raise FileNotFoundError(f"Study file {parsed.data} does not exist")
    study = load_study(parsed.data, n_arms=n_arms, pairs_column=pairs_column)

    criterion = _criterion(parsed)
    if design == "rerandomized" and criterion.is_trivial:
        raise ConfigError("The rerand design needs a balance criterion (--criterion-a or --config)")
    if design != "rerandomized" and not criterion.is_trivial:
        raise ConfigError(f"Balance criteria only apply to the rerand design, not {parsed.design}")

    if parsed.adjust == "lin":
        if design not in ("cre", "rerandomized"):
            raise ConfigError("Regression adjustment applies to cre and rerand designs only")
        estimator = EstimatorSpec("lin_adjusted")
    elif design == "paired":
        estimator = EstimatorSpec("paired")
    elif design == "multiarm":
        if parsed.contrasts is None:
            raise ConfigError("The multiarm design needs --contrasts")
        if not parsed.contrasts.exists():
            raise FileNotFoundError(f"Contrast file {parsed.contrasts} does not exist")
        contrasts = pd.read_csv(parsed.contrasts, header=None).to_numpy(dtype=float)
        estimator = EstimatorSpec("contrast", contrasts=contrasts)
    else:
        estimator = EstimatorSpec("dim")
    if parsed.contrasts is not None and design != "multiarm":
        raise ConfigError("--contrasts only applies to the multiarm design")

    space = AssignmentSpace.for_study(study, design, criterion)
    spec = StatisticSpec.from_name(parsed.statistic)
    cfg = FRTConfig(
        mode=parsed.mode,
        draws_omega=parsed.draws_omega,
        draws_gauss=parsed.draws_gauss,
        gauss_method=GAUSS_METHODS[parsed.gauss_method],
        alpha=parsed.alpha,
        seed=parsed.seed,
        threads=parsed.threads,
        cap=settings.enumeration_cap,
        max_attempts=settings.max_attempts,
    )
    return study, space, spec, estimator, cfg


def _emit(payload: Dict[str, Any], table: str, out: Optional[Path]) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    print(table)
    logger.info("Report written to %s", out)


def _run_test(parsed: argparse.Namespace) -> None:
    study, space, spec, estimator, cfg = _setup(parsed)
    null = None
    if parsed.null is not None:
        try:
            null = np.array([float(part) for part in parsed.null.split(",")])
        except ValueError as exc:
            raise ConfigError(f"--null must be comma-separated numbers, got {parsed.null!r}") from exc
    if parsed.raw:
        report = raw_statistic_test(study, space, spec, estimator, cfg, null_shift=null)
    else:
        report = randomization_test(study, space, spec, estimator, cfg, null_shift=null)
    _emit({**report.to_dict(), "run": _echo(parsed)}, report.summary_table(), parsed.out)


def _run_ci(parsed: argparse.Namespace) -> None:
    study, space, spec, estimator, cfg = _setup(parsed)
    if study.outcome_dim != 1:
        raise ConfigError("Grid confidence sets are available for univariate outcomes only")
    result = confidence_set(study, space, spec, parse_grid(parsed.grid), estimator, cfg)
    table = pd.DataFrame(
        {"c": [c[0] for c in result.grid], "p_value": result.p_values, "accepted": [p > cfg.alpha for p in result.p_values]}
    ).to_string(index=False)
    _emit({**result.to_dict(), "run": _echo(parsed)}, table, parsed.out)


def _run_simulate(parsed: argparse.Namespace) -> None:
    cfg = ScenarioConfig(
        scenario=parsed.scenario,
        n_units=parsed.n_units,
        sims=parsed.sims,
        draws_omega=parsed.draws_omega,
        draws_gauss=parsed.draws_gauss,
        alpha=parsed.alpha,
        effect=parsed.effect,
        tau=parsed.tau,
        threshold=parsed.threshold,
        dim=parsed.dim,
        seed=parsed.seed,
        threads=parsed.threads,
    )
    out = parsed.out or (settings.reports / parsed.scenario)
    result = run_scenario(cfg, output_dir=out, progress=not parsed.quiet)
    print(result.rates.to_string(index=False))
    if result.interrupted:
        logger.warning("Partial results (%d simulations) written to %s", result.completed, out)


def _run_enumerate(parsed: argparse.Namespace) -> None:
    design = DESIGN_NAMES[parsed.design]
    if design == "cre":
        if parsed.n_units is None or parsed.n1 is None:
            raise ConfigError("enumerate --design cre needs --n and --n1")
        space = AssignmentSpace.cre(parsed.n_units, parsed.n1)
    elif design == "paired":
        if parsed.pairs is None:
            raise ConfigError("enumerate --design paired needs --pairs")
        space = AssignmentSpace.paired(n_pairs=parsed.pairs)
    elif design == "multiarm":
        if parsed.arms is None:
            raise ConfigError("enumerate --design multiarm needs --arms")
        try:
            sizes = [int(part) for part in parsed.arms.split(",")]
        except ValueError as exc:
            raise ConfigError(f"--arms must be comma-separated integers, got {parsed.arms!r}") from exc
        space = AssignmentSpace.multiarm(sizes)
    else:
        if parsed.data is None or parsed.n1 is None:
            raise ConfigError("enumerate --design rerand needs --data and --n1")
        if not parsed.data.exists():
            raise FileNotFoundError(f"Study file {parsed.data} does not exist")
        study = load_study(parsed.data, pairs_column=None)
        space = AssignmentSpace.rerandomized(study.covariates, parsed.n1, _criterion(parsed))
    count = space.cardinality()
    if count is None:
        count = space.enumerate(parsed.cap).shape[0]
    print(count)


COMMANDS = {
    "test": _run_test,
    "ci": _run_ci,
    "simulate": _run_simulate,
    "enumerate": _run_enumerate,
}


def main(args: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        parsed = parser.parse_args(args=args)
        if parsed.verbose:
            set_level("DEBUG")
        elif parsed.quiet:
            set_level("WARNING")
        command = COMMANDS.get(parsed.command)
        if command is None:
            parser.print_help()
            return 1
        command(parsed)
    except (SchemaError, ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PrepivotError, np.linalg.LinAlgError, ValueError) as exc:
        diagnostic = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, InfeasibleBalanceError):
            diagnostic["acceptance_rate"] = exc.acceptance_rate
            diagnostic["attempts"] = exc.attempts
        print(json.dumps(diagnostic, sort_keys=True), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
