"""Command-line interface.

Usage:
    ecc estimate --input data.csv --event band:z:0.5:0.1
    ecc curve --input data.csv --ci delta
    ecc synth --family gaussian-scale --theta 0.6,0.7,0.8,1 --n 100000 --seed 1
    ecc network --residuals residuals.csv --covariates covariates.csv --bootstrap 200 --seed 1

Exit status is 0 on success, 1 on a usage error and 2 on a data or
estimation error. Numbers are printed with 9 significant digits.
"""  # noqa: E501

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING, Any, NoReturn

import numpy as np
import pandas as pd

from .__about__ import __version__
from .config import RunConfig, resolve_seed
from .csvio import edge_frame, read_panel, read_sample, write_frame, write_json
from .deptest import PValueMethod, results_frame, run_tests
from .estimators import (
    AssertedMoments,
    CorrelationParams,
    DeltaStrategy,
    TruncatedMLE,
    assumption_diagnostics,
    covariance_shift,
    ecc_estimate,
    ecc_subsample,
    implied_unconditional,
    transport,
)
from .events import decile_sweep, event_mask, parse_event
from .exceptions import EccError, EventSpecError
from .inference import bootstrap_ci, delta_method_estimate
from .mc_harness import MomentChoice, StudyMethod, StudySpec, Task, run_study
from .network import (
    CentralityMode,
    Regime,
    bootstrap_centrality,
    eigenvector_centrality,
    regime_network,
    split_regimes,
)
from .parallel import default_threads
from .regression import Binning, fit_piecewise, predict
from .synth import Family, GenSpec, PanelSpec, generate, generate_panel

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from .estimators import EccEstimate
    from .events import EventSpec
    from .sample import Sample

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


class _Parser(argparse.ArgumentParser):
    """Argument parser exiting with the usage status instead of argparse's 2."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        msg = f"expected comma-separated numbers, got {text!r}"
        raise argparse.ArgumentTypeError(msg) from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        msg = f"expected comma-separated integers, got {text!r}"
        raise argparse.ArgumentTypeError(msg) from None


def _names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _theta(text: str) -> tuple[float, float, float, float]:
    values = _floats(text)
    if len(values) == 3:  # noqa: PLR2004
        values = (*values, 1.0)
    if len(values) != 4:  # noqa: PLR2004
        msg = "theta must read rho_xy,rho_xz,rho_yz[,eta]"
        raise argparse.ArgumentTypeError(msg)
    return values  # type: ignore[return-value]


def _add_roles(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", "-i", type=Path, help="input CSV; standard input when omitted")  # noqa: E501
    parser.add_argument("--x", default="x", help="column playing X (default: x)")
    parser.add_argument("--y", default="y", help="column playing Y (default: y)")
    parser.add_argument("--z", type=_names, default=("z",), help="comma-separated covariate columns Z1 (default: z)")  # noqa: E501
    parser.add_argument("--z2", type=_names, help="covariate columns Z2 (default: same as --z)")  # noqa: E501


def _add_interval(parser: argparse.ArgumentParser, default: str) -> None:
    parser.add_argument("--ci", choices=["none", "delta", "bootstrap"], default=default, help=f"confidence interval (default: {default})")  # noqa: E501
    parser.add_argument("--level", type=float, default=0.95, help="interval coverage (default: 0.95)")  # noqa: E501
    parser.add_argument("--replicates", type=int, default=1000, help="bootstrap replicates (default: 1000)")  # noqa: E501
    parser.add_argument("--strategy", choices=[s.value for s in DeltaStrategy], default=DeltaStrategy.EMPIRICAL.value, help="conditional covariate moments (default: empirical)")  # noqa: E501


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser of the ``ecc`` command."""
    common = _Parser(add_help=False)
    common.add_argument("--output", "-o", type=Path, help="output file; standard output when omitted")  # noqa: E501
    common.add_argument("--seed", type=int, help="seed of all random draws (default: $ECC_SEED)")  # noqa: E501
    common.add_argument("--threads", type=int, default=default_threads(), help="worker threads (default: logical cores)")  # noqa: E501
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")  # noqa: E501

    parser = _Parser(prog="ecc", description="Event conditional correlation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")  # noqa: E501
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    estimate = sub.add_parser("estimate", parents=[common], help="correlation of X and Y under an event")  # noqa: E501
    _add_roles(estimate)
    estimate.add_argument("--event", required=True, help="event, e.g. band:z:0.5:0.1 or gt:z:1.5")  # noqa: E501
    estimate.add_argument("--method", choices=["corrected", "subsample"], default="corrected", help="estimator (default: corrected)")  # noqa: E501
    _add_interval(estimate, "none")

    implied = sub.add_parser("implied", parents=[common], help="unconditional correlation from an A-sample")  # noqa: E501
    _add_roles(implied)
    source = implied.add_mutually_exclusive_group(required=True)
    source.add_argument("--sigma-z", type=float, help="asserted unconditional standard deviation of Z")  # noqa: E501
    source.add_argument("--mle-event", help="absolute event the A-sample satisfies; fits Z by truncated likelihood")  # noqa: E501

    move = sub.add_parser("transport", parents=[common], help="move a conditional correlation to another event")  # noqa: E501
    move.add_argument("--rho-xy", type=float, required=True, help="correlation of X and Y under A")  # noqa: E501
    move.add_argument("--rho-xz", type=float, required=True, help="correlation of X and Z under A")  # noqa: E501
    move.add_argument("--rho-yz", type=float, required=True, help="correlation of Y and Z under A")  # noqa: E501
    move.add_argument("--delta-tilde", type=float, required=True, help="var(Z | A') / var(Z | A) - 1")  # noqa: E501

    curve = sub.add_parser("curve", parents=[common], help="estimates over contiguous quantile bands")  # noqa: E501
    _add_roles(curve)
    curve.add_argument("--width", type=float, default=0.1, help="band width in quantile levels (default: 0.1)")  # noqa: E501
    _add_interval(curve, "delta")

    synth = sub.add_parser("synth", parents=[common], help="draw synthetic data")
    synth.add_argument("--family", choices=[f.value for f in Family], default=Family.GAUSSIAN_SCALE.value, help="distribution family")  # noqa: E501
    synth.add_argument("--theta", type=_theta, default=(0.0, 0.0, 0.0, 1.0), help="rho_xy,rho_xz,rho_yz[,eta]")  # noqa: E501
    synth.add_argument("--n", type=int, default=1000, help="rows (default: 1000)")
    synth.add_argument("--panel", type=int, metavar="P", help="draw a one-factor panel with P assets instead")  # noqa: E501
    synth.add_argument("--covariates-output", type=Path, help="covariate CSV of a panel")  # noqa: E501
    synth.add_argument("--contagion", type=_floats, help="extra crisis factor loadings of a panel, one per asset")  # noqa: E501
    synth.add_argument("--crisis-quantile", type=float, default=0.75, help="covariate quantile opening the panel's crisis regime (default: 0.75)")  # noqa: E501

    mc = sub.add_parser("mc", parents=[common], help="Monte Carlo RMSE study")
    mc.add_argument("--family", choices=[f.value for f in Family], default=Family.GAUSSIAN_SCALE.value, help="distribution family")  # noqa: E501
    mc.add_argument("--theta", type=_theta, required=True, help="rho_xy,rho_xz,rho_yz[,eta]")  # noqa: E501
    mc.add_argument("--sizes", type=_ints, default=(250, 500, 1000, 2000), help="increasing sample sizes")  # noqa: E501
    mc.add_argument("--replications", type=int, default=200, help="replications per size (default: 200)")  # noqa: E501
    mc.add_argument("--methods", type=_names, default=("proposed", "subsample"), help="proposed,subsample")  # noqa: E501
    mc.add_argument("--task", choices=[t.value for t in Task], default=Task.ECC_CURVE.value, help="study task")  # noqa: E501
    mc.add_argument("--width", type=float, default=0.1, help="band width (default: 0.1)")  # noqa: E501
    mc.add_argument("--moments", choices=[m.value for m in MomentChoice], default=MomentChoice.ASSERTED.value, help="covariate moments of the implied task")  # noqa: E501
    mc.add_argument("--oracle-draws", type=int, default=10_000_000, help="Monte Carlo oracle draws")  # noqa: E501

    regress = sub.add_parser("regress", parents=[common], help="piecewise affine regression of y on x")  # noqa: E501
    regress.add_argument("--input", "-i", type=Path, help="input CSV with columns x,y")
    regress.add_argument("--x", default="x", help="regressor column (default: x)")
    regress.add_argument("--y", default="y", help="response column (default: y)")
    regress.add_argument("--bins", type=int, default=20, help="number of bins (default: 20)")  # noqa: E501
    regress.add_argument("--binning", choices=[b.value for b in Binning], default=Binning.EQUAL_WIDTH.value, help="binning rule")  # noqa: E501
    regress.add_argument("--min-occupancy", type=int, default=10, help="minimum rows per bin (default: 10)")  # noqa: E501
    regress.add_argument("--predictions", type=Path, help="CSV of fitted values at the input x")  # noqa: E501

    dep = sub.add_parser("deptest", parents=[common], help="dependence tests on an A-sample")  # noqa: E501
    _add_roles(dep)
    dep.add_argument("--sigma-z", type=float, default=1.0, help="asserted unconditional standard deviation of Z (default: 1)")  # noqa: E501
    dep.add_argument("--perms", type=int, default=2000, help="permutations (default: 2000)")  # noqa: E501
    dep.add_argument("--p-method", choices=[m.value for m in PValueMethod], default=PValueMethod.PERMUTATION.value, help="p-value method")  # noqa: E501

    net = sub.add_parser("network", parents=[common], help="regime partial-correlation networks")  # noqa: E501
    net.add_argument("--residuals", type=Path, required=True, help="residual CSV (date + assets)")  # noqa: E501
    net.add_argument("--covariates", type=Path, required=True, help="covariate CSV (date + covariates)")  # noqa: E501
    net.add_argument("--quantile", type=float, default=0.75, help="crisis quantile of the first covariate (default: 0.75)")  # noqa: E501
    net.add_argument("--delta-scale", type=_floats, default=(1.0,), help="comma-separated counterfactual variance scales (default: 1)")  # noqa: E501
    net.add_argument("--bootstrap", type=int, default=0, help="bootstrap replicates of the centrality statistics (default: none)")  # noqa: E501
    net.add_argument("--corrected", action="store_true", help="correct stable and crisis matrices to unconditional correlations")  # noqa: E501
    net.add_argument("--centrality", choices=[m.value for m in CentralityMode], default=CentralityMode.ABSOLUTE.value, help="centrality mode")  # noqa: E501
    net.add_argument("--stats", type=Path, help="centrality JSON file; standard output after the edges when omitted")  # noqa: E501

    diagnose = sub.add_parser("diagnose", parents=[common], help="assumption diagnostics under an event")  # noqa: E501
    _add_roles(diagnose)
    diagnose.add_argument("--event", required=True, help="event, e.g. gt:z:0")
    return parser


def _needs_seed(args: argparse.Namespace) -> bool:
    if args.subcommand in ("synth", "mc", "deptest"):
        return True
    if args.subcommand in ("estimate", "curve"):
        return args.ci == "bootstrap"
    if args.subcommand == "network":
        return args.bootstrap > 0
    return False


def make_config(args: argparse.Namespace) -> RunConfig:
    """Resolve parsed arguments into a RunConfig."""
    options = {
        k: v
        for k, v in vars(args).items()
        if k not in ("subcommand", "input", "output", "seed", "threads", "verbose")
    }
    return RunConfig(
        subcommand=args.subcommand,
        input=getattr(args, "input", None),
        output=args.output,
        seed=resolve_seed(args.seed),
        threads=args.threads,
        needs_seed=_needs_seed(args),
        options=options,
    )


def _sample(config: RunConfig) -> Sample:
    return read_sample(
        config.input,
        x=config.option("x"),
        y=config.option("y"),
        z1=config.option("z"),
        z2=config.option("z2"),
    )


def _interval(
    config: RunConfig,
    sample: Sample,
    event: EventSpec,
    estimator: Callable[[Sample, EventSpec], EccEstimate],
) -> EccEstimate:
    method = config.option("ci")
    level = config.option("level")
    if method == "delta":
        if config.option("method", "corrected") == "subsample":
            msg = "delta-method intervals are available for the corrected estimator only"
            raise ValueError(msg)
        if DeltaStrategy(config.option("strategy")) is not DeltaStrategy.EMPIRICAL:
            msg = "delta-method intervals use empirical event moments; combine --strategy gaussian-model with --ci bootstrap or --ci none"  # noqa: E501
            raise ValueError(msg)
        return delta_method_estimate(sample, event, level)
    estimate = estimator(sample, event)
    if method == "bootstrap":
        ci = bootstrap_ci(
            sample,
            event,
            estimator,
            replicates=config.option("replicates"),
            level=level,
            seed=config.seed or 0,
            threads=config.threads,
        )
        return estimate.with_interval(ci.lower, ci.upper, ci.method.value)
    return estimate


def _estimate_row(estimate: EccEstimate) -> dict[str, Any]:
    lower, upper = estimate.ci if estimate.ci is not None else (None, None)
    return {
        "estimate": estimate.rho,
        "se": estimate.se,
        "lo": lower,
        "hi": upper,
        "n_total": estimate.n_total,
        "n_event": estimate.n_event,
        "method": estimate.method.value,
        "clamped": estimate.clamped,
        "ci_method": estimate.ci_method,
    }


def _estimator(config: RunConfig) -> Callable[[Sample, EventSpec], EccEstimate]:
    if config.option("method", "corrected") == "subsample":
        return ecc_subsample
    strategy = DeltaStrategy(config.option("strategy"))
    seed = config.seed or 0

    def corrected(sample: Sample, event: EventSpec) -> EccEstimate:
        return ecc_estimate(sample, event, strategy=strategy, seed=seed)

    return corrected


def run_estimate(config: RunConfig) -> None:
    """Estimate the correlation of X and Y under one event."""
    sample = _sample(config)
    event = parse_event(config.option("event"))
    estimate = _interval(config, sample, event, _estimator(config))
    write_frame(pd.DataFrame([{"event": str(event), **_estimate_row(estimate)}]), config.output)  # noqa: E501


def run_implied(config: RunConfig) -> None:
    """Estimate the unconditional correlation from an A-sample."""
    sample = _sample(config)
    if config.option("mle_event") is not None:
        moments: Any = TruncatedMLE(parse_event(config.option("mle_event")))
        source = "mle"
    else:
        sigma = config.option("sigma_z")
        if sigma <= 0:
            msg = "--sigma-z must be positive"
            raise ValueError(msg)
        moments = AssertedMoments.variance(sigma**2)
        source = "asserted"
    estimate = implied_unconditional(sample, moments)
    row = {**_estimate_row(estimate), "moments": source}
    write_frame(pd.DataFrame([row]), config.output)


def run_transport(config: RunConfig) -> None:
    """Move a conditional correlation to another event."""
    params = CorrelationParams(
        config.option("rho_xy"),
        config.option("rho_xz"),
        config.option("rho_yz"),
        0.0,
    )
    value = transport(params, config.option("delta_tilde"))
    write_frame(pd.DataFrame([{"delta_tilde": config.option("delta_tilde"), "rho": value}]), config.output)  # noqa: E501


def run_curve(config: RunConfig) -> None:
    """Estimate the conditional correlation on every quantile band of Z."""
    sample = _sample(config)
    if len(sample.z1) != 1:
        msg = "curve sweeps a single covariate column"
        raise ValueError(msg)
    estimator = _estimator(config)
    rows = []
    for upper, event in decile_sweep(sample, sample.z1[0], config.option("width")):
        estimate = _interval(config, sample, event, estimator)
        row = _estimate_row(estimate)
        rows.append({"band": upper, **{k: row[k] for k in ("estimate", "se", "lo", "hi")}})  # noqa: E501
    write_frame(pd.DataFrame(rows), config.output)


def run_synth(config: RunConfig) -> None:
    """Draw a synthetic sample or panel."""
    seed = int(config.seed)  # type: ignore[arg-type]
    if config.option("panel") is not None:
        covariates_path = config.option("covariates_output")
        if covariates_path is None:
            msg = "--panel needs --covariates-output"
            raise ValueError(msg)
        spec = PanelSpec(
            p=config.option("panel"),
            n=config.option("n"),
            contagion=config.option("contagion"),
            crisis_quantile=config.option("crisis_quantile"),
            seed=seed,
        )
        panel = generate_panel(spec)
        dates = panel.dates.strftime("%Y-%m-%d") if panel.dates is not None else None
        residuals = pd.DataFrame(panel.residuals, columns=list(panel.assets))
        covariates = pd.DataFrame(panel.covariates, columns=list(panel.covariate_names))
        if dates is not None:
            residuals.insert(0, "date", dates)
            covariates.insert(0, "date", dates)
        write_frame(residuals, config.output)
        write_frame(covariates, covariates_path)
        return
    rho_xy, rho_xz, rho_yz, eta = config.option("theta")
    spec = GenSpec(
        family=Family(config.option("family")),
        rho_xy=rho_xy,
        rho_xz=rho_xz,
        rho_yz=rho_yz,
        eta=eta,
        n=config.option("n"),
        seed=seed,
    )
    write_frame(generate(spec).to_frame(), config.output)


def run_mc(config: RunConfig) -> None:
    """Run a Monte Carlo RMSE study."""
    rho_xy, rho_xz, rho_yz, eta = config.option("theta")
    gen = GenSpec(
        family=Family(config.option("family")),
        rho_xy=rho_xy,
        rho_xz=rho_xz,
        rho_yz=rho_yz,
        eta=eta,
    )
    spec = StudySpec(
        gen=gen,
        sample_sizes=config.option("sizes"),
        replications=config.option("replications"),
        methods=tuple(StudyMethod(m) for m in config.option("methods")),
        task=Task(config.option("task")),
        seed=int(config.seed),  # type: ignore[arg-type]
        width=config.option("width"),
        moments=MomentChoice(config.option("moments")),
        oracle_draws=config.option("oracle_draws"),
        threads=config.threads,
    )
    write_frame(run_study(spec).to_frame(), config.output)


def run_regress(config: RunConfig) -> None:
    """Fit the piecewise affine regression."""
    x, y = config.option("x"), config.option("y")
    sample = read_sample(config.input, x=x, y=y, z1=())
    fit = fit_piecewise(
        sample,
        n_bins=config.option("bins"),
        binning=Binning(config.option("binning")),
        min_occupancy=config.option("min_occupancy"),
        threads=config.threads,
    )
    write_json(fit.to_dict(), config.output)
    predictions_path = config.option("predictions")
    if predictions_path is not None:
        values = sample.column(x)
        write_frame(pd.DataFrame({x: values, "fitted": predict(fit, values)}), predictions_path)  # noqa: E501


def run_deptest(config: RunConfig) -> None:
    """Run the five dependence tests."""
    results = run_tests(
        _sample(config),
        sigma_z=config.option("sigma_z"),
        permutations=config.option("perms"),
        seed=int(config.seed),  # type: ignore[arg-type]
        p_method=PValueMethod(config.option("p_method")),
        threads=config.threads,
    )
    write_frame(results_frame(results), config.output)


def _centrality_entry(stats: Any, regime: Regime, delta_scale: float | None, level: float = 0.95) -> dict[str, Any]:  # noqa: ANN401, E501
    entry: dict[str, Any] = {
        "regime": regime.value,
        "delta_scale": delta_scale,
        "mean": stats.mean,
        "sd": stats.sd,
        "eigenvalue": stats.eigenvalue,
        "scores": dict(zip(stats.labels, stats.scores.tolist())),
    }
    if stats.bootstrap is not None:
        entry["bootstrap"] = {
            "replicates": len(stats.bootstrap),
            "mean_interval": list(stats.interval(level, "mean")),
            "sd_interval": list(stats.interval(level, "sd")),
        }
    return entry


def run_network(config: RunConfig) -> None:
    """Build stable, crisis and counterfactual networks with centrality statistics."""
    panel = read_panel(config.option("residuals"), config.option("covariates"))
    split = split_regimes(panel, config.option("quantile"))
    corrected = config.option("corrected")
    mode = CentralityMode(config.option("centrality"))
    replicates = config.option("bootstrap")
    plan: list[tuple[Regime, float | None]] = [(Regime.STABLE, None), (Regime.CRISIS, None)]  # noqa: E501
    plan += [(Regime.COUNTERFACTUAL, scale) for scale in config.option("delta_scale")]

    edges = []
    entries = []
    for regime, scale in plan:
        delta_scale = 1.0 if scale is None else scale
        network = regime_network(panel, split, regime, corrected, delta_scale)
        frame = edge_frame(network)
        frame["delta_scale"] = scale
        edges.append(frame)
        if replicates > 0 and mode is CentralityMode.ABSOLUTE:
            stats = bootstrap_centrality(
                panel,
                split,
                regime,
                replicates=replicates,
                seed=int(config.seed),  # type: ignore[arg-type]
                corrected=corrected,
                delta_scale=delta_scale,
                threads=config.threads,
            )
        else:
            stats = eigenvector_centrality(network, mode)
        entries.append(_centrality_entry(stats, regime, scale))

    document = {
        "split": {
            "covariate": split.covariate,
            "quantile": split.quantile,
            "threshold": split.threshold,
            "stable_rows": int(split.stable.sum()),
            "crisis_rows": int(split.crisis.sum()),
        },
        "corrected": corrected,
        "centrality": mode.value,
        "networks": entries,
    }
    write_frame(pd.concat(edges, ignore_index=True), config.output)
    write_json(document, config.option("stats"))


def run_diagnose(config: RunConfig) -> None:
    """Report assumption diagnostics and the covariance-shift rank under an event."""
    sample = _sample(config)
    event = parse_event(config.option("event"))
    diagnostics = assumption_diagnostics(sample, event)
    mask = event_mask(sample, event)
    others = [c for c in sample.columns if c not in sample.z_columns]
    full = np.atleast_2d(np.cov(sample.block(others), rowvar=False))
    conditional = np.atleast_2d(np.cov(sample.subset(mask).block(others), rowvar=False))  # noqa: E501
    shift = covariance_shift(full, conditional, len(sample.z_columns))
    write_json(
        {
            "event": str(event),
            "event_mass": float(mask.mean()),
            "a1_gap": diagnostics.a1_gap,
            "a2_gap": diagnostics.a2_gap,
            "bias_bound_scale": diagnostics.bias_bound_scale,
            "covariance_shift": {
                "columns": others,
                "singular_values": shift.singular_values,
                "effective_rank": shift.effective_rank,
                "z_dim": shift.z_dim,
                "within_rank_bound": shift.within_rank_bound,
            },
        },
        config.output,
    )


HANDLERS: dict[str, Callable[[RunConfig], None]] = {
    "estimate": run_estimate,
    "implied": run_implied,
    "transport": run_transport,
    "curve": run_curve,
    "synth": run_synth,
    "mc": run_mc,
    "regress": run_regress,
    "deptest": run_deptest,
    "network": run_network,
    "diagnose": run_diagnose,
}


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(format=LOG_FORMAT, level=level)
    logging.getLogger().setLevel(level)


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run a subcommand and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    _configure_logging(args.verbose)
    try:
        config = make_config(args)
        HANDLERS[config.subcommand](config)
    except EventSpecError as err:
        print(f"ecc {args.subcommand}: usage error: {err}", file=sys.stderr)  # noqa: T201
        return EXIT_USAGE
    except EccError as err:
        msg = f"{args.subcommand} failed: {err}"
        _LOGGER.debug(msg, exc_info=True)
        print(f"ecc {args.subcommand}: error: {err}", file=sys.stderr)  # noqa: T201
        return EXIT_DATA
    except (ValueError, KeyError) as err:
        print(f"ecc {args.subcommand}: usage error: {err}", file=sys.stderr)  # noqa: T201
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
