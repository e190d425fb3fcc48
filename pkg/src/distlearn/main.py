"""
Provides the command line interface of distlearn. Results are printed to
stdout as json (or csv), progress and errors go to stderr.

Exit codes are 0 on success, 1 if a verification failed and 2 on usage or configuration errors.
"""

import argparse
import json
import sys
from typing import Any, Callable, NoReturn, Optional, get_args

import distlearn
from distlearn import logger
from distlearn.bounds import (BoundRequest, Tier, certificate_to_json, sample_size, tail_agrawal, tail_bound, tail_dkw,
                              tail_hellinger_agrawal, tail_hellinger_intermediate, tail_hoeffding_subset, tail_l2,
                              tail_mcdiarmid_tv, tail_union_tv)
from distlearn.core import Distribution, FamilySpec, distribution_to_json, family_spec_from_json, make_sample_set, parse_distribution_spec, sample, sample_set_to_json
from distlearn.estimators import EMPIRICAL, EstimatorKind, estimate
from distlearn.harness import (kl_unbounded, kl_unbounded_to_json, report_to_json, run_expectation, run_failure_rate,
                               run_tail_curve, tail_curve_report, tail_curve_to_csv, tail_curve_to_json)
from distlearn.metrics import METRIC_KINDS, distance, inequality_report
from distlearn.metrics import report_to_json as inequalities_to_json
from distlearn.settings import Against, Direction, ExperimentSettings, Mode, default_seed, default_threads, dist_spec_from_json
from distlearn.utils import DistlearnError, FatalError, InvalidConfig, PreconditionViolated, die_error, dump_json, print_table, print_warning
from distlearn.verify import run_acceptance

try:
    from distlearn.version import version
except ModuleNotFoundError:
    version = "unknown"

K_INDEPENDENT_METRICS = ("kolmogorov", "linf", "l2")
"""Metrics whose sample size does not depend on the domain size."""

def emit(obj: Any) -> None:
    """Prints the given object as json to stdout."""
    print(dump_json(obj))

def main_distance(args: argparse.Namespace) -> None:
    """Prints one or all distances between --p and --q."""
    p = parse_distribution_spec(args.p)
    q = parse_distribution_spec(args.q)
    if args.metric == "all":
        out: dict[str, Any] = {kind: distance(kind, p, q) for kind in METRIC_KINDS}
        out["inequalities"] = inequalities_to_json(inequality_report(p, q))
    else:
        out = {args.metric: distance(args.metric, p, q)}
    emit(out)

def main_estimate(args: argparse.Namespace) -> None:
    """
    Prints the estimate of an explicitly given sample (--samples and --k), or of
    n samples freshly drawn from --p. A drawn sample is compared with its source
    distribution in every metric.
    """
    truth: Optional[Distribution] = None
    if args.samples is not None:
        if args.p is not None:
            raise InvalidConfig("Only one of --samples and --p may be given")
        if args.k is None:
            raise InvalidConfig("--samples requires --k")
        if not isinstance(args.samples, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in args.samples):
            raise InvalidConfig("--samples must be a json list of symbols")
        k = args.k
        s = make_sample_set(args.samples, k=k)
    elif args.p is not None:
        if args.n is None:
            raise InvalidConfig("--p requires --n")
        truth = parse_distribution_spec(args.p)
        k = truth.k
        s = sample(truth, args.n, default_seed() if args.seed is None else args.seed)
    else:
        raise InvalidConfig("Either --samples or --p must be given")

    p_hat = estimate(args.estimator, s, k)
    out: dict[str, Any] = {"estimator": str(args.estimator), "k": k, "sample": sample_set_to_json(s), "estimate": distribution_to_json(p_hat)}
    if truth is not None:
        out["distances"] = {kind: distance(kind, truth, p_hat) for kind in METRIC_KINDS}
    emit(out)

def main_sample_size(args: argparse.Namespace) -> None:
    """Prints the sample size certificate for the requested metric."""
    k = args.k
    if k is None:
        if args.metric not in K_INDEPENDENT_METRICS:
            raise InvalidConfig(f"--k is required for metric '{args.metric}'")
        k = 1
    cert = sample_size(BoundRequest(args.metric, k, args.eps, args.delta, args.tier))
    logger.certificate(cert)
    emit(certificate_to_json(cert))

def _tail_or_none(func: Callable[[], float]) -> Optional[float]:
    try:
        return func()
    except PreconditionViolated:
        return None

def main_tail(args: argparse.Namespace) -> None:
    """
    Evaluates every tail inequality at the given n, k and threshold t. Bounds whose
    precondition does not hold are reported as null. With --metric, the bound that
    is asserted for that metric is reported as well.
    """
    n, k, t = args.n, args.k, args.t
    bounds: dict[str, Optional[float]] = {
        "dkw": tail_dkw(n, t),
        "hoeffding_subset": tail_hoeffding_subset(n, t),
        "union_tv": tail_union_tv(n, k, t),
        "mcdiarmid_tv": tail_mcdiarmid_tv(n, t),
        "hellinger_intermediate": tail_hellinger_intermediate(n, t),
        "hellinger_agrawal": _tail_or_none(lambda: tail_hellinger_agrawal(n, k, t)) if k >= 2 else None,
        "agrawal": _tail_or_none(lambda: tail_agrawal(n, k, t)) if k >= 2 else None,
        "l2": tail_l2(n, t),
    }
    out: dict[str, Any] = {"n": n, "k": k, "t": t, "bounds": bounds}
    if args.metric is not None:
        out["asserted"] = {"metric": args.metric, "tail": tail_bound(args.metric, n, k, t)}
    emit(out)

def load_settings(path: str) -> ExperimentSettings:
    """
    Loads experiment settings from a json config file.

    Raises
    ------
    FatalError
        The file cannot be read, is not valid json, or is not a valid configuration.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            obj = json.load(f)
    except OSError as e:
        raise FatalError(f"Cannot read configuration: {e.strerror}", loc=path) from e
    except json.JSONDecodeError as e:
        raise FatalError(f"Malformed json: {e.msg}", loc=f"{path}:{e.lineno}:{e.colno}") from e

    try:
        return ExperimentSettings.from_json(obj)
    except DistlearnError as e:
        raise FatalError(str(e), loc=path) from e

def settings_from_args(args: argparse.Namespace) -> ExperimentSettings:
    """Collects the experiment settings given as flags. Flags that were not given stay None."""
    dist: Any = None
    if args.p is not None and args.family is not None:
        raise InvalidConfig("Only one of --p and --family may be given")
    if args.p is not None:
        dist = dist_spec_from_json(args.p)
    elif args.family is not None:
        if args.k is None:
            raise InvalidConfig("--family requires --k")
        dist = family_spec_from_json({"family": args.family, "k": args.k, "params": args.params or {}, "seed": args.family_seed})
    elif args.k is not None:
        # --k alone selects the uniform distribution
        dist = FamilySpec("uniform", args.k)

    return ExperimentSettings(
        mode=args.mode,
        dist=dist,
        estimator=args.estimator,
        metric=args.metric,
        n=args.n,
        auto_n=True if args.auto_n else None,
        trials=args.trials,
        base_seed=args.seed,
        threads=args.threads,
        thresholds=args.thresholds,
        eps=args.eps,
        delta=args.delta,
        squared=True if args.squared else None,
        direction=args.direction,
        against=args.against,
        tier=args.tier,
        tiny_mass=args.tiny_mass,
    )

def main_simulate(args: argparse.Namespace) -> None:
    """Runs the experiment given by --config and flags, prints the report and exits with 1 if a verdict failed."""
    settings = ExperimentSettings()
    if args.config is not None:
        settings = load_settings(args.config)
    config = settings.overlay(settings_from_args(args)).resolve()
    if args.csv and config.mode != "tail-curve":
        raise InvalidConfig("--csv is only available for tail curves")

    if config.mode == "kl-unbounded":
        demo = kl_unbounded(config)
        emit(kl_unbounded_to_json(demo))
        passed = demo.matches
    elif config.mode == "tail-curve":
        points = run_tail_curve(config)
        report = tail_curve_report(config, points)
        if args.csv:
            print(tail_curve_to_csv(points), end="")
        else:
            emit({"report": report_to_json(report), "curve": tail_curve_to_json(points)})
        passed = report.passed
    else:
        report = run_expectation(config) if config.mode == "expectation" else run_failure_rate(config)
        emit(report_to_json(report))
        passed = report.passed

    if not passed:
        sys.exit(1)

def main_verify_all(args: argparse.Namespace) -> None:
    """Runs the acceptance grid, prints a summary table to stderr and the results as json."""
    seed = default_seed() if args.seed is None else args.seed
    threads = default_threads() if args.threads is None else args.threads
    if threads < 1:
        raise InvalidConfig(f"threads must be at least 1, got {threads}")
    if args.scale == "full" and not logger.is_quiet():
        print_warning("the full acceptance grid runs 10^5 trials per tail experiment and takes several minutes")
    results = run_acceptance(seed, args.scale, threads)

    if not logger.is_quiet():
        col_reset = logger.col("\033[m")
        rows = [[[logger.verdict_str(r.passed)], [r.name], [logger.col("\033[90m"), r.detail, col_reset]] for r in results]
        print_table([["verdict"], ["criterion"], ["detail"]], rows, file=sys.stderr)

    passed = all(r.passed for r in results)
    emit({"seed": seed, "scale": args.scale, "passed": passed,
          "criteria": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]})
    if not passed:
        sys.exit(1)

class ArgumentParserError(Exception):
    """Error class for argument parsing errors."""

class ThrowingArgumentParser(argparse.ArgumentParser):
    """An argument parser that throws when invalid argument types are passed."""

    def error(self, message: str) -> NoReturn:
        """Raises an exception on error."""
        raise ArgumentParserError(message)

def json_value(text: str) -> Any:
    """Argument type for inline json values."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise argparse.ArgumentTypeError(f"invalid json: {e.msg}") from e

def float_list(text: str) -> tuple[float, ...]:
    """Argument type for a comma separated list of numbers."""
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid list of numbers: '{text}'") from e

def estimator_kind(text: str) -> EstimatorKind:
    """Argument type for an estimator."""
    try:
        return EstimatorKind.parse(text)
    except DistlearnError as e:
        raise argparse.ArgumentTypeError(str(e)) from e

def add_output_args(parser: argparse.ArgumentParser) -> None:
    """Adds the options every subcommand shares."""
    parser.add_argument('--debug', dest='debug', action='store_true',
            help="Enable debugging output.")
    parser.add_argument('--no-color', dest='no_color', action='store_true',
            help="Disables any color output. Color can also be disabled by setting the NO_COLOR environment variable.")
    parser.add_argument('-q', '--quiet', dest='quiet', action='store_true',
            help="Suppress progress output on stderr. Results are still printed to stdout.")

def add_experiment_args(parser: argparse.ArgumentParser) -> None:
    """Adds the flags that make up an experiment configuration."""
    parser.add_argument('--config', dest='config', default=None, type=str,
            help="A json file with the experiment configuration. Flags override values from this file.")
    parser.add_argument('--mode', dest='mode', default=None, choices=get_args(Mode),
            help="The kind of experiment.")
    parser.add_argument('--metric', dest='metric', default=None, choices=METRIC_KINDS,
            help="The metric between the true distribution and its estimate.")
    parser.add_argument('--p', dest='p', default=None, type=json_value,
            help="The true distribution as json, either {\"pmf\": [...]} or {\"family\": ..., \"k\": ..., \"params\": {...}, \"seed\": ...}.")
    parser.add_argument('--family', dest='family', default=None, type=str,
            help="The family of the true distribution (uniform, point_mass, two_point, zipf, dirichlet). Requires --k.")
    parser.add_argument('--k', dest='k', default=None, type=int,
            help="The domain size. Without --family or --p, selects the uniform distribution.")
    parser.add_argument('--params', dest='params', default=None, type=json_value,
            help="The family parameters as a json object, e.g. '{\"exponent\": 1.0}'.")
    parser.add_argument('--family-seed', dest='family_seed', default=0, type=int,
            help="The seed used to draw a dirichlet distribution.")
    parser.add_argument('--estimator', dest='estimator', default=None, type=estimator_kind,
            help="The estimator, 'empirical' (default) or 'add-constant:<c>'.")
    parser.add_argument('--n', dest='n', default=None, type=int,
            help="The number of samples per trial.")
    parser.add_argument('--auto-n', dest='auto_n', action='store_true',
            help="Use the sample size certificate for --metric, --eps and --delta as n.")
    parser.add_argument('--trials', dest='trials', default=None, type=int,
            help="The number of trials (default 10000).")
    parser.add_argument('--seed', dest='seed', default=None, type=int,
            help="The base seed. Defaults to the DISTLEARN_SEED environment variable, or 0.")
    parser.add_argument('--threads', dest='threads', default=None, type=int,
            help="The number of worker threads. Defaults to DISTLEARN_THREADS, or 1. Results do not depend on this.")
    parser.add_argument('--thresholds', dest='thresholds', default=None, type=float_list,
            help="Comma separated, strictly increasing thresholds of a tail curve.")
    parser.add_argument('--eps', dest='eps', default=None, type=float,
            help="The accuracy of a failure rate experiment.")
    parser.add_argument('--delta', dest='delta', default=None, type=float,
            help="The allowed failure probability.")
    parser.add_argument('--squared', dest='squared', action='store_true',
            help="Aggregate the squared metric.")
    parser.add_argument('--direction', dest='direction', default=None, choices=get_args(Direction),
            help="Evaluate metric(p, estimate) (forward, default) or metric(estimate, p) (reverse).")
    parser.add_argument('--against', dest='against', default=None, choices=get_args(Against),
            help="Compare the failure rate with delta (default) or with the asserted tail bound.")
    parser.add_argument('--tier', dest='tier', default=None, choices=get_args(Tier),
            help="The Hellinger bound tier used by --auto-n.")
    parser.add_argument('--tiny-mass', dest='tiny_mass', default=None, type=float,
            help="The mass of symbol 2 in the kl-unbounded demo.")
    parser.add_argument('--csv', dest='csv', action='store_true',
            help="Print a tail curve as csv instead of json.")

def main(argv: Optional[list[str]] = None) -> None:
    """
    The main program entry point. This will parse arguments and run
    the given subcommand. Defaults to sys.argv[1:] if argv is None.
    """
    if argv is None:
        argv = sys.argv[1:]
    parser = ThrowingArgumentParser(description="Learns discrete distributions: distances, sample size certificates, tail bounds and seeded Monte Carlo verification.")
    parser.add_argument('-V', '--version', action='version',
            version=f"%(prog)s version {version}")
    subparsers = parser.add_subparsers(title="commands", dest="command", parser_class=ThrowingArgumentParser)

    parser_distance = subparsers.add_parser("distance", help="Computes distances between two distributions.")
    add_output_args(parser_distance)
    parser_distance.add_argument('--p', dest='p', required=True, type=json_value,
            help="The first distribution as json.")
    parser_distance.add_argument('--q', dest='q', required=True, type=json_value,
            help="The second distribution as json.")
    parser_distance.add_argument('--metric', dest='metric', default="all", choices=[*METRIC_KINDS, "all"],
            help="The metric to compute. 'all' computes every metric and the inequality report.")
    parser_distance.set_defaults(func=main_distance)

    parser_estimate = subparsers.add_parser("estimate", help="Estimates a distribution from samples.")
    add_output_args(parser_estimate)
    parser_estimate.add_argument('--estimator', dest='estimator', default=EMPIRICAL, type=estimator_kind,
            help="The estimator, 'empirical' (default) or 'add-constant:<c>'.")
    parser_estimate.add_argument('--samples', dest='samples', default=None, type=json_value,
            help="The samples as a json list of symbols in 1..k.")
    parser_estimate.add_argument('--k', dest='k', default=None, type=int,
            help="The domain size of --samples.")
    parser_estimate.add_argument('--p', dest='p', default=None, type=json_value,
            help="Draw the samples from this distribution instead.")
    parser_estimate.add_argument('--n', dest='n', default=None, type=int,
            help="The number of samples to draw from --p.")
    parser_estimate.add_argument('--seed', dest='seed', default=None, type=int,
            help="The seed used to draw from --p.")
    parser_estimate.set_defaults(func=main_estimate)

    parser_sample_size = subparsers.add_parser("sample-size", help="Computes the number of samples needed to learn a distribution.")
    add_output_args(parser_sample_size)
    parser_sample_size.add_argument('--metric', dest='metric', required=True, choices=METRIC_KINDS,
            help="The metric.")
    parser_sample_size.add_argument('--k', dest='k', default=None, type=int,
            help="The domain size. Optional for kolmogorov, linf and l2.")
    parser_sample_size.add_argument('--eps', dest='eps', required=True, type=float,
            help="The accuracy.")
    parser_sample_size.add_argument('--delta', dest='delta', required=True, type=float,
            help="The failure probability.")
    parser_sample_size.add_argument('--tier', dest='tier', default=None, choices=get_args(Tier),
            help="The Hellinger bound tier (default optimal).")
    parser_sample_size.set_defaults(func=main_sample_size)

    parser_tail = subparsers.add_parser("tail", help="Evaluates the tail inequalities.")
    add_output_args(parser_tail)
    parser_tail.add_argument('--n', dest='n', required=True, type=int,
            help="The number of samples.")
    parser_tail.add_argument('--k', dest='k', default=1, type=int,
            help="The domain size.")
    parser_tail.add_argument('--t', dest='t', required=True, type=float,
            help="The threshold.")
    parser_tail.add_argument('--metric', dest='metric', default=None, choices=METRIC_KINDS,
            help="Also report the bound asserted for this metric.")
    parser_tail.set_defaults(func=main_tail)

    parser_simulate = subparsers.add_parser("simulate", help="Runs a seeded Monte Carlo experiment.")
    add_output_args(parser_simulate)
    add_experiment_args(parser_simulate)
    parser_simulate.set_defaults(func=main_simulate)

    parser_verify = subparsers.add_parser("verify-all", help="Runs the acceptance grid.")
    add_output_args(parser_verify)
    parser_verify.add_argument('--seed', dest='seed', default=None, type=int,
            help="The base seed. Defaults to the DISTLEARN_SEED environment variable, or 0.")
    parser_verify.add_argument('--scale', dest='scale', default="smoke", choices=["smoke", "full"],
            help="Run reduced (smoke) or complete (full) trial counts.")
    parser_verify.add_argument('--threads', dest='threads', default=None, type=int,
            help="The number of worker threads per experiment.")
    parser_verify.set_defaults(func=main_verify_all)

    try:
        args: argparse.Namespace = parser.parse_args(argv)
    except ArgumentParserError as e:
        die_error(str(e))

    if 'func' not in args:
        parser.print_help(sys.stderr)
        die_error("no command given")

    distlearn.args = args
    logger.debug_args(f"command {args.command}", {k: v for k, v in vars(args).items() if k != "func"})
    try:
        args.func(args)
    except FatalError as e:
        die_error(str(e), loc=e.loc)
    except DistlearnError as e:
        die_error(str(e))
