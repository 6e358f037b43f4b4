"""Command-line interface: ``isirate {simulate,estimate,validate,summary}``.

Exit codes: 0 the pipeline ran (whatever the test verdicts), 2 bad
arguments or configuration, 3 unreadable or invalid input data,
4 too little data, 5 non-firing simulation, 1 anything else.
"""

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (InsufficientData, IsiRateError, NonFiringRegime, ParseError,
                     RejectedInput)
from .estimators import EstimatorConfig, conditional_intensity_path, fit
from .generators import (BIT_GENERATOR, FgmExpParams, TwoCompartmentParams,
                         gen_fgm_exponential, gen_poisson, gen_two_compartment)
from .io import read_input, write_csv, write_json
from .isi import CountingView, count_rate, instantaneous_mean_rate, mean_rate
from .oracles import ExpRefractoryModel, fgm_conditional_hazard
from .validation import ValidationConfig, kendall_tau_test, validate

log = logging.getLogger("isirate")

SEED_ENV = "ISIRATE_SEED"
EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_INPUT, EXIT_DATA, EXIT_NONFIRING = 0, 1, 2, 3, 4, 5

# argparse destinations that describe the run rather than configure it
_NOT_CONFIG = {"func", "config", "verbose"}


class ConfigError(RejectedInput):
    """Bad command-line or ``--config`` values."""


def _default_seed():
    value = os.environ.get(SEED_ENV)
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={value!r} is not an integer") from None


def _resolved(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


def _metadata(args, **extra):
    meta = {"command": args.command, "version": __version__,
            "rng": BIT_GENERATOR, "config": _resolved(args)}
    meta.update(extra)
    return meta


def _sidecar(path):
    path = Path(path)
    return path.with_name(path.name + ".json")


def _estimator_config(args):
    try:
        return EstimatorConfig(kernel_scale=args.kernel_scale,
                               bandwidth_exponent=args.beta,
                               survival_floor=args.survival_floor,
                               eval_step=args.eval_step,
                               domain_cap=args.domain_cap)
    except RejectedInput as err:
        raise ConfigError(str(err)) from None


# -- subcommands --------------------------------------------------------------

def cmd_simulate(args):
    trajectory = None
    if args.model == "poisson":
        isis = gen_poisson(args.n, args.rate, args.seed)
    elif args.model == "fgm":
        params = FgmExpParams(args.rate, args.delta, args.alpha, args.seed)
        isis = gen_fgm_exponential(args.n, params)
    else:
        params = TwoCompartmentParams(
            leak=args.alpha, coupling=args.alpha_r, drift=args.mu, noise=args.sigma,
            threshold=args.s, dt=args.dt, burn_in=args.burn_in, seed=args.seed,
            max_steps=args.max_steps)
        isis, trajectory = gen_two_compartment(params, args.n, args.trajectory is not None)
    write_csv(args.out, ["index", "isi"], [np.arange(1, len(isis) + 1), isis.isis])
    write_json(_sidecar(args.out), _metadata(args, n_isis=len(isis)))
    if trajectory is not None:
        write_csv(args.trajectory, ["t", "x1", "x2"], [trajectory.t, trajectory.x1, trajectory.x2])
        write_json(_sidecar(args.trajectory), _metadata(args))
    log.info("wrote %d ISIs to %s", len(isis), args.out)
    return EXIT_OK


def _fit_input(args):
    config = _estimator_config(args)
    train, isis = read_input(args.input, args.input_format)
    return train, isis, fit(isis, config)


def cmd_estimate(args):
    train, isis, fitted = _fit_input(args)
    path = conditional_intensity_path(fitted, train, grid_step=args.grid_step)
    header = ["t", "isi", "lambda_hat"]
    # 1-based ISI numbers, as in the index column of ISI files
    columns = [path.times, path.segment + 1, path.values]
    if args.oracle == "fgm":
        model = ExpRefractoryModel(args.rate, args.delta, args.alpha)
        local = path.times - train.epochs[path.segment - 1]
        header.append("lambda_oracle")
        columns.append(fgm_conditional_hazard(model, local, isis.isis[path.segment - 1]))
    write_csv(args.out, header, columns)
    extra = {"n_isis": len(isis), "bandwidth": fitted.bandwidth,
             "smoothing": fitted.smoothing, "domain_cap": fitted.domain_cap}
    write_json(_sidecar(args.out), _metadata(args, **extra))
    if args.surface:
        x = isis.isis
        lo, hi = np.quantile(x, [0.05, 0.95])
        taus = np.linspace(lo, hi, args.surface_points)
        step = fitted.config.eval_step
        ts = np.unique(np.round(np.linspace(0, min(hi, fitted.domain_cap), args.surface_points) / step) * step)
        ts = ts[ts <= fitted.domain_cap]
        h = fitted.conditional_hazard_grid(taus, ts)
        tt, ss = np.meshgrid(ts, taus)
        write_csv(args.surface, ["tau", "t", "h_hat"], [ss.ravel(), tt.ravel(), h.ravel()])
        write_json(_sidecar(args.surface), _metadata(args, **extra))
    return EXIT_OK


def cmd_validate(args):
    train, isis, fitted = _fit_input(args)
    try:
        vconfig = ValidationConfig(level=args.level, n_bootstrap=args.n_bootstrap,
                                   seed=args.seed, grid_step=args.grid_step)
    except RejectedInput as err:
        raise ConfigError(str(err)) from None
    report = validate(train, fitted, vconfig)
    payload = _metadata(args, n_isis=len(isis), bandwidth=fitted.bandwidth,
                        smoothing=fitted.smoothing, domain_cap=fitted.domain_cap)
    payload["estimator"] = fitted.config.to_dict()
    payload["report"] = report.to_dict()
    text = write_json(args.out, payload)
    if args.out is None:
        sys.stdout.write(text)
    if args.rescaled_out:
        r = report.rescaled
        write_csv(args.rescaled_out, ["isi", "rescaled", "uniform"],
                  [r.index, r.values, report.uniformized.values])
        write_json(_sidecar(args.rescaled_out), _metadata(args))
    return EXIT_OK


def cmd_summary(args):
    train, isis = read_input(args.input, args.input_format)
    view = CountingView(train)
    payload = _metadata(args, n_isis=len(isis))
    payload["mean_rate"] = mean_rate(isis)
    payload["instantaneous_mean_rate"] = instantaneous_mean_rate(isis)
    times = args.t if args.t else [train.horizon]
    payload["count_rate"] = [{"t": t, "rate": count_rate(view, t)} for t in times]
    tau, p = kendall_tau_test(isis.isis)
    # undefined tau (constant ISIs) is reported as null
    payload["kendall"] = {"tau": tau if math.isfinite(tau) else None, "p_value": p}
    text = write_json(args.out, payload)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def _add_estimator_flags(p):
    g = p.add_argument_group("estimator")
    g.add_argument("--kernel-scale", type=float, default=0.2,
                   help="standard deviation of the Gaussian kernels (default 0.2)")
    g.add_argument("--beta", type=float, default=0.2,
                   help="bandwidth exponent, c_n = n^-beta, in (0, 0.25) (default 0.2)")
    g.add_argument("--survival-floor", type=float, default=1e-6)
    g.add_argument("--eval-step", type=float, default=0.01,
                   help="trapezoid step for survival integrals and the path grid")
    g.add_argument("--domain-cap", type=float, default=None,
                   help="upper end M of the estimation window (default: 99th percentile)")
    g.add_argument("--grid-step", type=float, default=None,
                   help="path grid step (default: --eval-step)")


def _add_input(p):
    p.add_argument("input", help="spike-time file (one epoch per line) or index,isi CSV")
    p.add_argument("--input-format", choices=["auto", "spiketimes", "isi-csv"], default="auto")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="isirate",
        description="Conditional firing-rate estimation for Markov interspike intervals.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate synthetic ISIs")
    models = sim.add_subparsers(dest="model", required=True)
    for name, helptext in [("poisson", "i.i.d. exponential ISIs"),
                           ("fgm", "FGM-copula Markov chain of shifted exponentials"),
                           ("bicomp", "stochastic two-compartment neuron")]:
        m = models.add_parser(name, help=helptext)
        m.add_argument("--n", type=int, default=1000, help="number of ISIs")
        m.add_argument("--seed", type=int, default=None,
                       help=f"RNG seed (default: ${SEED_ENV} or 0)")
        m.add_argument("--out", default="isis.csv", help="ISI CSV path; metadata goes to OUT.json")
        m.add_argument("--config", default=None, help="JSON file whose keys override flags")
        m.set_defaults(func=cmd_simulate)
        if name in ("poisson", "fgm"):
            m.add_argument("--rate", type=float, default=1.0)
        if name == "fgm":
            m.add_argument("--delta", type=float, default=0.5, help="refractory period")
            m.add_argument("--alpha", type=float, default=1.0, help="FGM dependence in [-1, 1]")
        if name == "bicomp":
            m.add_argument("--alpha", type=float, default=0.05, help="leak constant")
            m.add_argument("--alpha-r", type=float, default=0.5, help="compartment coupling")
            m.add_argument("--mu", type=float, default=4.0, help="input drift")
            m.add_argument("--sigma", type=float, default=1.0, help="input noise")
            m.add_argument("--s", type=float, default=10.0, help="firing threshold")
            m.add_argument("--dt", type=float, default=0.01, help="time step")
            m.add_argument("--burn-in", type=int, default=100, help="ISIs discarded first")
            m.add_argument("--max-steps", type=int, default=10**8)
            m.add_argument("--trajectory", default=None, help="also write t,x1,x2 CSV here")

    est = sub.add_parser("estimate", help="estimate the conditional intensity path")
    _add_input(est)
    _add_estimator_flags(est)
    est.add_argument("--out", default="intensity.csv")
    est.add_argument("--oracle", choices=["none", "fgm"], default="none",
                     help="add the exact FGM intensity as a lambda_oracle column")
    est.add_argument("--rate", type=float, default=1.0, help="oracle rate")
    est.add_argument("--delta", type=float, default=0.5, help="oracle refractory period")
    est.add_argument("--alpha", type=float, default=1.0, help="oracle FGM dependence")
    est.add_argument("--surface", default=None, help="also write tau,t,h_hat samples here")
    est.add_argument("--surface-points", type=int, default=25)
    est.add_argument("--config", default=None, help="JSON file whose keys override flags")
    est.set_defaults(func=cmd_estimate)

    val = sub.add_parser("validate", help="time-rescaling validation of the estimate")
    _add_input(val)
    _add_estimator_flags(val)
    val.add_argument("--level", type=float, default=0.05)
    val.add_argument("--n-bootstrap", type=int, default=1000)
    val.add_argument("--seed", type=int, default=None,
                     help=f"bootstrap seed (default: ${SEED_ENV} or 0)")
    val.add_argument("--out", default=None, help="report JSON path (default: stdout)")
    val.add_argument("--rescaled-out", default=None, help="transformed-ISI CSV path")
    val.add_argument("--config", default=None, help="JSON file whose keys override flags")
    val.set_defaults(func=cmd_validate)

    summ = sub.add_parser("summary", help="classical rate statistics and Kendall's tau")
    _add_input(summ)
    summ.add_argument("--t", type=float, action="append", default=None,
                      help="time for N(t)/t; repeatable (default: horizon)")
    summ.add_argument("--out", default=None, help="JSON path (default: stdout)")
    summ.add_argument("--config", default=None, help="JSON file whose keys override flags")
    summ.set_defaults(func=cmd_summary)
    return parser


def _apply_config(args):
    if args.config is None:
        return
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as err:
        raise ConfigError(f"cannot read config {args.config}: {err}") from None
    # metadata sidecars nest the resolved flags under "config"
    if isinstance(data.get("config"), dict) and "command" in data:
        data = data["config"]
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest in ("command", "model") and getattr(args, dest, None) != value:
            raise ConfigError(f"config is for {key}={value!r}, not {getattr(args, dest)!r}")
        if not hasattr(args, dest) or dest in _NOT_CONFIG:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(args, dest, value)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_config(args)
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        return args.func(args)
    except ConfigError as err:
        print(f"isirate: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, RejectedInput, OSError) as err:
        print(f"isirate: input error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except InsufficientData as err:
        print(f"isirate: insufficient data: {err}", file=sys.stderr)
        return EXIT_DATA
    except NonFiringRegime as err:
        print(f"isirate: {err}", file=sys.stderr)
        return EXIT_NONFIRING
    except IsiRateError as err:
        print(f"isirate: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
