"""Command-line interface: thresholds, figure sweeps, diagnostics and cost tables.

Option values resolve as: command-line flag, then ``--config FILE``
(``key=value`` lines), then built-in defaults. Every CSV gets a
``<csv>.manifest`` sidecar in the same format, so
``onebit-emr fig1 --config out.csv.manifest`` replays a run exactly.
"""

import argparse
import datetime as _dt
import math
import sys
import warnings

from . import __version__
from .cost import CostScheme, cost_report
from .detector import Scheme, ThresholdSpec, compute_threshold
from .montecarlo import (
    null_distribution_diagnostic,
    sample_size_ratio,
    snr_gap_db,
    sweep_pd_vs_n,
    sweep_pd_vs_snr,
    sweep_threshold_error,
)
from .numerics import check_probability
from .signal import DEFAULT_PU_ANGLE

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

# Pass/fail tolerances reported by ``diagnose``.
KS_ENTRY_TOL = 0.02
KS_CHI2_TOL = 0.02
CORR_TOL = 0.05


class UsageError(Exception):
    pass


def _int_list(text):
    return [int(v) for v in str(text).replace(" ", "").split(",") if v]


def _float_list(text):
    return [float(v) for v in str(text).replace(" ", "").split(",") if v]


def _pfa(text):
    try:
        return check_probability(float(text), "pfa")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


# name -> (type, help)
OPTIONS = {
    "m": (_positive_int, "antenna count"),
    "n": (_positive_int, "samples per frame"),
    "c": (float, "ratio m/n (m = round(c n))"),
    "pfa": (_pfa, "target false-alarm probability"),
    "snr_db": (float, "SNR in dB"),
    "snr_values": (_float_list, "comma-separated SNR grid in dB"),
    "n_values": (_int_list, "comma-separated sample sizes"),
    "trials": (_positive_int, "Monte Carlo trials per point"),
    "calibration_trials": (_positive_int, "H0 trials for empirical thresholds (default 1e3/pfa)"),
    "threshold": (str, "threshold mode: theory or empirical"),
    "seed": (int, "master seed"),
    "angle": (float, "PU angle in radians"),
    "workers": (_positive_int, "worker processes"),
    "out": (str, "output CSV path"),
    "m_onebit": (_positive_int, "one-bit antenna count for a matched-performance comparison"),
    "n_onebit": (_positive_int, "one-bit sample count for a matched-performance comparison"),
}

DEFAULTS = {
    "m": 4,
    "n": 1000,
    "c": 0.5,
    "pfa": 1e-3,
    "seed": 0,
    "angle": DEFAULT_PU_ANGLE,
    "workers": 1,
}

COMMAND_DEFAULTS = {
    "fig1": {"n_values": [16, 32, 64, 128, 256, 512], "out": "fig1.csv"},
    "fig2": {"n": 128, "snr_values": [float(v) for v in range(-24, 1)], "trials": 2000,
             "threshold": "theory", "out": "fig2.csv"},
    "fig3": {"n_values": list(range(4, 66, 2)), "snr_db": -6.0, "trials": 2000,
             "threshold": "empirical", "out": "fig3.csv"},
    "diagnose": {"n": 1024, "trials": 10000},
    "cost": {"n": 1000},
}

COMMAND_OPTIONS = {
    "threshold": ["m", "n", "pfa", "seed"],
    "fig1": ["c", "n_values", "pfa", "trials", "seed", "workers", "out"],
    "fig2": ["c", "n", "snr_values", "pfa", "trials", "threshold", "calibration_trials", "angle",
             "seed", "workers", "out"],
    "fig3": ["c", "n_values", "snr_db", "pfa", "trials", "threshold", "calibration_trials", "angle",
             "seed", "workers", "out"],
    "diagnose": ["m", "n", "trials", "seed", "workers"],
    "cost": ["m", "n", "m_onebit", "n_onebit", "seed"],
}

_MANIFEST_ONLY = {"command", "version", "started", "finished"}


def read_config(path):
    """Parse a flat ``key=value`` file; blank lines and ``#`` comments are skipped."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def write_manifest(path, command, params, started, finished):
    lines = [f"command={command}", f"version={__version__}"]
    for key in sorted(params):
        value = params[key]
        if isinstance(value, (list, tuple)):
            value = ",".join(format(v, ".17g") if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, float):
            value = format(value, ".17g")
        lines.append(f"{key}={value}")
    lines += [f"started={started}", f"finished={finished}"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="onebit-emr",
        description="One-bit and full-resolution EMR spectrum sensing experiments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "threshold": "print the three closed-form thresholds",
        "fig1": "relative threshold error versus sample size (CSV)",
        "fig2": "detection probability versus SNR (CSV)",
        "fig3": "detection probability versus sample size (CSV)",
        "diagnose": "noise-only distribution checks",
        "cost": "flop and transistor counts",
    }
    for name, opts in COMMAND_OPTIONS.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="key=value file (e.g. a run manifest)")
        for opt in opts:
            typ, text = OPTIONS[opt]
            p.add_argument("--" + opt.replace("_", "-"), dest=opt, type=typ, default=None, help=text)
    return parser


def resolve(args, parser):
    """Merge flags, config file and defaults into a plain dict."""
    command = args.command
    config = {}
    if args.config:
        try:
            config = read_config(args.config)
        except OSError as exc:
            parser.error(f"cannot read config: {exc}")
        except UsageError as exc:
            parser.error(str(exc))
    params = {}
    for opt in COMMAND_OPTIONS[command]:
        value = getattr(args, opt)
        if value is None and opt in config:
            try:
                value = OPTIONS[opt][0](config[opt])
            except (ValueError, argparse.ArgumentTypeError) as exc:
                parser.error(f"config value for {opt}: {exc}")
        if value is None:
            value = COMMAND_DEFAULTS.get(command, {}).get(opt, DEFAULTS.get(opt))
        params[opt] = value
    unknown = set(config) - set(COMMAND_OPTIONS[command]) - _MANIFEST_ONLY
    if unknown:
        parser.error(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
    if "trials" in params and params["trials"] is None:
        params["trials"] = int(math.ceil(1e3 / params["pfa"]))
    if params.get("threshold") not in (None, "theory", "empirical"):
        parser.error("--threshold must be 'theory' or 'empirical'")
    return params


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def cmd_threshold(p, out):
    m, n, eps = p["m"], p["n"], p["pfa"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rows = [(s.value, compute_threshold(ThresholdSpec(m, n, eps, s))) for s in Scheme]
    print(f"m={m} n={n} pfa={eps:g} c={m / n:.17g} q={m * (2 * m - 1)}", file=out)
    print(f"{'scheme':<16}threshold", file=out)
    for name, value in rows:
        print(f"{name:<16}{value:.12f}", file=out)
    return EXIT_OK


def _emit(command, result, p, started, out):
    result.to_csv(p["out"])
    write_manifest(p["out"] + ".manifest", command, p, started, _now())
    print(f"wrote {p['out']} ({len(result.axis_values)} rows)", file=out)


def cmd_fig1(p, out):
    started = _now()
    result = sweep_threshold_error(p["c"], p["n_values"], p["pfa"], p["trials"], p["seed"], p["workers"])
    _emit("fig1", result, p, started, out)
    return EXIT_OK


def cmd_fig2(p, out):
    started = _now()
    result = sweep_pd_vs_snr(p["c"], p["n"], p["snr_values"], p["pfa"], p["trials"], p["angle"],
                             p["seed"], p["threshold"], p["calibration_trials"], p["workers"])
    _emit("fig2", result, p, started, out)
    print(f"snr gap at Pd=0.5: {snr_gap_db(result):.3f} dB", file=out)
    return EXIT_OK


def cmd_fig3(p, out):
    started = _now()
    result = sweep_pd_vs_n(p["c"], p["n_values"], p["snr_db"], p["pfa"], p["trials"], p["angle"],
                           p["seed"], p["threshold"], p["calibration_trials"], p["workers"])
    _emit("fig3", result, p, started, out)
    print(f"sample-size ratio at Pd=0.5: {sample_size_ratio(result):.3f}", file=out)
    return EXIT_OK


def cmd_diagnose(p, out):
    d = null_distribution_diagnostic(p["m"], p["n"], p["trials"], p["seed"], p["workers"])
    diag_err = max(abs(v * d.n - 1.0) for v in d.diag_vector)
    checks = [
        ("ks_sqrt_n_S12_vs_normal", d.ks_entry, KS_ENTRY_TOL),
        ("ks_mn_xi_minus_1_vs_chi2", d.ks_chi2, KS_CHI2_TOL),
        ("uptri_max_offdiag_corr", d.max_offdiag_corr, CORR_TOL),
    ]
    print(f"m={d.m} n={d.n} trials={d.trials} q={d.m * (2 * d.m - 1)}", file=out)
    for name, value, tol in checks:
        verdict = "PASS" if value < tol else "FAIL"
        print(f"{name:<28}{value:.6f}  < {tol:g}  {verdict}", file=out)
    print(f"{'ks_sqrt_n_S12_raw':<28}{d.ks_entry_raw:.6f}  (uncorrected, info)", file=out)
    print(f"{'uptri_max_rel_diag_err':<28}{diag_err:.6f}  (vs 1/n, info)", file=out)
    return EXIT_OK


def cmd_cost(p, out):
    m, n = p["m"], p["n"]
    m1 = p["m_onebit"] or m
    n1 = p["n_onebit"] or n
    eight = cost_report(CostScheme.EIGHT_BIT, m, n)
    one = cost_report(CostScheme.ONE_BIT, m1, n1)
    print(f"{'scheme':<8}{'m':>8}{'n':>10}{'flops':>24}{'transistors':>26}", file=out)
    for r in (eight, one):
        print(f"{r.scheme.value:<8}{r.m:>8}{r.n:>10}{r.flops:>24}{r.transistors:>26}", file=out)
    print(f"flop_ratio_1bit_over_8bit={one.flops / eight.flops:.6g}", file=out)
    print(f"transistor_ratio_8bit_over_1bit={eight.transistors / one.transistors:.6g}", file=out)
    return EXIT_OK


COMMANDS = {
    "threshold": cmd_threshold,
    "fig1": cmd_fig1,
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "diagnose": cmd_diagnose,
    "cost": cmd_cost,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    params = resolve(args, parser)
    try:
        return COMMANDS[args.command](params, out)
    except (OSError, ValueError) as exc:
        print(f"onebit-emr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
