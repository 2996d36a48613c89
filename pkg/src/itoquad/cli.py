"""Command line interface: ``itoquad study | reproduce | regularity``.

Exit codes: 0 success, 1 runtime failure, 2 invalid arguments, 3 a
divergent norm under ``regularity --require-finite``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .experiment import (
    ExperimentConfig,
    format_table,
    rows_to_csv,
    run_convergence_study,
)
from .integrands import parse_integrand
from .sobolev import check_regularity

SEED_ENV = "ITOQUAD_SEED"

# name -> (integrand, rules, T, reference, desk steps, full steps, order lines)
PRESETS = {
    "fig1-g1": ("sine:lambda=42", ("srm", "trap"), 1.0, "exact", (3, 10), (3, 12), (1.0, 2.0)),
    "fig1-g2": ("jump:c=0.5", ("srm", "trap"), 1.0, "exact", (3, 10), (3, 12), (0.5,)),
    "fig1-g3-pos": ("power:gamma=0.5", ("srm", "trap"), 1.0, "exact", (3, 10), (3, 12), (1.0,)),
    "fig1-g3-neg": ("power:gamma=-0.3", ("srm", "trap"), 1.0, "exact", (3, 10), (3, 12), (0.2,)),
    "table1": ("power:gamma=-0.3", ("srm", "trap"), 1.0, "exact", (3, 12), (3, 12), (0.2,)),
    # the reference table values match the jump integrand (srm error sqrt(h/2))
    "table1-g2": ("jump:c=0.5", ("srm", "trap"), 1.0, "exact", (3, 12), (3, 12), (0.5,)),
    "fig2-table2": ("poisson:a=0.75", ("srm",), 10.0, "fine:16", (3, 11), (3, 11), (0.5,)),
}


class UsageError(Exception):
    pass


def parse_step_range(text):
    """``"3..10"`` or ``"3,5,7"`` -> list of exponents."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid step range {text!r}; use i..j or i,j,k") from None


def _default_seed():
    value = os.environ.get(SEED_ENV)
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {value!r}") from None


def _config(integrand, rule, theta, p, T, exponents, samples, seed, reference, confidence=0.95, fit_rows=6):
    try:
        return ExperimentConfig(
            integrand=integrand,
            rule=rule,
            theta=theta,
            p=p,
            T=T,
            steps=tuple(T * 2.0**-i for i in exponents),
            samples=samples,
            seed=seed,
            reference=reference,
            confidence=confidence,
            fit_rows=fit_rows,
        )
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _manifest(command, configs, results, outputs, threads, extra=None):
    data = {
        "tool": "itoquad",
        "version": __version__,
        "command": command,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "threads": threads,
        "ci_method": "CLT interval for mean |e|^p, endpoints mapped through the p-th root",
        "runs": [
            {
                "config": cfg.to_dict(),
                "seed": cfg.seed,
                "fitted_slope": res.slope,
                "intercept": res.intercept,
                "mean_eoc": res.mean_eoc(),
                "wall_time": res.wall_time,
            }
            for cfg, res in zip(configs, results)
        ],
        "outputs": outputs,
    }
    if extra:
        data.update(extra)
    return data


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def cmd_study(args):
    if args.manifest:
        data = json.loads(Path(args.manifest).read_text())
        config = ExperimentConfig.from_dict(data["runs"][0]["config"])
    else:
        if not args.integrand:
            raise UsageError("--integrand is required (or pass --manifest)")
        seed = _default_seed() if args.seed is None else args.seed
        config = _config(
            args.integrand,
            args.rule,
            args.theta,
            args.p,
            args.T,
            args.steps,
            args.samples,
            seed,
            args.ref,
            args.confidence,
            args.fit_rows,
        )
    result = run_convergence_study(config, n_jobs=args.threads)
    csv_path = Path(f"{args.out}.csv")
    json_path = Path(f"{args.out}.json")
    _write(csv_path, rows_to_csv(result.rows))
    manifest = _manifest("study", [config], [result], {"csv": str(csv_path), "manifest": str(json_path)}, args.threads)
    _write(json_path, json.dumps(manifest, indent=2) + "\n")
    title = f"{config.integrand}, rule {config.rule}, reference {config.reference}, {config.samples} samples"
    print(format_table(result.rows, title, config.confidence))
    if result.slope is not None:
        n_fit = min(config.fit_rows, len(result.rows))
        print(f"fitted order (finest {n_fit} rows): {result.slope:.3f}")
    return 0


def _plot_data(rows, slopes):
    finest = rows[-1]
    lines = ["# h error ci_low ci_high " + " ".join(f"order_{s:g}" for s in slopes)]
    for r in rows:
        refs = [finest.error * (r.h / finest.h) ** s for s in slopes]
        lines.append(" ".join(f"{v:.10g}" for v in (r.h, r.error, r.ci_low, r.ci_high, *refs)))
    return "\n".join(lines) + "\n"


def _gnuplot_script(name, dat_files, slopes):
    plots = []
    for rule, dat in dat_files:
        plots.append(f"'{dat}' using 1:2 with linespoints title '{rule}'")
    for i, s in enumerate(slopes):
        # with one line per rule, anchor each line at its own series
        dat = dat_files[min(i, len(dat_files) - 1)][1]
        plots.append(f"'{dat}' using 1:{5 + i} with lines dashtype 2 title 'slope {s:g}'")
    return (
        f"set terminal pngcairo size 800,600\nset output '{name}.png'\n"
        "set logscale xy\nset xlabel 'h'\nset ylabel 'L^2 error'\nset key left top\n"
        "plot " + ", \\\n     ".join(plots) + "\n"
    )


def cmd_reproduce(args):
    if args.preset not in PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}; choose from {', '.join(PRESETS)}")
    integrand, rules, T, reference, desk, full, slopes = PRESETS[args.preset]
    first, last = full if args.paper_scale else desk
    seed = _default_seed() if args.seed is None else args.seed
    out = Path(args.out)
    configs, results, outputs, dat_files = [], [], {}, []
    for rule in rules:
        config = _config(integrand, rule, 0.0, 2.0, T, range(first, last + 1), args.samples, seed, reference)
        result = run_convergence_study(config, n_jobs=args.threads)
        stem = f"{args.preset}-{rule}"
        _write(out / f"{stem}.csv", rows_to_csv(result.rows))
        _write(out / f"{stem}.dat", _plot_data(result.rows, slopes))
        outputs[rule] = {"csv": str(out / f"{stem}.csv"), "plot_data": str(out / f"{stem}.dat")}
        dat_files.append((rule, f"{stem}.dat"))
        configs.append(config)
        results.append(result)
        print(format_table(result.rows, f"{args.preset}: {integrand}, rule {rule}"))
        if result.slope is not None:
            print(f"fitted order: {result.slope:.3f}\n")
    _write(out / f"{args.preset}.gp", _gnuplot_script(args.preset, dat_files, slopes))
    outputs["gnuplot"] = str(out / f"{args.preset}.gp")
    manifest = _manifest("reproduce", configs, results, outputs, args.threads, {"preset": args.preset})
    _write(out / f"{args.preset}.json", json.dumps(manifest, indent=2) + "\n")
    return 0


def cmd_regularity(args):
    try:
        G = parse_integrand(args.integrand)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        report = check_regularity(G, args.sigma, args.p, args.M, args.T, args.n_paths, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = json.dumps(report.to_dict(), indent=2)
    if args.out:
        _write(args.out, text + "\n")
    print(text)
    if report.diverged and args.require_finite:
        return 3
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="itoquad", description="Quadrature of Ito integrals: convergence studies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    st = sub.add_parser("study", help="run one convergence study")
    st.add_argument("--integrand", help="e.g. sine:lambda=42, jump:c=0.5, power:gamma=-0.3, poisson:a=0.75")
    st.add_argument("--rule", choices=("srm", "trap"), default="srm")
    st.add_argument("--theta", type=float, default=0.0, help="trapezoidal rule parameter in [0, 1]")
    st.add_argument("--p", type=float, default=2.0, help="error exponent")
    st.add_argument("--T", type=float, default=1.0, help="final time")
    st.add_argument("--steps", type=parse_step_range, default=list(range(3, 11)), help="exponents i of h = T 2^-i")
    st.add_argument("--samples", type=int, default=2000)
    st.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or 0")
    st.add_argument("--ref", default="exact", help="exact | fine:FACTOR")
    st.add_argument("--confidence", type=float, default=0.95)
    st.add_argument("--fit-rows", type=int, default=6, help="finest rows used for the order fit")
    st.add_argument("--threads", type=int, default=1)
    st.add_argument("--out", default="study", help="output prefix for .csv and .json")
    st.add_argument("--manifest", help="rerun the configuration stored in a manifest")
    st.set_defaults(func=cmd_study)

    rp = sub.add_parser("reproduce", help="rerun a figure or table configuration")
    rp.add_argument("preset", help=", ".join(PRESETS))
    rp.add_argument("--paper-scale", action="store_true", help="use the full step range")
    rp.add_argument("--samples", type=int, default=2000)
    rp.add_argument("--seed", type=int, default=None)
    rp.add_argument("--threads", type=int, default=1)
    rp.add_argument("--out", default="results")
    rp.set_defaults(func=cmd_reproduce)

    rg = sub.add_parser("regularity", help="Sobolev-Slobodeckij regularity report as JSON")
    rg.add_argument("--integrand", required=True)
    rg.add_argument("--sigma", type=float, required=True)
    rg.add_argument("--p", type=float, default=2.0)
    rg.add_argument("--M", type=int, default=2048)
    rg.add_argument("--T", type=float, default=1.0)
    rg.add_argument("--n-paths", type=int, default=100)
    rg.add_argument("--seed", type=int, default=0)
    rg.add_argument("--require-finite", action="store_true")
    rg.add_argument("--out")
    rg.set_defaults(func=cmd_regularity)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"itoquad: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"itoquad: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
