"""Command-line front end.

Subcommands:

* ``test``      LMC/MMC linearity tests on a series file
* ``chp``       benchmark information-matrix tests on a series file
* ``study``     the size/power simulation grid
* ``fit-table`` regenerate the logistic coefficient table
* ``simulate``  emit a switching-autoregression path

Every run prints a config echo (key=value lines) that, together with the
seed, fully determines its outputs.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from ._seeding import substream
from .chp import chp_bootstrap_test
from .harness import (
    PROFILES,
    STUDY_METHODS,
    config_digest,
    default_study_grid,
    ingest_series,
    regenerate_coeff_table,
    run_empirical,
    run_size_power_study,
    write_empirical_csv,
    write_study_csv,
)
from .msar import MSARSpec, RegimeParams, TransitionMatrix, simulate_msar


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regimetest",
        description="Monte Carlo linearity tests against Markov-switching means and variances",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    test = sub.add_parser("test", help="LMC/MMC linearity tests on a series")
    _series_args(test)
    test.add_argument("--lags", type=int, default=4, metavar="R", help="AR lag order")
    test.add_argument("--mc", type=int, default=100, metavar="N", help="MC replicate count")
    test.add_argument("--methods", default="LMC_min,LMC_prod,MMC_min,MMC_prod",
                      help="comma-separated subset of LMC_min,LMC_prod,MMC_min,MMC_prod")
    test.add_argument("--grid-points", type=int, default=None, metavar="K",
                      help="grid points per dimension for MMC (odd; default 41 for one lag, 9 otherwise)")
    test.add_argument("--seed", type=int, default=0)
    test.add_argument("--out", default=None, metavar="PATH")

    chp = sub.add_parser("chp", help="benchmark bootstrap tests on a series")
    _series_args(chp)
    chp.add_argument("--reps", type=int, default=200, metavar="B", help="bootstrap replications")
    chp.add_argument("--draws", type=int, default=200, help="nuisance draws")
    chp.add_argument("--seed", type=int, default=0)
    chp.add_argument("--out", default=None, metavar="PATH")

    study = sub.add_parser("study", help="size/power simulation grid")
    study.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    study.add_argument("--reps", type=int, default=None, metavar="N",
                       help="override the profile's replication count")
    study.add_argument("--mc", type=int, default=None, metavar="N",
                       help="override the profile's MC replicate count")
    study.add_argument("--alpha", type=float, default=0.05, metavar="A")
    study.add_argument("--methods", default=",".join(STUDY_METHODS))
    study.add_argument("--seed", type=int, default=0)
    study.add_argument("--workers", type=int, default=1, metavar="W")
    study.add_argument("--out", default="study_results.csv", metavar="PATH")

    fit = sub.add_parser("fit-table", help="regenerate the logistic coefficient table")
    fit.add_argument("--sizes", default="50,100,150,200,250",
                     help="comma-separated sample sizes")
    fit.add_argument("--draws", type=int, default=1_000_000)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", default="logistic_coeffs.csv", metavar="PATH")

    sim = sub.add_parser("simulate", help="emit a switching-autoregression path")
    sim.add_argument("--T", type=int, default=200)
    sim.add_argument("--mu", default="0,0", help="mu1,mu2")
    sim.add_argument("--sigma", default="1,1", help="sigma1,sigma2")
    sim.add_argument("--p", default="0.9,0.9", help="p11,p22")
    sim.add_argument("--phi", default="", help="comma-separated AR coefficients")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default=None, metavar="PATH")
    return parser


def _series_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--series", required=True, metavar="PATH", help="CSV series file")
    p.add_argument("--transform", choices=("none", "logdiff100"), default="none")


def _echo(args: dict) -> str:
    digest = config_digest(args.items())
    for key in sorted(args):
        print(f"# {key}={args[key]}")
    print(f"# config_sha={digest}")
    return digest


def _meta(digest: str, seed: int) -> str:
    return f"regimetest={__version__} seed={seed} config_sha={digest}"


def _cmd_test(args: argparse.Namespace) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    digest = _echo(
        {"command": "test", "series": args.series, "transform": args.transform,
         "lags": args.lags, "mc": args.mc, "methods": ",".join(methods),
         "grid_points": args.grid_points, "seed": args.seed}
    )
    dataset = ingest_series(args.series, args.transform)
    rows = run_empirical(
        dataset, r=args.lags, N=args.mc, methods=methods,
        master_seed=args.seed, grid_points=args.grid_points,
    )
    r = args.lags
    header = f"{'method':<10} {'p-value':>8} " + " ".join(f"{f'phi_{k+1}':>7}" for k in range(r)) + "    |z|"
    print(header)
    for row in rows:
        phis = " ".join(f"{p:7.2f}" for p in row.phi)
        print(f"{row.method:<10} {row.p_value:8.2f} {phis} {row.min_root_modulus:6.2f}")
    if args.out:
        write_empirical_csv(rows, args.out, header_meta=_meta(digest, args.seed))
        print(f"# wrote {args.out}")
    return 0


def _cmd_chp(args: argparse.Namespace) -> int:
    digest = _echo(
        {"command": "chp", "series": args.series, "transform": args.transform,
         "reps": args.reps, "draws": args.draws, "seed": args.seed}
    )
    dataset = ingest_series(args.series, args.transform)
    report = chp_bootstrap_test(dataset.values, B=args.reps, draws=args.draws,
                                master_seed=args.seed)
    print(f"{'method':<8} {'statistic':>12} {'p-value':>8}")
    print(f"{'supTS':<8} {report.supTS:12.5f} {report.bootstrap_p_sup:8.3f}")
    print(f"{'expTS':<8} {report.expTS:12.5f} {report.bootstrap_p_exp:8.3f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(f"# {_meta(digest, args.seed)}\n")
            fh.write("method,statistic,p_value,B,draws,seed\n")
            fh.write(f"supTS,{report.supTS!r},{report.bootstrap_p_sup!r},"
                     f"{report.B},{report.draws},{report.seed}\n")
            fh.write(f"expTS,{report.expTS!r},{report.bootstrap_p_exp!r},"
                     f"{report.B},{report.draws},{report.seed}\n")
        print(f"# wrote {args.out}")
    return 0


def _cmd_study(args: argparse.Namespace) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    digest = _echo(
        {"command": "study", "profile": args.profile, "reps": args.reps,
         "mc": args.mc, "alpha": args.alpha, "methods": ",".join(methods),
         "seed": args.seed, "workers": args.workers}
    )
    configs = default_study_grid(args.profile, master_seed=args.seed, methods=methods)
    if args.reps is not None or args.mc is not None or args.alpha != 0.05:
        from dataclasses import replace
        overrides = {}
        if args.reps is not None:
            overrides["replications"] = args.reps
        if args.mc is not None:
            overrides["N"] = args.mc
        overrides["alpha"] = args.alpha
        configs = [replace(c, **overrides) for c in configs]
    rows = run_size_power_study(configs, workers=args.workers)
    write_study_csv(rows, args.out, header_meta=_meta(digest, args.seed))
    print(f"{'cell':<42} {'method':<9} {'reject%':>8} {'se%':>6}")
    for row in rows:
        status = "FAILED" if row.failed else f"{100 * row.reject_rate:8.1f} {100 * row.mc_se:6.1f}"
        print(f"{row.label:<42} {row.method:<9} {status}")
    print(f"# wrote {args.out}")
    return 0


def _cmd_fit_table(args: argparse.Namespace) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    digest = _echo(
        {"command": "fit-table", "sizes": args.sizes, "draws": args.draws, "seed": args.seed}
    )
    table = regenerate_coeff_table(sizes, draws=args.draws, master_seed=args.seed)
    table.to_csv(args.out)
    print(f"# wrote {args.out}")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    mu1, mu2 = (float(x) for x in args.mu.split(","))
    s1, s2 = (float(x) for x in args.sigma.split(","))
    p11, p22 = (float(x) for x in args.p.split(","))
    phi = tuple(float(x) for x in args.phi.split(",") if x.strip())
    _echo(
        {"command": "simulate", "T": args.T, "mu": args.mu, "sigma": args.sigma,
         "p": args.p, "phi": args.phi, "seed": args.seed}
    )
    spec = MSARSpec(RegimeParams(mu1, mu2, s1, s2), TransitionMatrix(p11, p22), phi)
    y = simulate_msar(spec, args.T, substream(args.seed, 0))
    out = args.out or "-"
    if out == "-":
        for v in y:
            print(repr(float(v)))
    else:
        with open(out, "w") as fh:
            fh.write("value\n")
            for v in y:
                fh.write(f"{float(v)!r}\n")
        print(f"# wrote {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "test": _cmd_test,
        "chp": _cmd_chp,
        "study": _cmd_study,
        "fit-table": _cmd_fit_table,
        "simulate": _cmd_simulate,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
