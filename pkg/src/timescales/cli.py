"""Command-line entry point.

Exit status: 0 success, 1 usage error, 2 bad input data, 3 numerical or
fit failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from datetime import datetime, timezone
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from . import dist, facmom, gaps, hurst
from .errors import DataError, NumericError, ParameterError
from .ingest import ColumnSpec, PriceSeries, ReturnSeries, log_returns, normalize, parse_prices, write_prices, write_returns
from .synth import SyntheticSpec, gen_fbm, gen_iid, gen_vol_cluster, simulate_sde

log = logging.getLogger("timescales")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_SCALES = "1,2,4,6,12,24,48,96,192"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _column(text: str):
    return int(text) if text.lstrip("-").isdigit() else text


def _add_global(p: argparse.ArgumentParser):
    g = p.add_argument_group("input / output")
    g.add_argument("--input", help="price file (timestamp, price)")
    g.add_argument("--outdir", default=".", help="directory for result files")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--delimiter", default=",")
    g.add_argument("--base-interval", type=float, default=None, help="seconds; inferred if omitted")
    g.add_argument("--time-col", type=_column, default="timestamp")
    g.add_argument("--price-col", type=_column, default="price")
    g.add_argument("--symbol", default="")
    s = p.add_argument_group("synthetic input (instead of --input)")
    s.add_argument("--model", choices=["gaussian_iid", "student_t_iid", "fbm", "vol_cluster", "sde"])
    s.add_argument("--n", type=int, default=100_000)
    s.add_argument("--nu", type=float, default=3.0)
    s.add_argument("--H", type=float, default=0.5)
    s.add_argument("--phi", type=float, default=0.98)
    s.add_argument("--sigma-v", type=float, default=0.2)
    s.add_argument("--case", choices=["i", "ii", "iii"], default="iii")
    s.add_argument("--D", type=float, default=1.0)
    s.add_argument("--lam", type=float, default=0.0)
    s.add_argument("--dt", type=float, default=None, help="SDE step")
    s.add_argument("--scale", type=float, default=1e-3, help="log-price units per synthetic return")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="timescales", description="Multi-scale return statistics for price series.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic price series")
    _add_global(p)
    p.add_argument("-o", "--output", default="-", help="file, or - for stdout")

    p = sub.add_parser("returns", help="write log-returns at one scale")
    _add_global(p)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--overlap", action="store_true")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--max-gap", type=float, default=None, help="drop returns spanning a gap > k base intervals")

    def distfit_args(p):
        p.add_argument("--scales", type=_ints, default=_ints(DEFAULT_SCALES))
        p.add_argument("--hill-fraction", type=float, default=0.05)
        p.add_argument("--grid", type=_floats, default=[0.25, 10.0], help="histogram bin width,limit for xy files")

    def facmom_args(p):
        p.add_argument("--window", type=int, default=200)
        p.add_argument("--bins", type=_ints, default=list(facmom.DEFAULT_BINS))
        p.add_argument("--offsets", type=_ints, default=list(facmom.DEFAULT_OFFSETS))
        p.add_argument("--kinds", default="pp,mm,pm")

    def gaps_args(p):
        p.add_argument("--direction", choices=list(gaps.DIRECTIONS), default="negative_gap")
        p.add_argument("--fit-range", type=_ints, default=None, help="g_min,g_max")

    def hurst_args(p):
        p.add_argument("--taus", type=_ints, default=None)
        p.add_argument("--q", type=_floats, default=[2.0])
        p.add_argument("--systematics", choices=["on", "off"], default="on")

    for name, helptext, adder in (
        ("distfit", "t / q-exponential fits across time scales", distfit_args),
        ("facmom", "factorial moments of return signs", facmom_args),
        ("gaps", "gap-length distribution of same-sign runs", gaps_args),
        ("hurst", "structure function and Hurst exponents", hurst_args),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_global(p)
        adder(p)
        if name in ("facmom", "gaps"):
            p.add_argument("--m", type=int, default=1, help="return scale in base intervals")

    p = sub.add_parser("pipeline", help="distfit, facmom, gaps and hurst on one series")
    _add_global(p)
    for adder in (distfit_args, facmom_args, gaps_args, hurst_args):
        adder(p)
    p.add_argument("--m", type=int, default=1, help="return scale for facmom and gaps")
    return parser


# --- helpers ----------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


CONFIG_SKIP = {"outdir", "output", "verbose"}


def config_echo(args) -> Dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in CONFIG_SKIP}


def config_hash(args) -> str:
    blob = json.dumps(_clean(config_echo(args)), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


class Writer:
    """Per-analysis table files under one output directory."""

    def __init__(self, outdir: str, delimiter: str, chash: str):
        self.outdir = outdir
        self.delimiter = delimiter
        self.chash = chash
        self.files: List[str] = []
        os.makedirs(outdir, exist_ok=True)

    def table(self, name: str, header: List[str], rows, module: str, formula: str) -> str:
        path = os.path.join(self.outdir, name)
        d = self.delimiter
        with open(path, "w", newline="") as fh:
            fh.write(f"# module={module} formula={formula} config={self.chash}\n")
            fh.write(d.join(header) + "\n")
            for row in rows:
                fh.write(d.join(_fmt(v) for v in row) + "\n")
        self.files.append(name)
        return path


def _spec_from_args(args) -> SyntheticSpec:
    params = {
        "gaussian_iid": {},
        "student_t_iid": {"nu": args.nu},
        "fbm": {"H": args.H},
        "vol_cluster": {"phi": args.phi, "sigma_v": args.sigma_v},
        "sde": {"case": args.case, "nu": args.nu, "D": args.D, "lam": args.lam},
    }[args.model]
    return SyntheticSpec(args.model, args.n, args.seed, params)


def synthesize_prices(spec: SyntheticSpec, scale: float = 1e-3, base_interval: float = 300.0, dt: Optional[float] = None) -> PriceSeries:
    """Price series for a synthetic spec: return models are cumulated, fbm is used as the log-price."""
    p = spec.params
    if spec.model == "fbm":
        path = gen_fbm(spec)
        return PriceSeries.from_prices(100.0 * np.exp(scale * path), base_interval)
    if spec.model in ("gaussian_iid", "student_t_iid"):
        values = gen_iid(spec).values
    elif spec.model == "vol_cluster":
        values = gen_vol_cluster(spec).values
    else:
        values = simulate_sde(p["case"], p["nu"], p["D"], dt, spec.n, spec.seed, lam=p["lam"])
    return PriceSeries.from_returns(values, scale=scale, base_interval=base_interval)


def load_series(args) -> PriceSeries:
    if bool(args.input) == bool(args.model):
        raise UsageError("give exactly one of --input or --model")
    if args.model:
        spec = _spec_from_args(args)
        return synthesize_prices(spec, args.scale, args.base_interval or 300.0, args.dt)
    schema = ColumnSpec(args.time_col, args.price_col, args.delimiter)
    try:
        with open(args.input, newline="") as fh:
            return parse_prices(fh, schema, args.symbol, args.base_interval)
    except OSError as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from None


# --- analyses ---------------------------------------------------------------

def run_distfit(series: PriceSeries, args, w: Writer) -> Dict:
    fits = dist.multi_scale_fit(series, sorted(args.scales))
    width, limit = (args.grid + [10.0])[:2]
    rows, out = [], []
    for dt_s, fit in fits:
        m = int(round(dt_s / series.base_interval))
        r = normalize(log_returns(series, m))
        try:
            hill = dist.tail_exponent(r, args.hill_fraction)
        except NumericError:
            hill = math.nan
        rows.append([dt_s, m, fit.n, fit.nu, fit.q, fit.nu_stderr, fit.loglik, fit.loglik_gauss, fit.regime, hill])
        out.append({"dt": dt_s, "m": m, "n": fit.n, **fit.as_row(), "hill_nu": hill})
        h = dist.histogram(r, width, limit)
        fitted = dist.t_density_unit(h.centers, fit.nu) if fit.nu > 2 else np.full(h.centers.size, np.nan)
        gauss = dist.t_density(h.centers, math.inf)
        w.table(
            f"distfit_xy_m{m}.csv", ["x", "density", "fitted_t", "gaussian"],
            zip(h.centers, h.density, fitted, gauss),
            "dist", "P(x)~(1+x^2/nu)^(-(nu+1)/2)_unit_variance",
        )
    w.table(
        "distfit.csv",
        ["dt", "m", "n", "nu", "q", "stderr", "loglik_t", "loglik_gauss", "regime", "hill_nu"],
        rows, "dist", "profile_MLE_unit_variance_t",
    )
    return {"scales": out, "crossover_dt": dist.crossover_scale(fits)}


def run_facmom(series: PriceSeries, args, w: Writer) -> Dict:
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for k in kinds:
        if k not in facmom.KINDS:
            raise UsageError(f"unknown kind {k!r}")
    r = log_returns(series, args.m)
    table = facmom.facmom_scan(r, args.window, args.bins, args.offsets, kinds)
    w.table(
        "facmom.csv", ["kind", "q", "n_bins", "value", "stat_err", "sys_err"],
        ([x.kind, x.q, x.n_bins, x.value, x.stat_err, x.sys_err] for x in table.rows),
        "facmom", "F2=<sum_k n_k(n_k-1)/n_bins>/(<n>/n_bins)^2",
    )
    slopes = {}
    for k in kinds:
        rows = table.select(k)
        w.table(
            f"facmom_xy_{k}.csv", ["n_bins", "F2", "err"],
            ([x.n_bins, x.value, x.err] for x in rows), "facmom", f"F2_{k}_vs_n_bins",
        )
        try:
            fit = facmom.intermittency_fit(table, k)
            slopes[k] = {"slope": fit.slope, "stderr": fit.stderr, "t": fit.t}
        except NumericError as exc:
            slopes[k] = {"error": str(exc)}
    return {
        "n_events": table.n_events,
        "rows": [vars(x) for x in table.rows],
        "baseline_iid": {nb: facmom.binomial_baseline(args.window, nb) for nb in args.bins},
        "intermittency": slopes,
    }


def run_gaps(series: PriceSeries, args, w: Writer) -> Dict:
    r = log_returns(series, args.m)
    d = gaps.gap_distribution(r, args.direction)
    g_min, g_max = (args.fit_range + [None, None])[:2] if args.fit_range else (None, None)
    fit = gaps.fit_gap_slope(d, g_min, g_max)
    w.table(
        f"gaps_{args.direction}.csv", ["length", "count", "probability", "fitted"],
        zip(d.lengths, d.counts, d.probability, fit.predict(d.lengths)),
        "gaps", "count(g)~exp(-rho*g)",
    )
    return {"direction": args.direction, "total": d.total, "rho": fit.rho, "stderr": fit.stderr, "fit_range": [fit.g_min, fit.g_max]}


def run_hurst(series: PriceSeries, args, w: Writer) -> Dict:
    path = series.log_path()
    taus = args.taus or hurst.default_taus(path.size)
    out = {"fits": []}
    rows = []
    for q in args.q:
        pts = hurst.structure_function(path, taus, q)
        fit = hurst.fit_hurst(pts, q)
        rows.extend([q, math.log(t), math.log(F)] for t, F in pts)
        entry = {
            "q": q, "H": fit.H, "stderr": fit.stderr, "fit_range": list(fit.fit_range),
            "n_points": fit.n_points, "accepted": fit.accepted, "range_ok": fit.range_ok,
        }
        if args.systematics == "on":
            sysr = hurst.hurst_systematics(path, taus, q)
            entry["total_err"] = sysr.total_err
            entry["variants"] = [{"name": n, "H": h} for n, h in sysr.variants]
        out["fits"].append(entry)
    if len(args.q) > 1:
        out["spread"] = max(f["H"] for f in out["fits"]) - min(f["H"] for f in out["fits"])
    w.table("hurst_xy.csv", ["q", "ln_tau", "ln_F"], rows, "hurst", "F_q(tau)=sqrt(<|dx_tau|^q>)/sqrt(<|dx_1|^q>)")
    return out


ANALYSES = {"distfit": run_distfit, "facmom": run_facmom, "gaps": run_gaps, "hurst": run_hurst}


def run(args) -> Dict:
    """Execute one subcommand; returns the summary document."""
    if args.subcommand == "synth":
        if args.input or not args.model:
            raise UsageError("synth needs --model and no --input")
        spec = _spec_from_args(args)
        series = synthesize_prices(spec, args.scale, args.base_interval or 300.0, args.dt)
        fh = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
        try:
            write_prices(series, fh, args.delimiter, comment=f"synth {spec.describe()} scale={args.scale}")
        finally:
            if fh is not sys.stdout:
                fh.close()
        return {"series": len(series)}

    series = load_series(args)
    chash = config_hash(args)
    w = Writer(args.outdir, args.delimiter, chash)
    doc = {
        "tool": "timescales",
        "version": __version__,
        "config": _clean(config_echo(args)),
        "config_hash": chash,
        "series": {"symbol": series.symbol, "n": len(series), "base_interval": series.base_interval},
        "results": {},
    }
    if args.subcommand == "returns":
        r = log_returns(series, args.m, overlap=args.overlap, max_gap=args.max_gap)
        if args.normalize:
            r = normalize(r)
        path = os.path.join(args.outdir, f"returns_m{args.m}.csv")
        with open(path, "w", newline="") as fh:
            write_returns(r, fh, args.delimiter, comment=f"module=ingest formula=ln(p[i+m]/p[i]) config={chash}")
        w.files.append(os.path.basename(path))
        doc["results"]["returns"] = {"n": len(r), "dt": r.dt, "mean": r.sample_mean, "std": r.sample_std}
    elif args.subcommand == "pipeline":
        for name in ("distfit", "facmom", "gaps", "hurst"):
            doc["results"][name] = ANALYSES[name](series, args, w)
    else:
        doc["results"][args.subcommand] = ANALYSES[args.subcommand](series, args, w)
    doc["files"] = list(w.files)
    doc["created"] = datetime.now(timezone.utc).isoformat()
    text = json.dumps(_clean(doc), indent=2, sort_keys=True)
    with open(os.path.join(args.outdir, f"summary_{args.subcommand}.json"), "w") as fh:
        fh.write(text + "\n")
    return doc


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except UsageError as exc:
        print(f"timescales: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ParameterError) as exc:
        print(f"timescales: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"timescales: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
