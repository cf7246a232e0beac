"""``jfts-capacity`` command line: point evaluations, figure sweeps, reports.

Exit codes: 0 success, 2 domain error, 3 numeric or I/O failure, 64 usage
error.  Every flag may also come from a TOML file given by ``--config``
(keys are flag names with dashes or underscores); command-line flags win.
``JFTS_THREADS`` caps the sweep worker count, 0 meaning one per CPU.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import itertools
import math
import os
import sys

from . import __version__
from .baselines import K_FADING_FIG, NAKAGAMI_LOGNORMAL_FIG, baseline_opra
from .capacity import (Scheme, cifr, opra_closed, opra_quadrature, ora_quadrature, ora_series,
                       solve_cutoff, tifr_max)
from .errors import ConfigurationError, DomainError, JftsError, ModelError, NumericError
from .model import JftsParams, amount_of_fading, b_aggregate, log_envelope_moment, omega_a
from .oracle import build_sampler, mc_capacity

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3, 64

FIGURES = ("fig1a", "fig1b", "fig2a", "fig2b", "fig3a", "fig3b")

FIG1A_PRESETS = {
    "high_quality": (20.0, 10.0, 0.1),
    "reference": (5.0, -9.8, 0.1),
    "degraded": (2.0, -6.0, 0.9),
}
FIG1B_JFTS = (5.0, -9.8, 0.1)
K_SWEEP = {"k2dB": (2.0, -2.0, 0.4), "k5dB": (5.0, -2.0, 0.4), "k8dB": (8.0, -2.0, 0.4)}
SH_SWEEP = {"sh-6dB": (5.0, -6.0, 0.9), "sh-2dB": (5.0, -2.0, 0.9), "sh5dB": (5.0, 5.0, 0.9)}

ACCEPTANCE_GRID = list(itertools.product((2.0, 5.0, 8.0), (-9.8, -6.0, -2.0, 5.0), (0.1, 0.4, 0.9)))
REPORT_GAMMA_BAR_DB = (5.0, 10.0, 15.0)
REPORT_SCHEMES = ("opra", "ora", "tifr")
REPORT_MULTS = (1e2, 1e3, 1e4)
AF_SEARCH_P = (0.25, 0.5, 1.0)
AF_TARGET = 3.45


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(value):
    """Float formatting that round-trips (17 significant digits)."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def csv_text(command, header, rows):
    lines = [f"# jfts-capacity v{__version__} {command}", ",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def worker_count(requested=None):
    n = requested if requested is not None else int(os.environ.get("JFTS_THREADS", "1") or 1)
    if n < 0:
        raise DomainError("worker count must be >= 0")
    return n or (os.cpu_count() or 1)


def ordered_map(fn, items, workers):
    """Map preserving input order whatever the completion order."""
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def db_range(start, stop, step):
    if not step > 0:
        raise DomainError("dB step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    if n < 1:
        raise DomainError("empty dB range")
    return [round(start + i * step, 10) for i in range(n)]


def lin(db):
    return 10.0 ** (db / 10.0)


def _params(preset, p1=1.0, p2=1.0, m=20):
    k_db, sh_db, delta = preset
    return JftsParams.from_db(k_db, sh_db, delta, p1=p1, p2=p2, quad_order=m)


def _try(fn, default=math.nan):
    try:
        return fn()
    except JftsError:
        return default


# --- figure sweeps ---------------------------------------------------------

def _fig1a_row(db):
    gb = lin(db)
    return [db] + [_try(lambda p=p: solve_cutoff(_params(p), gb).gamma0) for p in FIG1A_PRESETS.values()]


def _fig1b_row(db):
    gb = lin(db)
    jfts = _params(FIG1B_JFTS)
    row = [db]
    sol = _try(lambda: solve_cutoff(jfts, gb), None)
    if sol is None:
        row += [math.nan, math.nan]
    else:
        row += [opra_closed(jfts, gb, gamma0=sol.gamma0, gamma_max_mults=()).value, sol.gamma0]
    for bp in (NAKAGAMI_LOGNORMAL_FIG, K_FADING_FIG):
        res = _try(lambda bp=bp: baseline_opra(bp, gb), None)
        row += [math.nan, math.nan] if res is None else [res.value, res.diagnostics["gamma0"]]
    return row


def _fig2_row(presets, mult, db):
    gb = lin(db)
    row = [db]
    for preset in presets.values():
        p = _params(preset)
        sol = _try(lambda p=p: solve_cutoff(p, gb), None)
        if sol is None:
            row += [math.nan, math.nan]
        else:
            row.append(opra_closed(p, gb, gamma0=sol.gamma0, gamma_max_mults=()).value)
            row.append(opra_quadrature(p, gb, mult * gb, gamma0=sol.gamma0).value)
        row.append(ora_quadrature(p, gb, mult * gb).value)
    return row


def _fig3_row(presets, db):
    gb = lin(db)
    row = [db]
    for preset in presets.values():
        res = _try(lambda preset=preset: tifr_max(_params(preset), gb), None)
        row += [math.nan, math.nan] if res is None else [res[1].value, res[0].gamma0]
    return row


def figure_table(name, dbs, mult=1e3, workers=1):
    """Header and rows of one figure sweep."""
    if name == "fig1a":
        header = ["gamma_bar_db"] + [f"gamma0_{k}" for k in FIG1A_PRESETS]
        fn = _fig1a_row
    elif name == "fig1b":
        header = ["gamma_bar_db", "opra_jfts_closed", "gamma0_jfts",
                  "opra_nakagami_lognormal", "gamma0_nakagami_lognormal",
                  "opra_k_fading", "gamma0_k_fading"]
        fn = _fig1b_row
    elif name in ("fig2a", "fig2b"):
        presets = K_SWEEP if name == "fig2a" else SH_SWEEP
        header = ["gamma_bar_db"] + [f"{c}_{t}" for t in presets
                                     for c in ("opra_closed", "opra_quad", "ora_quad")]

        def fn(db):
            return _fig2_row(presets, mult, db)
    elif name in ("fig3a", "fig3b"):
        presets = K_SWEEP if name == "fig3a" else SH_SWEEP
        header = ["gamma_bar_db"] + [f"{c}_{t}" for t in presets for c in ("tifr_max", "tifr_gamma0")]

        def fn(db):
            return _fig3_row(presets, db)
    else:
        raise DomainError(f"unknown figure {name!r}")
    return header, ordered_map(fn, dbs, workers)


# --- discrepancy report ----------------------------------------------------

REPORT_HEADER = [
    "k_db", "sh_db", "delta", "gamma_bar_db", "scheme", "b_aggregate", "envelope_normalization",
    "gamma0_analytic", "closed_value", "closed_status",
    "quad_mult_1e2", "quad_mult_1e3", "quad_mult_1e4",
    "mc_mean", "mc_half_width_95", "mc_status", "gamma0_empirical", "cutoff_gap",
]


def _report_rows(point, mc_n, seed):
    (k_db, sh_db, delta) = point
    p = JftsParams.from_db(k_db, sh_db, delta)
    b = b_aggregate(p)
    norm = math.exp(min(log_envelope_moment(p, 0), 709.0))
    sampler, sampler_status = None, "skipped"
    if mc_n:
        try:
            sampler = build_sampler(p)
            sampler_status = "ok"
        except ModelError as exc:
            sampler_status = "sampler_refused"
            norm = exc.diagnostics.get("normalization", norm)
    rows = []
    for db in REPORT_GAMMA_BAR_DB:
        gb = lin(db)
        sol = _try(lambda: solve_cutoff(p, gb), None)
        for scheme in REPORT_SCHEMES:
            g0, closed, status = math.nan, math.nan, "ok"
            quads = [math.nan] * 3
            if scheme == "opra":
                if sol is None:
                    status = "no_cutoff_root"
                else:
                    g0 = sol.gamma0
                    closed = opra_closed(p, gb, gamma0=g0, gamma_max_mults=()).value
                    status = "negative" if closed < 0 else "ok"
                    quads = [opra_quadrature(p, gb, m * gb, gamma0=g0).value for m in REPORT_MULTS]
            elif scheme == "ora":
                series = ora_series(p, gb, n_terms=1, gamma_max_mult=1e3)
                status = f"divergent_pole_n{series.diagnostics['pole_index']}"
                quads = [ora_quadrature(p, gb, m * gb).value for m in REPORT_MULTS]
            else:
                res = _try(lambda: tifr_max(p, gb), None)
                if res is None:
                    status = "no_valid_cutoff"
                else:
                    g0, closed = res[0].gamma0, res[1].value
                    if res[1].diagnostics["outage_outside_unit_interval"]:
                        status = "outage_outside_unit_interval"
            mc_mean = mc_hw = g0_emp = gap = math.nan
            mc_status = sampler_status
            if sampler is not None:
                est = mc_capacity(sampler, gb, scheme, mc_n, seed)
                mc_mean, mc_hw = est.mean, est.half_width_95
                g0_emp = est.diagnostics.get("gamma0", math.nan)
                gap = g0 - g0_emp
            rows.append([k_db, sh_db, delta, db, scheme, b, norm, g0, closed, status,
                         *quads, mc_mean, mc_hw, mc_status, g0_emp, gap])
    return rows


def report_rows(mc_n=100_000, seed=2014, workers=1, grid=None):
    grid = ACCEPTANCE_GRID if grid is None else grid
    chunks = ordered_map(lambda pt: _report_rows(pt, mc_n, seed), grid, workers)
    return [row for chunk in chunks for row in chunk]


AF_HEADER = ["p1", "p2", "amount_of_fading", "envelope_normalization", "omega_a", "b_aggregate",
             "within_5pct_of_3.45"]


def af_search_rows(preset=FIG1B_JFTS, values=AF_SEARCH_P, workers=1):
    def row(pp):
        p1, p2 = pp
        p = _params(preset, p1=p1, p2=p2)
        af = _try(lambda: amount_of_fading(p))
        return [p1, p2, af, math.exp(min(log_envelope_moment(p, 0), 709.0)), omega_a(p),
                b_aggregate(p), bool(abs(af - AF_TARGET) <= 0.05 * AF_TARGET)]
    return ordered_map(row, list(itertools.product(values, values)), workers)


def report_summary(rows, af_rows):
    def count(pred):
        return sum(1 for r in rows if pred(r))

    idx = {name: i for i, name in enumerate(REPORT_HEADER)}
    lines = [
        f"jfts-capacity v{__version__} discrepancy report",
        f"rows: {len(rows)} ({len(ACCEPTANCE_GRID)} parameter sets x "
        f"{len(REPORT_GAMMA_BAR_DB)} mean CSNR points x {len(REPORT_SCHEMES)} schemes)",
        "OPRA rows without a cutoff root: "
        f"{count(lambda r: r[idx['scheme']] == 'opra' and r[idx['closed_status']] == 'no_cutoff_root')}",
        "OPRA rows with a negative closed form: "
        f"{count(lambda r: r[idx['scheme']] == 'opra' and r[idx['closed_status']] == 'negative')}",
        "ORA rows where the printed series diverges: "
        f"{count(lambda r: r[idx['scheme']] == 'ora')}",
        "TIFR rows with outage outside [0, 1] at the maximiser: "
        f"{count(lambda r: r[idx['closed_status']] == 'outage_outside_unit_interval')}",
        "rows with a Monte Carlo estimate: "
        f"{count(lambda r: r[idx['mc_status']] == 'ok')}",
        "rows whose envelope density could not be sampled (normalization outside [0.9, 1.1]): "
        f"{count(lambda r: r[idx['mc_status']] == 'sampler_refused')}",
        "",
        "amount of fading search, K=5 dB, S_h=-9.8 dB, delta=0.1:",
    ]
    for r in af_rows:
        lines.append(f"  p1={r[0]:g} p2={r[1]:g} AF={fmt(r[2])} normalization={fmt(r[3])} "
                     f"within 5% of 3.45: {fmt(r[6])}")
    hit = any(r[6] for r in af_rows)
    lines.append(f"any combination within 5% of AF 3.45: {fmt(hit)}")
    return "\n".join(lines) + "\n"


# --- command handlers ------------------------------------------------------

def cmd_eval(args, out=sys.stdout):
    p = JftsParams.from_db(args.k_db, args.sh_db, args.delta, p1=args.p1, p2=args.p2,
                           quad_order=args.m)
    gb = lin(args.gamma_bar_db)
    scheme, method = Scheme(args.scheme), args.method
    gmax = args.gamma_max_mult * gb
    g0, diagnostics, hw = math.nan, {}, None
    if method == "mc":
        sampler = build_sampler(p)
        est = mc_capacity(sampler, gb, scheme, args.n, args.seed)
        value, hw = est.mean, est.half_width_95
        g0 = est.diagnostics.get("gamma0", math.nan)
        diagnostics = {"n": est.n, "seed": est.seed, "normalization": sampler.normalization}
    elif scheme is Scheme.CIFR:
        res = cifr(p, gb)
        value, diagnostics = res.value, {"inverse_moment_divergent": True}
    elif scheme is Scheme.OPRA:
        sol = solve_cutoff(p, gb, tol=args.tol)
        g0 = sol.gamma0
        res = (opra_closed(p, gb, gamma0=g0, gamma_max_mults=()) if method == "closed"
               else opra_quadrature(p, gb, gmax, gamma0=g0))
        value = res.value
        diagnostics = {"residual": sol.residual, "multiple_roots": sol.diagnostics["multiple_roots"]}
        if method == "closed":
            diagnostics["negative"] = value < 0
    elif scheme is Scheme.ORA:
        if method == "closed":
            res = ora_series(p, gb, gamma_max_mult=args.gamma_max_mult)
            value = res.value
            diagnostics = {"divergent": True, "pole_index": res.diagnostics["pole_index"],
                           "quadrature_replacement": res.diagnostics["quadrature_replacement"]}
        else:
            value = ora_quadrature(p, gb, gmax).value
    else:
        if method == "quad":
            raise DomainError("TIFR has no quadrature form; use --method closed or mc")
        sol, res = tifr_max(p, gb)
        g0, value = sol.gamma0, res.value
        diagnostics = {"outage_probability": res.diagnostics["outage_probability"],
                       "outage_outside_unit_interval": res.diagnostics["outage_outside_unit_interval"]}

    print(f"scheme: {scheme.value}", file=out)
    print(f"method: {method}", file=out)
    print(f"gamma_bar_db: {args.gamma_bar_db:g}", file=out)
    print(f"b_aggregate: {fmt(b_aggregate(p))}", file=out)
    print(f"gamma0: {fmt(g0)}", file=out)
    print(f"capacity: {value:.6f}" + (f" +/- {hw:.6f}" if hw is not None else ""), file=out)
    for key in sorted(diagnostics):
        print(f"diagnostic {key}: {fmt(diagnostics[key])}", file=out)
    header = ["scheme", "method", "gamma_bar_db", "gamma0", "capacity", "half_width_95"]
    row = [scheme.value, method, float(args.gamma_bar_db), g0, value, hw]
    print(csv_text("eval", header, [row]), end="", file=out)
    return EXIT_OK


def _write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_figure(args, out=sys.stdout):
    dbs = db_range(args.gamma_bar_db_start, args.gamma_bar_db_stop, args.gamma_bar_db_step)
    if args.gamma_max_mult < 10:
        raise DomainError("gamma-max-mult must be >= 10")
    header, rows = figure_table(args.name, dbs, args.gamma_max_mult, worker_count(args.threads))
    _write(args.out, csv_text(f"figure {args.name}", header, rows))
    print(f"wrote {args.out} ({len(rows)} rows)", file=out)
    return EXIT_OK


def cmd_report(args, out=sys.stdout):
    workers = worker_count(args.threads)
    mc_n = 0 if args.no_mc else args.n
    rows = report_rows(mc_n=mc_n, seed=args.seed, workers=workers)
    af_rows = af_search_rows(workers=workers)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "report.csv"), csv_text("report", REPORT_HEADER, rows))
    _write(os.path.join(args.out, "af_search.csv"), csv_text("report af_search", AF_HEADER, af_rows))
    summary = report_summary(rows, af_rows)
    _write(os.path.join(args.out, "summary.txt"), summary)
    print(summary, end="", file=out)
    return EXIT_OK


# --- argument parsing ------------------------------------------------------

def build_parser():
    parser = _Parser(prog="jfts-capacity", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="TOML file with default flag values")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    ev = sub.add_parser("eval", help="evaluate one scheme at one operating point")
    ev.add_argument("--k-db", type=float, default=None)
    ev.add_argument("--sh-db", type=float, default=None)
    ev.add_argument("--delta", type=float, default=None)
    ev.add_argument("--p1", type=float, default=None)
    ev.add_argument("--p2", type=float, default=None)
    ev.add_argument("--m", type=int, default=None, help="Gauss-Hermite order")
    ev.add_argument("--gamma-bar-db", type=float, default=None)
    ev.add_argument("--scheme", choices=[s.value for s in Scheme], default=None)
    ev.add_argument("--method", choices=("closed", "quad", "mc"), default=None)
    ev.add_argument("--gamma-max-mult", type=float, default=None)
    ev.add_argument("--n", type=int, default=None, help="Monte Carlo sample count")
    ev.add_argument("--seed", type=int, default=None)
    ev.add_argument("--tol", type=float, default=None)
    ev.set_defaults(handler=cmd_eval)

    fig = sub.add_parser("figure", help="write the CSV data behind one figure")
    fig.add_argument("name", choices=FIGURES)
    fig.add_argument("--out", required=True)
    fig.add_argument("--gamma-bar-db-start", type=float, default=None)
    fig.add_argument("--gamma-bar-db-stop", type=float, default=None)
    fig.add_argument("--gamma-bar-db-step", type=float, default=None)
    fig.add_argument("--gamma-max-mult", type=float, default=None)
    fig.add_argument("--threads", type=int, default=None)
    fig.set_defaults(handler=cmd_figure)

    rep = sub.add_parser("report", help="closed form vs quadrature vs Monte Carlo report")
    rep.add_argument("--out", required=True, help="output directory")
    rep.add_argument("--n", type=int, default=None, help="Monte Carlo samples per point")
    rep.add_argument("--seed", type=int, default=None)
    rep.add_argument("--no-mc", action="store_true", default=None)
    rep.add_argument("--threads", type=int, default=None)
    rep.set_defaults(handler=cmd_report)
    return parser


DEFAULTS = {
    "k_db": 5.0, "sh_db": -9.8, "delta": 0.1, "p1": 1.0, "p2": 1.0, "m": 20,
    "gamma_bar_db": 10.0, "scheme": "opra", "method": "closed", "gamma_max_mult": 1e3,
    "n": 100_000, "seed": 2014, "tol": 1e-12,
    "gamma_bar_db_start": 0.0, "gamma_bar_db_stop": 20.0, "gamma_bar_db_step": 1.0,
    "threads": None, "no_mc": False,
}


def _apply_config(args):
    """Fill unset flags from --config, then from DEFAULTS."""
    config = {}
    if args.config:
        with open(args.config, "rb") as fh:
            raw = tomllib.load(fh)
        section = raw.get(args.command, {}) if isinstance(raw.get(args.command), dict) else {}
        merged = {k: v for k, v in raw.items() if not isinstance(v, dict)}
        merged.update(section)
        config = {k.replace("-", "_"): v for k, v in merged.items()}
    for key, default in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, config.get(key, default))
    return args


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: eval, figure or report")
        args = _apply_config(args)
        return args.handler(args, out=out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (DomainError, ConfigurationError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        for key, value in sorted(exc.diagnostics.items()):
            print(f"  {key}: {value}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
