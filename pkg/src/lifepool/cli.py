"""Command-line surface for calibration, pricing and pooling analyses.

Every table-producing subcommand emits CSV (default) or JSON with identical
fields; ratio quantities are printed as percentages with two decimals unless
--precision says otherwise.  Exit codes: 0 success, 2 usage error, 3 invalid
input or domain error, 4 I/O error, 5 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .ingest import DatasetConfig, RunConfig, load_mortality_csv, write_report
from .mortality import AgeAnchoredLaw, GompertzLaw, density, from_hg, moments
from .pipeline import GROUP_LAW_CAVEAT, build_report, clam_by_gender, fit_cohorts
from .pooling import ClamLine, Participant, aew_group, aew_homogeneous, delta_vs_g_sweep, subsidy_table
from .pricing import TERM_MODES, annuity_factor_hg, annuity_factor_mb

EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_IO = 4
EXIT_NUMERICAL = 5


class CliUsageError(Exception):
    pass


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.handler(args)
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RuntimeError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lifepool",
        description="Mortality calibration, annuity pricing and the value of "
                    "longevity risk pooling.",
        epilog="exit codes: 0 ok, 2 usage error, 3 invalid input, "
               "4 i/o error, 5 numerical non-convergence",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = _cmd(sub, "price", cmd_price, "annuity factor for (r, h, g) or (r, x, m, b)",
             plot=True)
    p.set_defaults(precision=6)
    p.add_argument("--r", type=float, required=True, help="valuation rate per year")
    p.add_argument("--h", type=float, help="hazard rate at the purchase age")
    p.add_argument("--g", type=float, help="mortality growth rate")
    p.add_argument("--x", type=float, help="purchase age for the (m, b) form")
    p.add_argument("--m", type=float, help="modal age at death")
    p.add_argument("--b", type=float, help="dispersion in years")
    p.add_argument("--h-grid", help="LO:HI:N grid of hazards; emits a (h, factor) series")

    p = _cmd(sub, "covol", cmd_covol,
             "lifetime moments, longevity risk profile or density series", plot=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--x", type=float, default=65.0, help="evaluation age (default 65)")
    p.add_argument("--ages", help="LO:HI[:STEP] age range for a series")
    p.add_argument("--series", choices=("covol", "density"), default="covol")

    p = _cmd(sub, "aew", cmd_aew, "annuity equivalent wealth and value of pooling")
    p.add_argument("--r", type=float, default=0.03)
    p.add_argument("--x", type=float, default=65.0)
    p.add_argument("--gamma", default="3", help="risk aversion, comma separated list")
    p.add_argument("--m", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--g", type=float)
    p.add_argument("--group-m", type=float)
    p.add_argument("--group-b", type=float)
    p.add_argument("--group-h", type=float)
    p.add_argument("--group-g", type=float)

    p = _cmd(sub, "sweep", cmd_sweep, "value-of-pooling sweeps over m or over g",
             plot=True)
    p.add_argument("--mode", choices=("g", "m"), default="g")
    p.add_argument("--r", type=float, default=0.03)
    p.add_argument("--x", type=float, default=65.0)
    p.add_argument("--gamma", default="3", help="risk aversion (list allowed in m mode)")
    p.add_argument("--g-grid", help="LO:HI:N growth-rate grid (g mode)")
    p.add_argument("--h-list", help="comma separated hazards at age x (g mode)")
    p.add_argument("--clam-intercept", type=float,
                   help="intercept of the log-hazard/growth line (g mode)")
    p.add_argument("--clam-lifespan", type=float,
                   help="common plateau age of the line (g mode)")
    p.add_argument("--m-grid", help="LO:HI:N modal-age grid (m mode)")
    p.add_argument("--b", type=float, default=12.0, help="dispersion (m mode)")
    p.add_argument("--group-m", type=float, help="group modal age (m mode)")
    p.add_argument("--group-b", type=float, help="group dispersion (m mode)")

    p = _cmd(sub, "subsidy", cmd_subsidy, "deterministic-horizon transfer table")
    p.add_argument("--participant", action="append", default=[],
                   metavar="LABEL:INCOME:HORIZON[:CONTRIB]",
                   help="repeatable; horizon in years")
    p.add_argument("--r", type=float, default=0.03)
    p.add_argument("--payment-mode", choices=TERM_MODES, default="annual-immediate")

    p = _cmd(sub, "calibrate", cmd_calibrate, "per-cohort hazard/growth fits from a mortality table")
    _add_input_options(p)

    p = _cmd(sub, "clam", cmd_clam, "cross-cohort hazard/growth regression with plateau")
    _add_input_options(p)

    p = _cmd(sub, "report", cmd_report, "full pipeline: dataset to pooling table plus figures")
    p.set_defaults(format=None)  # fall back to the config file's output format
    _add_input_options(p)
    p.add_argument("--config", help="JSON file mirroring the run configuration")
    p.add_argument("--r", type=float)
    p.add_argument("--gamma", help="comma separated risk aversion list")
    p.add_argument("--group-percentile", type=int)
    p.add_argument("--x", type=float, default=65.0)
    p.add_argument("--output-dir", default=".")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True,
                   help="render companion PNG figures (default on)")
    return parser


def _cmd(sub, name, handler, help_text, plot=False):
    p = sub.add_parser(name, help=help_text)
    p.set_defaults(handler=handler, plot=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--precision", type=int, default=2,
                   help="decimals for percentage columns (default 2)")
    if plot:
        p.add_argument("--plot", help="also render the emitted series to this PNG")
    return p


def _add_input_options(p):
    p.add_argument("--input", required=True, help="mortality CSV path")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0,
                   help="known accidental (Makeham) hazard")
    p.add_argument("--rate-scale", choices=("per-unit", "per-1000"),
                   default="per-unit")
    p.add_argument("--fit-window", help="A:B age window for the fits")
    p.add_argument("--gender-column", default="gender")
    p.add_argument("--percentile-column", default="percentile")
    p.add_argument("--age-column", default="age")
    p.add_argument("--q-column", default="q")


# ---------------------------------------------------------------------------
# emission helpers


def _emit(columns, rows, fmt):
    """Render rows (dicts) to CSV or JSON with identical fields."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
        document = buf.getvalue()
    else:
        document = json.dumps([{c: row[c] for c in columns} for row in rows],
                              indent=2) + "\n"
    sys.stdout.write(document)


def _cell(value):
    if isinstance(value, float):
        return f"{value:.10g}"
    return value


def _num(value, digits=6):
    return float(f"{value:.{digits}g}")


def _pct(value, precision):
    return round(100.0 * value, precision)


def _parse_grid(text, what):
    try:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except (ValueError, AttributeError):
        raise CliUsageError(f"{what} must look like LO:HI:N (got {text!r})") from None


def _parse_ages(text):
    parts = text.split(":")
    try:
        if len(parts) == 2:
            lo, hi, step = float(parts[0]), float(parts[1]), 1.0
        elif len(parts) == 3:
            lo, hi, step = (float(v) for v in parts)
        else:
            raise ValueError
    except ValueError:
        raise CliUsageError(f"--ages must look like LO:HI[:STEP] (got {text!r})") from None
    return np.arange(lo, hi + 1e-9, step)


def _parse_floats(text, what):
    try:
        values = tuple(float(v) for v in text.split(","))
    except (ValueError, AttributeError):
        raise CliUsageError(f"{what} must be a comma separated number list") from None
    if not values:
        raise CliUsageError(f"{what} is empty")
    return values


def _parse_window(text):
    if text is None:
        return None
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise CliUsageError(f"--fit-window must look like A:B (got {text!r})") from None
    return (lo, hi)


def _law_from_flags(m, b, h, g, x, prefix=""):
    tag = prefix or "mortality"
    if (m is None) != (b is None) or (h is None) != (g is None):
        raise CliUsageError(f"{tag} flags must come in pairs: m with b, h with g")
    if m is not None and h is not None:
        raise CliUsageError(f"give either {tag} (m, b) or (h, g), not both")
    if m is not None:
        return GompertzLaw(m, b, relax_bounds=True)
    if h is not None:
        return from_hg(AgeAnchoredLaw(x=x, h=h, g=g))
    return None


def _dataset_config(args):
    return DatasetConfig(
        path=args.input,
        rate_scale=args.rate_scale,
        gender_column=args.gender_column,
        percentile_column=args.percentile_column,
        age_column=args.age_column,
        q_column=args.q_column,
        fit_window=_parse_window(args.fit_window),
    )


def _load(args):
    result = load_mortality_csv(_dataset_config(args))
    for message in result.rejected:
        print(f"warning: {message}", file=sys.stderr)
    if not result.cohorts:
        raise ValueError("no usable cohorts in input")
    return result.cohorts


def _maybe_plot(args, series, xlabel, ylabel, title):
    if args.plot:
        from .plots import plot_series

        plot_series(series, xlabel, ylabel, args.plot, title)
        print(f"wrote {args.plot}", file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands


def cmd_price(args):
    if args.h_grid is not None:
        if args.g is None:
            raise CliUsageError("--h-grid needs --g")
        hs = _parse_grid(args.h_grid, "--h-grid")
        rows = [
            {"h": _num(h), "factor": _num(annuity_factor_hg(args.r, h, args.g), 7)}
            for h in hs
        ]
        _emit(["h", "factor"], rows, args.format)
        _maybe_plot(args, [("factor", [r["h"] for r in rows],
                            [r["factor"] for r in rows])],
                    "hazard rate at purchase age", "annuity factor",
                    "annuity factor by hazard")
        return

    have_hg = args.h is not None and args.g is not None
    have_mb = args.m is not None and args.b is not None and args.x is not None
    if have_hg == have_mb:
        raise CliUsageError("give exactly one of (--h, --g) or (--x, --m, --b)")
    if have_hg:
        factor = annuity_factor_hg(args.r, args.h, args.g)
    else:
        factor = annuity_factor_mb(args.r, args.x, args.m, args.b)
    print(f"{factor:.{args.precision}f}")


def cmd_covol(args):
    law = GompertzLaw(args.m, args.b, relax_bounds=True)
    if args.series == "density":
        ages = _parse_ages(args.ages) if args.ages else np.arange(args.x, args.x + 46.0)
        rows = []
        for age in ages:
            if age < args.x:
                raise CliUsageError("density series ages must start at or after --x")
            rows.append({
                "age": _num(float(age)),
                "t": _num(float(age - args.x)),
                "density": _num(density(law, args.x, float(age - args.x)), 7),
            })
        _emit(["age", "t", "density"], rows, args.format)
        _maybe_plot(args, [("density", [r["age"] for r in rows],
                            [r["density"] for r in rows])],
                    "age", "death-time density", "remaining-lifetime density")
        return

    if args.ages:
        ages = _parse_ages(args.ages)
        rows = []
        for age in ages:
            life = moments(law, float(age))
            rows.append({"age": _num(float(age)),
                         "covol_pct": _pct(life.covol, args.precision)})
        _emit(["age", "covol_pct"], rows, args.format)
        _maybe_plot(args, [("covol %", [r["age"] for r in rows],
                            [r["covol_pct"] for r in rows])],
                    "age", "coefficient of variation of longevity (%)",
                    "longevity risk over the lifecycle")
        return

    life = moments(law, args.x)
    rows = [{
        "age": _num(args.x),
        "hazard": _num(law.hazard(args.x)),
        "e_t": _num(life.mean),
        "sd_t": _num(life.sd),
        "covol_pct": _pct(life.covol, args.precision),
    }]
    _emit(["age", "hazard", "e_t", "sd_t", "covol_pct"], rows, args.format)


def cmd_aew(args):
    individual = _law_from_flags(args.m, args.b, args.h, args.g, args.x)
    if individual is None:
        raise CliUsageError("individual law needed: (--m, --b) or (--h, --g)")
    group = _law_from_flags(args.group_m, args.group_b, args.group_h,
                            args.group_g, args.x, prefix="group")
    rows = []
    for gamma in _parse_floats(args.gamma, "--gamma"):
        fair = aew_homogeneous(args.r, individual, args.x, gamma)
        pooled = (aew_group(args.r, individual, group, args.x, gamma)
                  if group is not None else fair)
        rows.append({
            "gamma": _num(gamma),
            "factor_individual": _num(fair.factor_individual),
            "factor_group": _num(pooled.factor_group),
            "delta_individual_pct": _pct(fair.delta, args.precision),
            "delta_group_pct": _pct(pooled.delta, args.precision),
            "wtp_individual_pct": _pct(fair.wtp, args.precision),
            "wtp_group_pct": _pct(pooled.wtp, args.precision),
        })
    _emit(["gamma", "factor_individual", "factor_group", "delta_individual_pct",
           "delta_group_pct", "wtp_individual_pct", "wtp_group_pct"],
          rows, args.format)


def cmd_sweep(args):
    if args.mode == "g":
        if not args.g_grid:
            raise CliUsageError("g mode needs --g-grid LO:HI:N")
        grid = _parse_grid(args.g_grid, "--g-grid")
        gammas = _parse_floats(args.gamma, "--gamma")
        if len(gammas) != 1:
            raise CliUsageError("g mode takes a single --gamma")
        if args.h_list and args.clam_intercept is not None:
            raise CliUsageError("give --h-list or the clam line, not both")
        if args.h_list:
            source = list(_parse_floats(args.h_list, "--h-list"))
        elif args.clam_intercept is not None and args.clam_lifespan is not None:
            source = ClamLine(args.clam_intercept, args.clam_lifespan)
        else:
            raise CliUsageError(
                "g mode needs --h-list or both --clam-intercept and --clam-lifespan"
            )
        points = delta_vs_g_sweep(args.r, gammas[0], args.x, list(grid), source)
        rows = [{
            "series": pt.source,
            "g": _num(pt.g),
            "h": _num(pt.h),
            "delta_pct": _pct(pt.delta, args.precision),
        } for pt in points]
        _emit(["series", "g", "h", "delta_pct"], rows, args.format)
        by_series: dict[str, list] = {}
        for row in rows:
            by_series.setdefault(row["series"], []).append(row)
        _maybe_plot(args, [(name, [r["g"] for r in rs], [r["delta_pct"] for r in rs])
                           for name, rs in sorted(by_series.items())],
                    "mortality growth rate g", "value of pooling (%)",
                    "value of pooling by growth rate")
        return

    if not args.m_grid:
        raise CliUsageError("m mode needs --m-grid LO:HI:N")
    grid = _parse_grid(args.m_grid, "--m-grid")
    group = None
    if args.group_m is not None:
        group = GompertzLaw(args.group_m, args.group_b or args.b, relax_bounds=True)
    rows = []
    for gamma in _parse_floats(args.gamma, "--gamma"):
        for m in grid:
            law = GompertzLaw(float(m), args.b, relax_bounds=True)
            fair = aew_homogeneous(args.r, law, args.x, gamma)
            row = {
                "gamma": _num(gamma),
                "m": _num(float(m)),
                "delta_individual_pct": _pct(fair.delta, args.precision),
            }
            if group is not None:
                row["delta_group_pct"] = _pct(
                    aew_group(args.r, law, group, args.x, gamma).delta, args.precision
                )
            rows.append(row)
    columns = ["gamma", "m", "delta_individual_pct"]
    if group is not None:
        columns.append("delta_group_pct")
    _emit(columns, rows, args.format)
    series = []
    for gamma in sorted({row["gamma"] for row in rows}):
        sub = [row for row in rows if row["gamma"] == gamma]
        series.append((f"gamma={gamma:g}, fair", [r["m"] for r in sub],
                       [r["delta_individual_pct"] for r in sub]))
        if group is not None:
            series.append((f"gamma={gamma:g}, group", [r["m"] for r in sub],
                           [r["delta_group_pct"] for r in sub]))
    _maybe_plot(args, series, "modal age m", "value of pooling (%)",
                "value of pooling by modal age")


def cmd_subsidy(args):
    if len(args.participant) < 2:
        raise CliUsageError("need at least two --participant entries")
    participants = []
    for entry in args.participant:
        parts = entry.split(":")
        if len(parts) not in (3, 4):
            raise CliUsageError(
                f"--participant must look like LABEL:INCOME:HORIZON[:CONTRIB] "
                f"(got {entry!r})"
            )
        try:
            income, horizon = float(parts[1]), float(parts[2])
            contribution = float(parts[3]) if len(parts) == 4 else None
        except ValueError:
            raise CliUsageError(f"bad numbers in --participant {entry!r}") from None
        participants.append(Participant(parts[0], income, horizon, contribution))
    table = subsidy_table(participants, args.r, args.payment_mode)
    rows = [{
        "label": row.label,
        "horizon_years": _num(row.horizon),
        "income": _num(row.income),
        "present_value": _num(row.present_value, 8),
        "contribution": _num(row.contribution, 8),
        "net_transfer": _num(row.net_transfer, 8),
    } for row in table]
    _emit(["label", "horizon_years", "income", "present_value", "contribution",
           "net_transfer"], rows, args.format)


def cmd_calibrate(args):
    fits = fit_cohorts(_load(args), lam=args.lam,
                       fit_window=_parse_window(args.fit_window))
    rows = [{
        "gender": item.cohort.gender,
        "percentile": item.cohort.percentile,
        "n": len(item.cohort.ages),
        "h": _num(item.fit.h),
        "g": _num(item.fit.g),
        "h65": _num(item.fit.h * math.exp(item.fit.g * 65.0)),
        "m": _num(from_hg(AgeAnchoredLaw(x=0.0, h=item.fit.h, g=item.fit.g)).m),
        "b": _num(1.0 / item.fit.g),
        "r_squared_pct": _pct(item.fit.r_squared, args.precision),
    } for item in fits]
    _emit(["gender", "percentile", "n", "h", "g", "h65", "m", "b",
           "r_squared_pct"], rows, args.format)


def cmd_clam(args):
    fits = fit_cohorts(_load(args), lam=args.lam,
                       fit_window=_parse_window(args.fit_window))
    results = clam_by_gender(fits, lam=args.lam)
    if not results:
        raise ValueError("no gender has the three cohorts needed for the regression")
    rows = [{
        "gender": gender,
        "n": fit.n,
        "intercept": _num(fit.L),
        "intercept_se": _num(fit.se_intercept),
        "intercept_t": _num(fit.t_intercept),
        "slope": _num(-fit.x_star),
        "slope_se": _num(fit.se_slope),
        "slope_t": _num(fit.t_slope),
        "r_squared_adj_pct": _pct(fit.r_squared_adj, args.precision),
        "lambda_star": _num(fit.lambda_star),
        "g_min_pct": _pct(fit.g_min, args.precision),
        "g_max_pct": _pct(fit.g_max, args.precision),
        "g_mean_pct": _pct(fit.g_mean, args.precision),
        "log_half_life_gap": _num(fit.log_half_life_gap),
    } for gender, fit in sorted(results.items())]
    _emit(["gender", "n", "intercept", "intercept_se", "intercept_t", "slope",
           "slope_se", "slope_t", "r_squared_adj_pct", "lambda_star",
           "g_min_pct", "g_max_pct", "g_mean_pct", "log_half_life_gap"],
          rows, args.format)


def cmd_report(args):
    config = RunConfig.from_json(args.config) if args.config else RunConfig()
    overrides = {}
    if args.r is not None:
        overrides["r"] = args.r
    if args.gamma is not None:
        overrides["gamma"] = _parse_floats(args.gamma, "--gamma")
    if args.lam:
        overrides["lam"] = args.lam
    if args.group_percentile is not None:
        overrides["group_percentile"] = args.group_percentile
    if args.format:
        overrides["output_format"] = args.format
    if overrides:
        config = RunConfig(
            r=overrides.get("r", config.r),
            gamma=overrides.get("gamma", config.gamma),
            lam=overrides.get("lam", config.lam),
            group_percentile=overrides.get("group_percentile", config.group_percentile),
            output_format=overrides.get("output_format", config.output_format),
        )

    cohorts = _load(args)
    window = _parse_window(args.fit_window)
    if window is not None:
        cohorts = [c.window(*window) for c in cohorts]
    print(f"note: {GROUP_LAW_CAVEAT}", file=sys.stderr)

    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    extension = config.output_format
    written = []
    for gamma in config.gamma:
        rows = build_report(cohorts, config, gamma, age=args.x)
        suffix = f"_gamma{gamma:g}" if len(config.gamma) > 1 else ""
        target = outdir / f"pooling_report{suffix}.{extension}"
        write_report(rows, config.output_format, path=target)
        written.append(target)
        if args.figures:
            from .plots import plot_report_figures

            fits = fit_cohorts(cohorts, lam=config.lam)
            points = {}
            for item in fits:
                points.setdefault(item.cohort.gender, []).append(
                    (item.fit.log_h, item.fit.g)
                )
            written.extend(
                plot_report_figures(rows, points, clam_by_gender(fits, lam=config.lam),
                                    outdir, suffix=suffix)
            )
    for path in written:
        print(path)


if __name__ == "__main__":
    sys.exit(main())
