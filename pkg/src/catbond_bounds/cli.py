"""Command-line front end.

Subcommands: ``bounds``, ``mc``, ``table``, ``index`` and ``parity-check``.
Exit status is 0 on success, 1 when a parity check fails, 2 for bad
configuration or input data and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import __version__
from .bounds import TABLE_CONVENTION, SuiteConfig, bound_suite, lbt_lg_discrepancy
from .contract import BondTerms, build_index, parity_adjustment_G, read_rates_csv, read_weights_config
from .errors import CatbondError, ConfigError, DataError, NumericalError
from .models import PRESETS, LogGammaModel, MortalityModel, load_model_config, preset_model, preset_terms
from .montecarlo import McConfig, estimate_parity, estimate_price

log = logging.getLogger("catbond_bounds")

EXIT_OK, EXIT_PARITY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_SEED = 20240101


@dataclass(frozen=True)
class TableSpec:
    preset: str
    sweep: str
    values: tuple[float, ...]
    columns: tuple[str, ...]
    iterations: int
    antithetic: bool


_RATES = (0.035, 0.030, 0.025, 0.020, 0.015, 0.010, 0.005, 0.000)

TABLES = {
    "table1": TableSpec("lin2007", "r", _RATES,
                        ("SWLB0", "SWLB1", "SWLBtBS", "MC", "SWUBtBS", "SWUB1"), 5_000_000, True),
    "table2": TableSpec("lin2007", "q0", (0.007, 0.008, 0.008453, 0.009, 0.010, 0.011, 0.012, 0.013, 0.014),
                        ("SWLB0", "SWLB1", "SWLBtBS", "MC", "SWUBtBS", "SWUB1"), 5_000_000, True),
    "table3": TableSpec("tsai-su", "r", _RATES,
                        ("SWLB0", "SWLB1", "SWLBt2", "MC", "SWUB1"), 2_000_000, True),
    "table4": TableSpec("cheng-lg", "r", _RATES,
                        ("SWLB0", "SWLB1", "SWLBtLG", "MC", "SWUB1"), 100_000, False),
    "table5": TableSpec("cheng-lg", "q0",
                        (0.008, 0.0088, 0.009, 0.010, 0.011, 0.012, 0.013, 0.014, 0.015, 0.016, 0.017, 0.018),
                        ("SWLB0", "SWLB1", "SWLBtLG", "MC", "SWUB1"), 100_000, False),
}

BOUNDS_COLUMNS = ("r", "q0", "bound", "call_side", "put_side", "G", "t_star", "root_x", "clamped", "pinned")
MC_COLUMNS = ("r", "q0", "target", "price", "std_error", "iterations", "seed")
PARITY_COLUMNS = ("r", "q0", "G", "P", "P1", "deviation", "std_error", "passed")
DISCREPANCY_COLUMNS = ("sweep", "t", "closed", "quadrature", "literal", "closed_gap", "literal_gap", "literal_agrees")


# -- formatting --------------------------------------------------------------

def fmt(value) -> str:
    """Fixed 12-decimal text for floats, plain text otherwise, empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.12f}"
    return str(value)


def render(columns: Sequence[str], rows: list[dict], kind: str, command: str) -> str:
    if kind == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row.get(c)) for c in columns])
        return buf.getvalue()
    if kind == "json":
        doc = {"command": command, "version": __version__, "columns": list(columns),
               "rows": [{c: row.get(c) for c in columns} for row in rows]}
        return json.dumps(doc, indent=2, allow_nan=True) + "\n"
    raise ConfigError(f"unknown format {kind!r}")


def write_text(text: str, out: str | None) -> None:
    """Write ``text`` to ``out`` atomically, or to stdout when ``out`` is None."""
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    path = Path(out)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise DataError(f"cannot write to {path}: {exc}") from None
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


# -- argument parsing --------------------------------------------------------

def float_list(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("expected at least one number")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse numbers from {text!r}") from None


def _model_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=sorted(PRESETS), help="named parameter set (default lin2007)")
    src.add_argument("--config", help="flat key = value model file")
    p.add_argument("--r", type=float_list, help="interest rate(s), comma separated")
    p.add_argument("--q0", type=float_list, help="index start level(s); the contract base is unchanged")


def _mc_args(p: argparse.ArgumentParser, default_iterations: int | None) -> None:
    p.add_argument("--iterations", type=int, default=default_iterations)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--antithetic", action=argparse.BooleanOptionalAction, default=None,
                   help="pair every draw with its reflection")
    p.add_argument("--batch", type=int, default=McConfig.batch)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--coupling", choices=("independent", "comonotonic"), default="independent",
                   help="dependence across years for marginal models")


def _suite_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t-grid", type=int, default=SuiteConfig.grid_n, help="grid points for the search over t")
    p.add_argument("--nodes", type=int, default=SuiteConfig.nodes, help="quadrature nodes for the conditional upper bound")
    p.add_argument("--convention", choices=("exact", "table"), default=None,
                   help="exact bounds or the convention behind the reference tables")


def _output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catbond", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="price bounds for one model over r and q0 sweeps")
    _model_args(p)
    _suite_args(p)
    _output_args(p)
    p.add_argument("--lg-form", choices=("closed", "quadrature", "literal"), default="closed")
    p.add_argument("--report", help="log-gamma discrepancy report path")
    p.add_argument("--plot", help="save a figure of the bond-side bounds to this path")

    p = sub.add_parser("mc", help="Monte Carlo price estimates")
    _model_args(p)
    _mc_args(p, 100_000)
    _output_args(p)
    p.add_argument("--target", choices=("P", "P1", "both"), default="P")

    p = sub.add_parser("table", help="reproduce one of the reference tables")
    p.add_argument("name", choices=sorted(TABLES))
    _mc_args(p, None)
    _suite_args(p)
    _output_args(p)
    p.add_argument("--no-mc", action="store_true", help="leave the MC column empty")
    p.add_argument("--with-se", action="store_true", help="append the MC standard error column")
    p.add_argument("--report", help="log-gamma discrepancy report path (default next to --out)")
    p.add_argument("--plot", help="save a figure of the table to this path")

    p = sub.add_parser("index", help="composite mortality index from per-cell rates")
    p.add_argument("--rates", required=True, help="CSV with country,age_band,gender,rate")
    p.add_argument("--weights", help="weights file (default: Swiss Re weights)")
    p.add_argument("--scale", type=float, default=1.0, help="unit conversion applied to the rates")

    p = sub.add_parser("parity-check", help="simulated P1 - P against the parity constant G")
    _model_args(p)
    _mc_args(p, 200_000)
    _output_args(p)
    p.add_argument("--g-shift", type=float, default=0.0, help="add this to G before comparing")
    return parser


# -- helpers -----------------------------------------------------------------

def _base(args) -> tuple[MortalityModel, BondTerms]:
    if args.config:
        return load_model_config(args.config)
    name = args.preset or "lin2007"
    return preset_model(name, 0.0), preset_terms(name, 0.0)


def _sweep(args) -> list[tuple[MortalityModel, BondTerms]]:
    """Models over the ``--r`` x ``--q0`` grid, rates varying slowest."""
    model, terms = _base(args)
    rates = args.r if args.r else (terms.rate,)
    starts = args.q0 if args.q0 else (None,)
    out = []
    for r in rates:
        for q in starts:
            m = model.with_rate(r)
            if q is not None:
                m = m.with_start(q)
            out.append((m, replace(terms, rate=r)))
    return out


def _suite_config(args, default: SuiteConfig) -> SuiteConfig:
    base = TABLE_CONVENTION if args.convention == "table" else (
        SuiteConfig() if args.convention == "exact" else default
    )
    return replace(base, grid_n=args.t_grid, nodes=args.nodes)


def _mc_config(args, iterations: int, antithetic: bool) -> McConfig:
    return McConfig(
        iterations=iterations, seed=args.seed, antithetic=antithetic,
        batch=args.batch, workers=args.workers, coupling=args.coupling,
    )


def _discrepancy_rows(label: float, model: LogGammaModel, terms: BondTerms, anchor) -> list[dict]:
    return [
        {"sweep": label, "t": d.t, "closed": d.closed, "quadrature": d.quadrature, "literal": d.literal,
         "closed_gap": d.closed_gap, "literal_gap": d.literal_gap, "literal_agrees": d.literal_agrees}
        for d in lbt_lg_discrepancy(model, terms, anchor)
    ]


def _default_report(out: str | None, report: str | None) -> str | None:
    if report:
        return report
    if out and out != "-":
        path = Path(out)
        return str(path.with_name(path.stem + ".lg-discrepancy.csv"))
    return None


# -- commands ----------------------------------------------------------------

def run_bounds(args) -> int:
    cfg = replace(_suite_config(args, SuiteConfig()), lg_form=args.lg_form)
    rows, report = [], []
    for model, terms in _sweep(args):
        for b in bound_suite(model, terms, cfg):
            rows.append({
                "r": terms.rate, "q0": model.q0, "bound": b.kind.label, "call_side": b.call_side,
                "put_side": b.put_side, "G": b.G, "t_star": b.t_star, "root_x": b.root_x,
                "clamped": b.clamped, "pinned": b.pinned,
            })
            if b.clamped:
                log.warning("%s clamped to zero by the parity transform (r=%g, q0=%g)", b.kind.label, terms.rate, model.q0)
        if isinstance(model, LogGammaModel):
            report += _discrepancy_rows(model.q0, model, terms, cfg.anchor)
    write_text(render(BOUNDS_COLUMNS, rows, args.format, "bounds"), args.out)
    path = _default_report(args.out, args.report)
    if report and path:
        write_text(render(DISCREPANCY_COLUMNS, report, "csv", "lg-discrepancy"), path)
    if args.plot:
        from .report import render_series

        labels = list(dict.fromkeys(r["bound"] for r in rows))
        xs = list(range(len(rows) // len(labels)))
        series = {lab: [r["put_side"] for r in rows if r["bound"] == lab] for lab in labels}
        render_series("sweep point", xs, series, args.plot, reference=labels[0])
    return EXIT_OK


def run_mc(args) -> int:
    rows = []
    for model, terms in _sweep(args):
        antithetic = True if args.antithetic is None else args.antithetic
        cfg = _mc_config(args, args.iterations, antithetic)
        est = estimate_price(model, terms, cfg, args.target)
        pairs = zip(("P", "P1"), est) if args.target == "both" else [(args.target, est)]
        for target, e in pairs:
            log.info("%s at r=%g q0=%g took %.2fs", target, terms.rate, model.q0, e.elapsed)
            rows.append({"r": terms.rate, "q0": model.q0, "target": target, "price": e.price,
                         "std_error": e.std_error, "iterations": e.iterations, "seed": e.seed})
    write_text(render(MC_COLUMNS, rows, args.format, "mc"), args.out)
    return EXIT_OK


def table_rows(name: str, args) -> tuple[list[str], list[dict], list[dict]]:
    spec = TABLES[name]
    cfg = _suite_config(args, TABLE_CONVENTION)
    iterations = args.iterations or spec.iterations
    antithetic = spec.antithetic if args.antithetic is None else args.antithetic
    columns = [spec.sweep, *spec.columns] + (["MC_SE"] if args.with_se else [])
    rows, report = [], []
    for v in spec.values:
        r, q = (v, None) if spec.sweep == "r" else (0.0, v)
        model, terms = preset_model(spec.preset, r, q0=q), preset_terms(spec.preset, r)
        row = {spec.sweep: v}
        for b in bound_suite(model, terms, cfg):
            row[b.kind.label] = b.put_side
        if not args.no_mc:
            est = estimate_price(model, terms, _mc_config(args, iterations, antithetic), "P")
            log.info("%s %s=%g: MC took %.2fs", name, spec.sweep, v, est.elapsed)
            row["MC"], row["MC_SE"] = est.price, est.std_error
        rows.append(row)
        if isinstance(model, LogGammaModel):
            report += _discrepancy_rows(v, model, terms, cfg.anchor)
    return columns, rows, report


def run_table(args) -> int:
    columns, rows, report = table_rows(args.name, args)
    write_text(render(columns, rows, args.format, f"table {args.name}"), args.out)
    if report:
        path = _default_report(args.out, args.report)
        text = render(DISCREPANCY_COLUMNS, report, "csv", "lg-discrepancy")
        if path:
            write_text(text, path)
        else:
            sys.stderr.write(text)
    if args.plot:
        from .report import render_series

        spec = TABLES[args.name]
        xs = [row[spec.sweep] for row in rows]
        series = {c: [row.get(c) for row in rows] for c in spec.columns}
        render_series(spec.sweep, xs, series, args.plot, title=args.name,
                      reference=None if args.no_mc else "MC")
    return EXIT_OK


def run_index(args) -> int:
    rates = read_rates_csv(args.rates)
    if args.weights:
        weights = read_weights_config(args.weights)
    else:
        ref = resources.files("catbond_bounds") / "data" / "swiss_re_weights.cfg"
        with resources.as_file(ref) as path:
            weights = read_weights_config(path)
    print(fmt(build_index(rates, weights, args.scale)))
    return EXIT_OK


def run_parity_check(args) -> int:
    rows, ok = [], True
    for model, terms in _sweep(args):
        antithetic = True if args.antithetic is None else args.antithetic
        cfg = _mc_config(args, args.iterations, antithetic)
        G = parity_adjustment_G(model, terms) + args.g_shift
        chk = estimate_parity(model, terms, cfg, G)
        ok &= chk.passed
        rows.append({"r": terms.rate, "q0": model.q0, "G": chk.G, "P": chk.P.price, "P1": chk.P1.price,
                     "deviation": chk.deviation, "std_error": chk.std_error, "passed": chk.passed})
    write_text(render(PARITY_COLUMNS, rows, args.format, "parity-check"), args.out)
    return EXIT_OK if ok else EXIT_PARITY


COMMANDS = {
    "bounds": run_bounds,
    "mc": run_mc,
    "table": run_table,
    "index": run_index,
    "parity-check": run_parity_check,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CatbondError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
