"""Command-line front end: synth, analyze, batch, correlate, compare."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .baseline import parse_covariates
from .errors import (CutoffOutOfRange, InvalidSpec, IoFailure, MalformedRow, NoOverlap,
                     ResilienceError, StatsError)
from .io import atomic_write, digest, dump_json, read_text
from .pipeline import AnalysisOptions, analyze, baseline_sensitivity, disruptions_table
from .series import MonthStamp, parse_series
from .stats import group_mean_ci, pearson
from .synth import ScenarioSpec, generate, write_scenario

EXIT_OK = 0
EXIT_BATCH_PARTIAL = 9
EXIT_USAGE = 64

EXIT_CODES = """\
exit codes:
  0   success
  1   unexpected library error
  2   a disruption fit failed (report still written with the others)
  3   input series problem (missing/duplicate month, malformed row, bad cutoff)
  4   baseline problem (degenerate or short covariates, no convergence)
  5   index computation problem
  6   statistics problem (no overlap, zero variance, too few points)
  7   invalid synthetic scenario
  8   file read/write failure
  9   batch finished but at least one row failed
  64  bad command-line usage
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return v


def _options(args):
    penalty = None if args.penalty == "auto" else float(args.penalty)
    return AnalysisOptions(
        window=args.window,
        normalize=not args.no_normalize,
        min_duration=args.min_duration,
        min_peak_ratio=args.min_peak_ratio,
        penalty=penalty,
        span=args.span,
        baseline=args.baseline,
        rho_basis=args.rho_basis,
        quadrature=args.quadrature,
        floor_sigmas=args.floor_sigmas,
        edge_slack=args.edge_slack,
    )


def _month(text):
    try:
        return MonthStamp.parse(text)
    except ValueError as exc:
        raise CutoffOutOfRange(f"bad cutoff {text!r}: {exc}") from None


def _load_inputs(observed_path, covariate_path=None, expected_path=None, label=None):
    inputs = {}
    text = read_text(observed_path)
    inputs["observed"] = digest(text)
    observed = parse_series(text, label)
    if not observed.label:
        observed = observed.replace(label=Path(observed_path).stem)
    cov = expected = None
    if covariate_path:
        text = read_text(covariate_path)
        inputs["covariates"] = digest(text)
        cov = parse_covariates(text)
    if expected_path:
        text = read_text(expected_path)
        inputs["expected"] = digest(text)
        expected = parse_series(text, observed.label)
    return observed, cov, expected, inputs


def run_synth(spec_path, out_dir):
    """Generate a scenario from a JSON spec and write its files."""
    try:
        spec = ScenarioSpec.from_dict(json.loads(read_text(spec_path)))
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{spec_path}: {exc}") from exc
    truth = generate(spec)
    write_scenario(truth, out_dir)
    return truth


def run_analyze(observed_path, out_dir, *, covariate_path=None, expected_path=None,
                cutoff=None, options=None, plot=False, label=None):
    """Analyze one series; writes report.json, disruptions.csv and optionally plot.svg."""
    observed, cov, expected, inputs = _load_inputs(observed_path, covariate_path,
                                                   expected_path, label)
    if isinstance(cutoff, str):
        cutoff = _month(cutoff)
    result = analyze(observed, cutoff=cutoff, cov=cov, expected=expected,
                     options=options, inputs=inputs)
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out_dir}: {exc}") from exc
    atomic_write(out_dir / "report.json", dump_json(result.report.to_dict()))
    atomic_write(out_dir / "disruptions.csv", _csv_text(*disruptions_table(result.report)))
    if plot:
        from .plotting import plot_analysis
        atomic_write(out_dir / "plot.svg", plot_analysis(result))
    return result


def _read_manifest(path):
    base = Path(path).parent
    rows = list(csv.DictReader(io.StringIO(read_text(path))))
    if not rows or "label" not in rows[0] or "observed_path" not in rows[0]:
        raise MalformedRow("manifest needs label and observed_path columns", row=1)

    def resolve(p):
        p = (p or "").strip()
        if not p:
            return None
        p = Path(p)
        return str(p if p.is_absolute() else base / p)

    out = []
    for i, r in enumerate(rows, 2):
        out.append({
            "row": i,
            "label": r["label"].strip(),
            "observed_path": resolve(r["observed_path"]),
            "covariate_path": resolve(r.get("covariate_path")),
            "expected_path": resolve(r.get("expected_path")),
            "cutoff": (r.get("cutoff") or "").strip() or None,
            "group": (r.get("group") or "").strip() or "all",
        })
    return out


def _batch_row(row, out_dir, options, default_cutoff, plot):
    try:
        result = run_analyze(row["observed_path"], Path(out_dir) / row["label"],
                             covariate_path=row["covariate_path"],
                             expected_path=row["expected_path"],
                             cutoff=row["cutoff"] or default_cutoff, options=options,
                             plot=plot, label=row["label"])
    except (ResilienceError, ValueError) as exc:
        return {"status": "failed", "error": type(exc).__name__, "message": str(exc)}
    rep = result.report
    idx = rep.indices
    return {
        "status": "partial" if rep.failures else "ok",
        "rho": idx.adaptability,
        "r": idx.resilience,
        "n_disruptions": idx.n_disruptions,
        "high_adaptability": idx.high_adaptability,
        "high_resilience": idx.high_resilience,
        "alphas": [f.params.alpha for f in rep.fitted],
    }


def run_batch(manifest_path, out_dir, *, options=None, cutoff=None, plot=False, jobs=1):
    """Analyze every manifest row, isolating failures, then summarize per group."""
    rows = _read_manifest(manifest_path)
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out_dir}: {exc}") from exc
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_batch_row, r, out_dir, options, cutoff, plot) for r in rows]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_batch_row(r, out_dir, options, cutoff, plot) for r in rows]

    n_alpha = max((len(o.get("alphas", [])) for o in outcomes), default=0)
    header = ["unit", "group", "status", "rho", "r", "n_disruptions", "high_adaptability",
              "high_resilience"] + [f"alpha_{k}" for k in range(1, n_alpha + 1)] + ["error"]
    table = []
    for row, o in zip(rows, outcomes):
        alphas = o.get("alphas", [])
        table.append([row["label"], row["group"], o["status"], o.get("rho"), o.get("r"),
                      o.get("n_disruptions"), o.get("high_adaptability"),
                      o.get("high_resilience")]
                     + alphas + [None] * (n_alpha - len(alphas))
                     + [o.get("message") and f"{o['error']}: {o['message']}"])
    atomic_write(out_dir / "indices.csv", _csv_text(header, table))

    groups = {}
    for row, o in zip(rows, outcomes):
        if o["status"] != "failed":
            groups.setdefault(row["group"], []).append(o)
    summary = {"groups": [], "rows": len(rows),
               "failed": [{"label": r["label"], "row": r["row"], "error": o["error"],
                           "message": o["message"]}
                          for r, o in zip(rows, outcomes) if o["status"] == "failed"]}
    for name in sorted(groups):
        members = groups[name]
        entry = {"group": name, "r": group_mean_ci([m["r"] for m in members], name).to_dict()}
        rhos = [m["rho"] for m in members if not math.isnan(m["rho"])]
        entry["rho"] = group_mean_ci(rhos, name).to_dict() if rhos else None
        summary["groups"].append(entry)
    atomic_write(out_dir / "groups.json", dump_json(summary))

    if plot:
        from .plotting import plot_rankings
        ranked = [{"label": r["label"], "r": o["r"],
                   "rho": None if math.isnan(o["rho"]) else o["rho"]}
                  for r, o in zip(rows, outcomes) if o["status"] != "failed"]
        if ranked:
            atomic_write(out_dir / "rankings.svg", plot_rankings(ranked))
    return rows, outcomes, summary


def _numeric_table(text, name):
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or "unit" not in rows[0]:
        raise MalformedRow(f"{name}: needs a 'unit' column", row=1)
    table = {}
    for i, r in enumerate(rows, 2):
        unit = r["unit"].strip()
        if unit in table:
            raise MalformedRow(f"{name}: duplicate unit {unit!r}", row=i)
        vals = {}
        for k, v in r.items():
            if k == "unit" or k is None:
                continue
            try:
                x = float(v)
            except (TypeError, ValueError):
                continue
            if math.isfinite(x):
                vals[k] = x
        table[unit] = vals
    return table


def _correlate_tables(left, right):
    units = sorted(set(left) & set(right))
    if not units:
        raise NoOverlap("no unit appears in both inputs")
    lcols = sorted({k for u in units for k in left[u]})
    rcols = sorted({k for u in units for k in right[u]})
    cells = {}
    for a in lcols:
        cells[a] = {}
        for b in rcols:
            pairs = [(left[u][a], right[u][b]) for u in units if a in left[u] and b in right[u]]
            try:
                res = pearson([p[0] for p in pairs], [p[1] for p in pairs])
                cells[a][b] = res.to_dict()
            except StatsError as exc:
                cells[a][b] = {"coefficient": None, "p": None, "n": len(pairs),
                               "error": type(exc).__name__}
    return {
        "table": cells,
        "joined_units": len(units),
        "dropped": {"left_only": len(set(left) - set(right)),
                    "right_only": len(set(right) - set(left))},
    }


def run_correlate(indices_path, covariates_path=None):
    """Pearson table between index columns and covariate columns joined on ``unit``.

    With a single file, it must hold ``unit,index_value,covariate_value``.
    """
    if covariates_path is None:
        rows = list(csv.DictReader(io.StringIO(read_text(indices_path))))
        need = {"unit", "index_value", "covariate_value"}
        if not rows or not need <= set(rows[0]):
            raise MalformedRow("expected columns unit,index_value,covariate_value", row=1)
        left = {}
        right = {}
        for r in rows:
            try:
                left[r["unit"]] = {"index_value": float(r["index_value"])}
                right[r["unit"]] = {"covariate_value": float(r["covariate_value"])}
            except (TypeError, ValueError):
                continue
    else:
        left = _numeric_table(read_text(indices_path), "indices")
        right = _numeric_table(read_text(covariates_path), "covariates")
    return _correlate_tables(left, right)


def _add_analysis_flags(p):
    g = p.add_argument_group("analysis settings")
    g.add_argument("--baseline", choices=["covariate", "logistic", "ets"], default=None,
                   help="baseline model (default: covariate when --covariates is given, "
                        "else logistic)")
    g.add_argument("--window", type=int, default=3, help="moving-average window (default 3)")
    g.add_argument("--no-normalize", action="store_true",
                   help="keep original units instead of scaling month 0 to 1")
    g.add_argument("--min-duration", type=int, default=3,
                   help="shortest admissible disruption in months (default 3)")
    g.add_argument("--min-peak-ratio", type=float, default=0.05,
                   help="smallest admissible peak relative loss (default 0.05)")
    g.add_argument("--penalty", default="auto",
                   help="segmentation penalty per segment, or 'auto' (default)")
    g.add_argument("--span", choices=["contiguous", "windows"], default="contiguous",
                   help="months integrated for r (default contiguous)")
    g.add_argument("--rho-basis", choices=["disruption", "recovery"], default="disruption",
                   help="rates used for rho (default disruption)")
    g.add_argument("--quadrature", choices=["corrected", "trapezoid"], default="corrected",
                   help="integration of the loss for r (default corrected)")
    g.add_argument("--floor-sigmas", type=float, default=2.0,
                   help="window edges sit where loss crosses this many noise sd (default 2)")
    g.add_argument("--edge-slack", type=int, default=1,
                   help="months each window edge may move during fitting (default 1)")


def build_parser():
    parser = _Parser(
        prog="rescurve",
        description="Resilience and adaptability of monthly performance series "
                    "under successive disruptions.",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic scenario from a JSON spec",
                       epilog=EXIT_CODES, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("spec", help="scenario spec JSON")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("analyze", help="analyze one observed series",
                       epilog=EXIT_CODES, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("observed", help="CSV with month,value[,label]")
    p.add_argument("--covariates", help="CSV with month,physicians,population")
    p.add_argument("--expected", help="known expected series (skips baseline fitting)")
    p.add_argument("--cutoff", help="first disrupted month YYYY-MM; the baseline is fitted before it")
    p.add_argument("--label", help="series label (default: from the file)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plot", action="store_true", help="also write plot.svg")
    _add_analysis_flags(p)

    p = sub.add_parser("batch", help="analyze every series listed in a manifest",
                       epilog=EXIT_CODES, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("manifest", help="CSV: label,observed_path[,covariate_path,expected_path,"
                                    "cutoff,group]")
    p.add_argument("--cutoff", help="cutoff for rows that give none")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plot", action="store_true", help="write per-row plots and rankings.svg")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    _add_analysis_flags(p)

    p = sub.add_parser("correlate", help="Pearson correlations between indices and covariates",
                       epilog=EXIT_CODES, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("indices", help="CSV keyed by unit (e.g. a batch indices.csv), or a single "
                                   "unit,index_value,covariate_value file")
    p.add_argument("covariates", nargs="?", help="CSV keyed by unit")
    p.add_argument("--out", required=True, help="output JSON file")

    p = sub.add_parser("compare", help="indices under each baseline model",
                       epilog=EXIT_CODES, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("observed")
    p.add_argument("--covariates")
    p.add_argument("--cutoff", required=True)
    p.add_argument("--max-spread", type=float, default=0.05,
                   help="largest acceptable spread of r across baselines (default 0.05)")
    p.add_argument("--out", required=True, help="output directory")
    _add_analysis_flags(p)
    return parser


def _dispatch(args):
    if args.command == "synth":
        truth = run_synth(args.spec, args.out)
        print(f"wrote {args.out}: {len(truth.disruptions)} disruption(s), "
              f"r = {truth.true_indices.resilience:.4f}")
        return EXIT_OK

    if args.command == "analyze":
        result = run_analyze(args.observed, args.out, covariate_path=args.covariates,
                             expected_path=args.expected, cutoff=args.cutoff,
                             options=_options(args), plot=args.plot, label=args.label)
        rep = result.report
        idx = rep.indices
        print(f"{rep.label}: {idx.n_disruptions} disruption(s), rho = {idx.adaptability:.4f}, "
              f"r = {idx.resilience:.4f}")
        for f in rep.failures:
            print(f"fit failed for window at {f['start_month']}: {f['message']}", file=sys.stderr)
        return rep.exit_code

    if args.command == "batch":
        rows, outcomes, summary = run_batch(args.manifest, args.out, options=_options(args),
                                            cutoff=args.cutoff, plot=args.plot, jobs=args.jobs)
        failed = len(summary["failed"])
        print(f"{len(rows) - failed}/{len(rows)} rows analyzed; summary in {args.out}")
        return EXIT_BATCH_PARTIAL if failed else EXIT_OK

    if args.command == "correlate":
        table = run_correlate(args.indices, args.covariates)
        atomic_write(args.out, dump_json(table))
        print(f"{table['joined_units']} joined unit(s); table in {args.out}")
        return EXIT_OK

    if args.command == "compare":
        observed, cov, _, _ = _load_inputs(args.observed, args.covariates)
        rows, spread = baseline_sensitivity(observed, _month(args.cutoff), cov,
                                            _options(args))
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoFailure(f"cannot create {out}: {exc}") from exc
        atomic_write(out / "sensitivity.csv", _csv_text(
            ["baseline", "rho", "r", "n_disruptions"],
            [[r["baseline"], r["rho"], r["r"], r["n_disruptions"]] for r in rows]))
        ok = spread <= args.max_spread
        atomic_write(out / "sensitivity.json", dump_json(
            {"rows": rows, "r_spread": spread, "max_spread": args.max_spread, "within": ok}))
        for r in rows:
            print(f"{r['baseline']:>10}  rho = {r['rho']:.4f}  r = {r['r']:.4f}")
        print(f"r spread {spread:.4f} ({'within' if ok else 'exceeds'} {args.max_spread})")
        return EXIT_OK
    raise AssertionError(args.command)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ResilienceError as exc:
        row = getattr(exc, "row", None)
        where = f" (row {row})" if row is not None else ""
        print(f"error: {type(exc).__name__}{where}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
