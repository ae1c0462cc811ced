"""Batch front-end.

Subcommands::

    boxgas coeffs     --config cfg [--out DIR]    coefficient tables + decay fit
    boxgas thermo     --config cfg [--out DIR]    free-energy/pressure tables
    boxgas duality    --config cfg [--out DIR]    per-volume duality reports
    boxgas deviations --config cfg [--out DIR]    deviation reports + plot data
    boxgas validate   [--config cfg]              the full check suite

Exit codes: 0 success, 2 config error, 3 numeric/regime error,
4 validation failure.  Identical config + seed produces byte-identical
CSV output: rows are computed with per-row derived seeds, collected, and
written once in canonical order (files are staged and atomically renamed).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, bulk_model, load_config, model_for_region, \
    oracle_source, resolve_mu0, table_for_region
from .coeffs import beta_n_infinite, decay_fit
from .deviations import lclt, moderate_dev, precise_ld
from .duality import duality_point
from .errors import BoxgasError, ConfigError
from .oracle import probability_vector
from .potentials import check_condition_star, default_c0, c_beta
from .validate import run_checks

REPORT_SCHEMA_VERSION = 1

DEVIATION_COLUMNS = ["volume", "alpha", "u_eff", "estimate", "oracle",
                     "rate", "d_variant", "error_term", "residual",
                     "budget", "warnings"]


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: _fmt(row.get(c)) for c in columns})
    os.replace(tmp, path)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def _star_margin(run: RunConfig, rho: float) -> float:
    if run.potential.kind == "zero":
        return 0.0
    cb, _ = c_beta(run.potential, run.beta, run.dimension)
    _, ratio = check_condition_star(
        rho, cb, default_c0(run.beta, run.potential.stability_b))
    return ratio


def cmd_coeffs(run: RunConfig, outdir: Path) -> int:
    """Tables per region plus the infinite-volume table, with decay fits."""
    outdir.mkdir(parents=True, exist_ok=True)
    mu0 = resolve_mu0(run)
    rho_ref = run.target_density if run.target_density else \
        max(1e-3, math.exp(run.beta * mu0))
    for region in run.regions():
        table = table_for_region(run, region)
        table.save(outdir / f"table_L{region.side:g}.json")
        # fit at the run's working density so convergence breaches surface
        rho_fit = max(rho_ref, (run.n_max + 1.01) / region.volume)
        try:
            fit = decay_fit(table, min(0.95, rho_fit))
            print(f"L={region.side:g}: decay C={fit.amplitude:.4g} "
                  f"c={fit.rate:.4g} violation={fit.violation}")
        except BoxgasError as exc:
            print(f"L={region.side:g}: decay fit unavailable ({exc})")
    values, errors = [], []
    for n in range(1, run.n_max + 1):
        try:
            v, e = beta_n_infinite(run.potential, run.beta, n,
                                   run.integration)
        except BoxgasError as exc:
            print(f"bulk order n={n}: {exc}")
            break
        values.append(v)
        errors.append(e)
        flag = "  (uncertainty dominates)" if e >= abs(v) else ""
        print(f"bulk n={n}: {v:.10g} +- {e:.2g}{flag}")
    rows = [{"n": n + 1, "value": v, "uncertainty": e}
            for n, (v, e) in enumerate(zip(values, errors))]
    _write_csv(outdir / "bulk_coefficients.csv",
               ["n", "value", "uncertainty"], rows)
    margin = _star_margin(run, rho_ref)
    status = "ok" if margin < 1.0 else "VIOLATED"
    print(f"condition margin at rho_ref={rho_ref:g}: {margin:.4f} ({status})")
    return 0


def cmd_thermo(run: RunConfig, outdir: Path) -> int:
    """CSV tabulation of log Z, both free energies and the pressure."""
    outdir.mkdir(parents=True, exist_ok=True)
    mu0 = resolve_mu0(run)
    for region in run.regions():
        model = model_for_region(run, region)
        rows = []
        n_top = model.n_max_particles(mu0)
        for N in range(1, n_top + 1):
            lz = model.log_z_canonical(N)
            rho = N / region.volume
            rows.append({
                "N": N, "log_z": lz.value, "tail_bound": lz.tail,
                "free_energy": model.free_energy_f(N).value,
                "cal_f": model.cal_f(rho) if 0 < rho < 1 else float("nan"),
                "warning_flags": "star" if lz.star_warning else "",
            })
        _write_csv(outdir / f"thermo_L{region.side:g}.csv",
                   ["N", "log_z", "tail_bound", "free_energy", "cal_f",
                    "warning_flags"], rows)
        p = model.pressure_grand(mu0)
        print(f"L={region.side:g}: pressure {p.value:.10g} "
              f"(tail {p.tail:.2e})")
    return 0


def cmd_duality(run: RunConfig, outdir: Path) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    mu0 = resolve_mu0(run)
    reports = []
    for region in run.regions():
        model = model_for_region(run, region)
        point = duality_point(model, mu0)
        doc = point.to_dict()
        doc["volume"] = region.volume
        doc["schema_version"] = REPORT_SCHEMA_VERSION
        reports.append(doc)
        print(f"L={region.side:g}: rho_bar={point.rho_bar:.6g} "
              f"n_bar={point.n_bar} n_star={point.n_star} "
              f"sigma2={point.sigma2:.6g} star={point.star_ratio:.3f}")
    (outdir / "duality.json").write_text(
        json.dumps({"schema_version": REPORT_SCHEMA_VERSION,
                    "mu0": mu0, "points": reports},
                   indent=2, sort_keys=True) + "\n")
    return 0


def _deviation_row(run: RunConfig, region, alpha: float, u: float,
                   mu0: float):
    model = model_for_region(run, region)
    z = oracle_source(run.potential, run.beta, region, run.integration)
    try:
        if alpha >= 1.0:
            rep = precise_ld(model, mu0, u, z_source=z)
        elif alpha == 0.5:
            rep = lclt(model, mu0, u, z_source=z)
        else:
            rep = moderate_dev(model, mu0, u, alpha, z_source=z)
        return rep.to_row()
    except BoxgasError as exc:
        return {"volume": region.volume, "alpha": alpha, "u_eff": u,
                "warnings": f"failed:{type(exc).__name__}"}


def cmd_deviations(run: RunConfig, outdir: Path, threads: int = 1) -> int:
    """Deviation reports over the (region, alpha, u) grid, plus per-(alpha,
    u) residual-vs-volume plot data.  Rows that fail are isolated."""
    outdir.mkdir(parents=True, exist_ok=True)
    mu0 = resolve_mu0(run)
    grid = [(region, alpha, u) for region in run.regions()
            for alpha in run.alphas for u in run.u_values]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(
                lambda g: _deviation_row(run, g[0], g[1], g[2], mu0), grid))
    else:
        rows = [_deviation_row(run, *g, mu0) for g in grid]
    _write_csv(outdir / "deviations.csv", DEVIATION_COLUMNS, rows)
    (outdir / "deviations.json").write_text(json.dumps(
        {"schema_version": REPORT_SCHEMA_VERSION, "mu0": mu0, "rows": rows},
        indent=2, sort_keys=True, default=str) + "\n")
    # plot data: residual vs volume per (alpha, u)
    plot_rows = []
    for alpha in run.alphas:
        for u in run.u_values:
            for row in rows:
                if row.get("alpha") == alpha and not str(
                        row.get("warnings", "")).startswith("failed"):
                    if row.get("residual") is None:
                        continue
                    plot_rows.append({
                        "alpha": alpha, "u": u, "volume": row["volume"],
                        "residual": row["residual"],
                        "estimate": row["estimate"]})
    _write_csv(outdir / "residual_vs_volume.csv",
               ["alpha", "u", "volume", "residual", "estimate"], plot_rows)
    n_fail = sum(1 for r in rows
                 if str(r.get("warnings", "")).startswith("failed"))
    print(f"{len(rows)} rows ({n_fail} failed)")
    return 0


def cmd_validate(run: RunConfig | None, outdir: Path) -> int:
    results = run_checks()
    outdir.mkdir(parents=True, exist_ok=True)
    summary = {"schema_version": REPORT_SCHEMA_VERSION,
               "version": __version__,
               "checks": [{"id": r.check_id, "description": r.description,
                           "passed": r.passed, "detail": r.detail}
                          for r in results]}
    (outdir / "validation.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 4 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="boxgas",
        description="Cluster-expansion thermodynamics and deviation "
                    "estimates for a gas in a box")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("coeffs", "thermo", "duality", "deviations", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path,
                       required=(name != "validate"))
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--table", type=Path, default=None)
    args = parser.parse_args(argv)

    try:
        run = load_config(args.config) if args.config else None
        if run is not None:
            if args.seed is not None:
                run.seed = args.seed
                run.integration.seed = args.seed
            if args.table is not None:
                run.table_source = "load"
                run.table_path = str(args.table)
        outdir = args.out or Path(run.outdir if run else "out")
        if args.command == "coeffs":
            return cmd_coeffs(run, outdir)
        if args.command == "thermo":
            return cmd_thermo(run, outdir)
        if args.command == "duality":
            return cmd_duality(run, outdir)
        if args.command == "deviations":
            return cmd_deviations(run, outdir, threads=args.threads)
        return cmd_validate(run, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BoxgasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
