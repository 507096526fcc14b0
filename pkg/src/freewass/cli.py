"""Command-line front end.

Subcommands::

    freewass run <config.json>        checks, functionals, flow dumps, oracle, manifest
    freewass list-checks              every check with its anchor and default tolerance
    freewass dump-flow <config.json>  flow CSVs only
    freewass oracle <config.json>     random-matrix oracle only

Exit status: 0 when no pass/fail check failed, 1 when one did, 2 on a
configuration error.  Reported checks never affect the exit status.  The
environment variable ``FREEWASS_WORKERS`` sets the number of worker threads.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata
from pathlib import Path

from .config import ConfigError, load_config
from .freeconv import ou_flow, write_flow_csv
from .functionals import format_number, report, write_report_csv
from .records import FAIL
from .verify import CHECKS, run_check

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
REPORT_HEADER = ["check_id", "paper_anchor", "measure_id", "params", "lhs", "rhs", "margin",
                 "tolerance", "status"]


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("FREEWASS_WORKERS", "1")))
    except ValueError:
        return 1


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_HEADER)
        for r in records:
            w.writerow([r.check_id, r.paper_anchor, r.measure_id, r.params, format_number(r.lhs),
                        format_number(r.rhs), format_number(r.margin),
                        format_number(r.tolerance), r.status])


def _jobs(cfg, measures):
    defaults = {"n_grid": cfg.resolution.n_grid, "n_quantile": cfg.resolution.n_quantile}
    jobs = []
    for c in cfg.checks:
        if CHECKS[c.check_id].takes_list:
            jobs.append((c.check_id, [measures[n] for n in c.measures], c.params, c.tolerance,
                         "|".join(c.measures), list(c.measures), defaults))
        else:
            for n in c.measures:
                jobs.append((c.check_id, [measures[n]], c.params, c.tolerance, n, None, defaults))
    return jobs


def run_checks(cfg, measures, workers=None):
    """Run every configured check; records come back in config order."""
    jobs = _jobs(cfg, measures)
    workers = workers or worker_count()

    def one(job):
        return run_check(*job)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]
    return [r for part in results for r in part]


def dump_flows(cfg, measures, out: Path):
    written = []
    for name in cfg.flow.measures:
        states = [ou_flow(measures[name], t, cfg.resolution.n_grid) for t in cfg.flow.t_grid]
        path = out / f"flow_{name}.csv"
        write_flow_csv(states, path)
        written.append(path.name)
    return written


def run_oracles(cfg, measures, out: Path):
    from .freeconv import free_convolution
    from .rmt import compare_spectrum, sample_deformed_gue, write_eigenvalue_csv

    records, written = [], []
    for i, o in enumerate(cfg.oracle):
        m = measures[o.measure]
        sample = sample_deformed_gue(m, o.r, o.n_dim, o.n_trials, o.seed)
        target, _ = free_convolution(m, o.r, n_grid=cfg.resolution.n_grid)
        records += compare_spectrum(sample, target, o.ks_threshold, o.w2_threshold,
                                    measure_id=o.measure)
        path = out / f"eigenvalues_{i}_{o.measure}.csv"
        write_eigenvalue_csv(sample, path)
        written.append(path.name)
    return records, written


def _versions():
    out = {"python": platform.python_version()}
    for pkg in ("numpy", "scipy", "numba", "artifact"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def write_manifest(cfg, out: Path, command, outputs, wall, status):
    manifest = {
        "command": command,
        "config_path": str(cfg.source) if cfg.source else None,
        "config_sha256": cfg.digest,
        "config": cfg.raw,
        "seeds": [o.seed for o in cfg.oracle],
        "workers": worker_count(),
        "versions": _versions(),
        "outputs": outputs,
        "wall_time_seconds": wall,
        "exit_status": status,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")


def _prepare(path):
    cfg = load_config(path)
    measures = cfg.build_measures()
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg, measures


def cmd_run(path, command="run") -> int:
    t0 = time.perf_counter()
    cfg, measures = _prepare(path)
    out = cfg.output_dir
    outputs = []
    records = []
    if command in ("run",):
        records += run_checks(cfg, measures)
        names = cfg.functionals or tuple(
            n for n, m in measures.items() if type(m).__name__ == "GridMeasure")
        write_report_csv([report(measures[n], n) for n in names], out / "functionals.csv")
        outputs.append("functionals.csv")
    if command in ("run", "dump-flow"):
        outputs += dump_flows(cfg, measures, out)
    if command in ("run", "oracle"):
        recs, written = run_oracles(cfg, measures, out)
        records += recs
        outputs += written
    if command in ("run", "oracle"):
        write_records_csv(records, out / "report.csv")
        outputs.append("report.csv")
    failed = [r for r in records if r.status == FAIL]
    status = EXIT_FAILED if failed else EXIT_OK
    write_manifest(cfg, out, command, sorted(outputs), time.perf_counter() - t0, status)
    n_pass = sum(r.status == "pass" for r in records)
    n_rep = sum(r.status == "reported" for r in records)
    print(f"{command}: {len(records)} records, {n_pass} pass, {len(failed)} fail, "
          f"{n_rep} reported -> {out}")
    for r in failed:
        print(f"FAIL {r.check_id} [{r.measure_id}] margin={r.margin:.3e} tol={r.tolerance:.1e}"
              f" {r.params}")
    return status


def list_checks(stream=None) -> str:
    lines = []
    for cid, spec in CHECKS.items():
        tol = "reported-only" if spec.reported else f"tolerance={spec.tolerance:g}"
        lines.append(f"{cid}\t{tol}\t{spec.anchor}")
    text = "\n".join(lines) + "\n"
    (stream or sys.stdout).write(text)
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freewass", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "run checks, functionals, flows and the oracle"),
                           ("dump-flow", "write flow CSVs only"),
                           ("oracle", "run the random-matrix oracle only")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", type=Path)
    sub.add_parser("list-checks", help="list registered checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-checks":
        list_checks()
        return EXIT_OK
    try:
        return cmd_run(args.config, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
