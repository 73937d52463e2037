"""Command-line front end: ``surfdecay <command> --config run.toml``.

Every command writes flat CSV files (12 significant digits, LF line endings)
plus a verbatim copy of the config into the output directory.  The output
directory comes from ``--out``, else $SURFDECAY_OUTPUT_DIR, else the config.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from importlib import resources
from pathlib import Path

from .config import RunConfig
from .errors import SurfDecayError
from .pipeline import Dataset, Pipeline

OUTPUT_ENV = "SURFDECAY_OUTPUT_DIR"
CONFIG_COPY = "config.toml"


def fmt(value) -> str:
    if isinstance(value, (bool, str)):
        return str(value)
    if isinstance(value, int) or (hasattr(value, "dtype") and value.dtype.kind in "iu"):
        return str(int(value))
    return f"{float(value):.12g}"


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_dataset(out: Path, ds: Dataset) -> Path:
    path = out / f"{ds.name}.csv"
    write_csv(path, ds.header, ds.rows)
    return path


def resolve_config(name: str):
    """A path, or the name of a bundled config such as ``silica_cesium``."""
    path = Path(name)
    if path.exists():
        return path
    bundled = resources.files("surfdecay") / "data" / f"{path.stem}.toml"
    if path.parent == Path(".") and bundled.is_file():
        return bundled
    return path


class Session:
    """Resolved config, output directory and the shared pipeline for one invocation."""

    def __init__(self, args):
        if args.config is None:
            raise SurfDecayError("--config is required")
        self.config = RunConfig.from_file(resolve_config(args.config))
        out = args.out or os.environ.get(OUTPUT_ENV) or self.config.output_dir
        self.out = Path(out)
        self.pipeline = Pipeline(self.config, quadrature_order=args.quadrature_order)
        self.overrides = []
        if args.quadrature_order is not None:
            self.overrides.append(f"quadrature_order = {args.quadrature_order}")

    def prepare(self) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        with open(self.out / CONFIG_COPY, "w", newline="", encoding="utf-8") as fh:
            fh.write(self.config.source_text)
        if self.overrides:
            with open(self.out / "overrides.txt", "w", newline="", encoding="utf-8") as fh:
                fh.write("".join(line + "\n" for line in self.overrides))
        return self.out


def cmd_potential(s: Session) -> int:
    out = s.prepare()
    write_dataset(out, s.pipeline.potential_rows())
    with open(out / "params.txt", "w", newline="", encoding="utf-8") as fh:
        fh.write("".join(line + "\n" for line in s.pipeline.params_summary()))
    print(f"wrote {out / 'potentials.csv'} and {out / 'params.txt'}")
    return 0


def cmd_spectrum(s: Session) -> int:
    out = s.prepare()
    p = s.pipeline
    n_e, n_g = p.counts
    print(f"bound levels: excited {n_e}, ground {n_g}")
    for label, table in (("e", p.window_excited), ("g", p.window_ground)):
        write_csv(out / f"levels_{label}.csv", ("nu", "energy_Hz"),
                  [(st.nu, st.energy) for st in table])
        print(f"window levels ({label}): {len(table)}")
        if s.config.solver.write_wavefunctions:
            for st in table:
                write_csv(out / f"wavefunction_{label}{st.nu}.csv", ("x_nm", "psi"),
                          zip(st.grid.x[: st.psi.size], st.psi))
    return 0


def cmd_rates(s: Session) -> int:
    out = s.prepare()
    for ds in s.pipeline.datasets():
        print(f"wrote {write_dataset(out, ds)} ({len(ds.rows)} rows)")
    return 0


def cmd_evolve(s: Session) -> int:
    out = s.prepare()
    traj = s.pipeline.run_dynamics()
    path = write_dataset(out, s.pipeline.trajectory_rows(traj))
    a = traj.audit
    print(f"wrote {path}; trace drift {a['trace_drift']:.3g}, "
          f"min eigenvalue {a['min_eigenvalue']:.3g}, {traj.nfev} evaluations")
    return 0


def cmd_verify(s: Session, groups=None) -> int:
    from .verify import GROUPS, HEADER, run_checks

    unknown = [g for g in (groups or []) if g not in GROUPS]
    if unknown:
        raise SurfDecayError(f"unknown check group(s) {unknown}; choose from {list(GROUPS)}")
    checks = run_checks(s.pipeline, groups)
    print(HEADER)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"# {len(checks) - failed} passed, {failed} failed", file=sys.stderr)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="TOML run configuration")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker threads for compiled kernels")
    common.add_argument("--quadrature-order", type=int, default=argparse.SUPPRESS,
                        help="override rates.quadrature_order")
    parser = argparse.ArgumentParser(prog="surfdecay", parents=[common],
                                     description="Decay of atoms in surface-bound translational levels.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("potential", parents=[common], help="potentials.csv and params.txt")
    sub.add_parser("spectrum", parents=[common], help="bound levels and counts")
    sub.add_parser("rates", parents=[common], help="figure datasets")
    sub.add_parser("evolve", parents=[common], help="master-equation trajectory")
    v = sub.add_parser("verify", parents=[common], help="run self-checks, nonzero exit on failure")
    v.add_argument("--checks", nargs="+", default=None, help="restrict to these check groups")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("config", "out", "threads", "quadrature_order"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise SurfDecayError("--threads must be >= 1")
            import numba

            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        if args.quadrature_order is not None and args.quadrature_order < 1:
            raise SurfDecayError("--quadrature-order must be >= 1")
        session = Session(args)
        if args.command == "verify":
            return cmd_verify(session, args.checks)
        handler = {"potential": cmd_potential, "spectrum": cmd_spectrum, "rates": cmd_rates,
                   "evolve": cmd_evolve}[args.command]
        return handler(session)
    except SurfDecayError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
