"""Command-line entry point: ``driven-lindblad simulate|check-validity|sweep``.

Exit codes: 0 success, 1 configuration or usage error, 2 solver abort,
3 failed validity check (``check-validity`` only).
"""

from __future__ import annotations

import argparse
import io
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import __version__
from .bath import QuadratureError
from .config import SCHEMA, ConfigError, RunConfig, format_value, load
from .master import PositivityError, analytic_interaction_solution, bloch_interaction, evolve
from .propagators import UnitarityError, propagate_closed, strong_driving_expansion
from .qubit import InvalidStateError, dag, observables_batch
from .tn import GibbsTruncationError, TruncationError, discretize_bath, tn_run
from .validity import full_report

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VALIDITY = 0, 1, 2, 3
SOLVER_ERRORS = (PositivityError, UnitarityError, TruncationError, GibbsTruncationError,
                 QuadratureError, InvalidStateError)
COLUMNS = ("t", "P_e", "coherence", "sx", "sy", "sz", "purity")
TN_COLUMNS = ("max_bond", "discarded_weight")
BATH_KEYS = ("a", "wc_over_omega0", "TB_over_omega0")


class UsageError(ValueError):
    pass


@dataclass
class RunResult:
    columns: dict
    notes: list = field(default_factory=list)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.15e}"


# -- engines ------------------------------------------------------------------

def _run_master(cfg: RunConfig, solver: str) -> RunResult:
    traj = evolve(cfg.initial_state(), cfg.drive, cfg.bath, cfg.evolution(solver))
    return RunResult({"t": traj.t, **traj.observables},
                     [f"max_trace_drift = {traj.max_trace_drift:.6e}",
                      f"min_eigenvalue = {traj.min_eigenvalue:.6e}"])


def _run_analytic(cfg: RunConfig) -> RunResult:
    p, ev = cfg.drive, cfg.evolution("tdme")
    # closed form on the full step grid, sampled at the store stride
    closed = propagate_closed(p, ev.t_end, ev.dt, stride=1, backend=ev.backend)
    nsteps = len(closed.t) - 1
    idx = np.arange(0, nsteps + 1, ev.stride)
    if idx[-1] != nsteps:
        idx = np.append(idx, nsteps)
    c_z0, c_plus0 = bloch_interaction(np.asarray(cfg.initial_state()))
    sol = analytic_interaction_solution(float(c_z0), complex(c_plus0), p, cfg.bath,
                                        closed.t, ev.quad, ev.lamb_shift)
    U = closed.matrices()[idx]
    rho = U @ sol.rho()[idx] @ dag(U)
    t = closed.t[idx]
    return RunResult({"t": t, **observables_batch(rho, t, p)})


def _tn_stride(cfg: RunConfig) -> int:
    return max(1, round(cfg["store_stride"] * cfg["dt_over_ts"] / cfg["tn_dt_over_ts"]))


def _run_tn(cfg: RunConfig) -> RunResult:
    trunc = cfg.truncation
    if cfg["tn_N"] > 30:
        warnings.warn(f"tn_N = {cfg['tn_N']}: runtime grows quickly beyond desk scale",
                      RuntimeWarning, stacklevel=2)
    bath = discretize_bath(cfg.bath, cfg["tn_N"], cfg["tn_w_max_over_omega0"],
                           trunc.occupancy_cutoff, trunc.d_max)
    tr = tn_run(cfg.initial_state(), cfg.drive, cfg.bath, bath.N, bath.w_max,
                cfg["tn_dt_over_ts"], cfg["t_end_over_ts"], trunc,
                stride=_tn_stride(cfg), bath=bath)
    notes = [f"t_max = {tr.t_max:.12e}",
             "local_dimensions = " + " ".join(str(d) for d in bath.d)]
    if tr.beyond_recurrence.any():
        warnings.warn(f"samples beyond the recurrence guard t_max = {tr.t_max:.6g}",
                      RuntimeWarning, stacklevel=2)
    return RunResult({"t": tr.t, **tr.observables, "max_bond": tr.max_bond,
                      "discarded_weight": tr.discarded_weight}, notes)


def run_engine(cfg: RunConfig, engine: str = None) -> RunResult:
    engine = engine or cfg["engine"]
    if engine == "unitary":
        if cfg["a"] > 0:
            warnings.warn("engine unitary ignores the bath keys "
                          + ", ".join(BATH_KEYS), UserWarning, stacklevel=2)
        return _run_master(cfg, "unitary")
    if engine in ("tdme", "adme"):
        return _run_master(cfg, engine)
    if engine == "analytic":
        return _run_analytic(cfg)
    return _run_tn(cfg)


# -- output -------------------------------------------------------------------

def header(cfg: RunConfig, extra=()) -> list:
    lines = [f"driven-lindblad {__version__}"]
    lines += cfg.header_lines()
    lines += [f"validity.{s}" for s in full_report(cfg.drive, cfg.bath, cfg.quad).as_lines()]
    lines += list(extra)
    return ["# " + s for s in lines]


def write_csv(fh, cfg: RunConfig, res: RunResult, caught=()) -> None:
    names = list(COLUMNS) + [c for c in TN_COLUMNS if c in res.columns]
    notes = list(res.notes) + [f"warning: {w}" for w in caught]
    for line in header(cfg, notes):
        fh.write(line + "\n")
    fh.write(",".join(names) + "\n")
    cols = [res.columns[n] for n in names]
    for row in zip(*cols):
        fh.write(",".join(_fmt(x) for x in row) + "\n")


def simulate_text(cfg: RunConfig) -> str:
    """Run the configured engine and return the CSV text."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = run_engine(cfg)
    messages = []
    for w in caught:
        msg = str(w.message)
        if msg not in messages:
            messages.append(msg)
    buf = io.StringIO()
    write_csv(buf, cfg, res, messages)
    return buf.getvalue()


# -- sweep --------------------------------------------------------------------

SUMMARY_COLUMNS = ("value", "status", "max_P_e", "mean_coherence", "final_purity",
                   "strong_expansion_error", "tdme_gap", "error")


def strong_expansion_error(cfg: RunConfig) -> float:
    """Max entrywise error of the first-order strong-driving expansion over
    one drive period (or the run length if shorter)."""
    p = cfg.drive
    t_end = min(cfg["t_end_over_ts"], 2 * math.pi / p.omega)
    closed = propagate_closed(p, t_end, cfg["dt_over_ts"], stride=1)
    a, b = strong_driving_expansion(closed.t, p, "first")
    return float(max(np.abs(closed.alpha - a).max(), np.abs(closed.beta - b).max()))


def _sweep_one(job):
    values, out_path = job
    cfg = RunConfig(values)
    row = {"status": "ok", "error": ""}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            text = simulate_text(cfg)
            with open(out_path, "w") as fh:
                fh.write(text)
            res = _read_columns(text)
            t, pe, coh = res["t"], res["P_e"], res["coherence"]
            row["max_P_e"] = float(pe.max())
            row["mean_coherence"] = (float(integrate.trapezoid(coh, t) / (t[-1] - t[0]))
                                     if len(t) > 1 else float(coh[0]))
            row["final_purity"] = float(res["purity"][-1])
            row["strong_expansion_error"] = strong_expansion_error(cfg)
            if cfg["engine"] == "tn":
                ref = run_engine(cfg, "tdme").columns
                row["tdme_gap"] = float(np.max(np.abs(
                    pe - np.interp(t, ref["t"], ref["P_e"]))))
    except SOLVER_ERRORS + (ValueError, RuntimeError) as exc:
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return row


def _read_columns(text: str) -> dict:
    lines = [s for s in text.splitlines() if not s.startswith("#")]
    names = lines[0].split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return {n: data[:, i] for i, n in enumerate(names)}


def sweep(cfg: RunConfig, key: str, values, out_dir: str) -> list:
    """Run one simulation per value of ``key`` and write ``summary.csv``.

    Runs are isolated; a failure is recorded in its summary row.
    """
    if key not in SCHEMA or SCHEMA[key][0] not in (float, int):
        raise UsageError(f"sweep key {key!r} is not a numeric config key")
    if not values:
        raise UsageError("sweep needs at least one value")
    cfgs = [cfg.with_values(**{key: v}) for v in values]
    os.makedirs(out_dir, exist_ok=True)
    jobs = [(c.values, os.path.join(out_dir, f"{key}_{i:03d}.csv"))
            for i, c in enumerate(cfgs)]
    workers = cfg["workers"] or os.cpu_count() or 1
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        rows = list(pool.map(_sweep_one, jobs))
    for c, row in zip(cfgs, rows):
        row["value"] = c[key]
    with open(os.path.join(out_dir, "summary.csv"), "w") as fh:
        fh.write(f"# driven-lindblad {__version__}\n")
        fh.write(f"# sweep_key = {key}\n")
        for line in cfg.header_lines():
            if not line.startswith(key + " "):
                fh.write(f"# {line}\n")
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for row in rows:
            cells = []
            for col in SUMMARY_COLUMNS:
                v = row.get(col, "")
                if col == "error":
                    v = '"' + str(v).replace('"', "'") + '"' if v else ""
                elif isinstance(v, (float, int)) and not isinstance(v, bool):
                    v = _fmt(v) if col != "value" else format_value(v)
                cells.append(str(v))
            fh.write(",".join(cells) + "\n")
    return rows


# -- argument handling --------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="driven-lindblad",
                     description="Driven qubit coupled to a thermal Ohmic bath.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="key = value file")
        sp.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        help="override a config key (repeatable)")
        sp.add_argument("--out", metavar="PATH", help="output file (directory for sweep)")

    sp = sub.add_parser("simulate", help="run one engine and write CSV")
    common(sp)
    sp.add_argument("--engine", choices=("tdme", "adme", "unitary", "tn", "analytic"))
    sp = sub.add_parser("check-validity", help="report the regime conditions")
    common(sp)
    sp = sub.add_parser("sweep", help="run one simulation per value of a key")
    common(sp)
    sp.add_argument("--engine", choices=("tdme", "adme", "unitary", "tn", "analytic"))
    sp.add_argument("--key", required=True, help="numeric config key to vary")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sub.add_parser("keys", help="list config keys with defaults")
    return parser


def _emit(text: str, out: str) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "keys":
            for key, (_, default, desc) in SCHEMA.items():
                print(f"{key} = {format_value(default)}" + (f"  # {desc}" if desc else ""))
            return EXIT_OK
        overrides = list(args.set)
        if getattr(args, "engine", None):
            overrides.append(f"engine={args.engine}")
        cfg = load(args.config, overrides)
        if args.command == "check-validity":
            report = full_report(cfg.drive, cfg.bath, cfg.quad)
            _emit("\n".join(report.as_lines()) + "\n", args.out)
            return EXIT_OK if report.all_ok else EXIT_VALIDITY
        if args.command == "simulate":
            text = simulate_text(cfg)
            for line in text.splitlines():
                if line.startswith("# warning: "):
                    print(line[2:], file=sys.stderr)
            _emit(text, args.out)
            return EXIT_OK
        kind = SCHEMA.get(args.key, (str,))[0]
        try:
            values = [kind(v.strip()) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"--values: cannot parse {args.values!r}")
        rows = sweep(cfg, args.key, values, args.out or "sweep_out")
        failed = sum(r["status"] != "ok" for r in rows)
        if failed:
            print(f"{failed} of {len(rows)} runs failed; see summary.csv", file=sys.stderr)
        return EXIT_OK
    except (ConfigError, UsageError) as exc:
        print(f"driven-lindblad: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"driven-lindblad: solver abort: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
