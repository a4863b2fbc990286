"""Command-line front end: sweeps, figure data, cross-over tables and policy export.

Every subcommand accepts ``--config FILE`` with flat ``key = value`` lines
(keys are option names, list values separated by spaces or commas).
Explicit flags override the file.  Exit codes: 0 success, 2 usage error,
3 solver failure, 4 oracle mismatch under ``--assert-oracle``.
"""

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__, analytic, csir, ospa, tpc
from .errors import (
    BracketError,
    ConfigError,
    ConvergenceError,
    DomainError,
    EvaluationError,
    NotFoundError,
    SolverError,
)
from .model import BF_IC, BF_PERFECT, USPA, SystemConfig, db_to_linear
from .montecarlo import McConfig, OutageEstimate, simulate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_ORACLE = 4

HEADER = ["scheme", "M", "R", "rho", "snr_db", "pout_analytic", "pout_mc", "mc_halfwidth", "samples", "seed"]

OSPA = "OSPA"
SWEEP_SCHEMES = (USPA, BF_IC, BF_PERFECT, OSPA, tpc.USPA_TPC, tpc.BFIC_TPC)
CSIR_SCHEMES = ("USPA-CSIR-EQ", "USPA-CSIR-OPT", "BFIC-CSIR-EQ", "BFIC-CSIR-OPT")

SOLVER_ERRORS = (SolverError, ConvergenceError, NotFoundError, BracketError, EvaluationError)

FIG1_RHOS = (0.0, 0.5, 0.9, 0.999, 1.0)
FIG3_PAIRS = ((0.5, 20.0), (0.9, 20.0), (0.9, 30.0), (0.99, 30.0))


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepSpec:
    schemes: Tuple[str, ...]
    M: Tuple[int, ...]
    R: Tuple[float, ...]
    rho: Tuple[float, ...]
    snr_db: Tuple[float, float, float]
    mc: Optional[McConfig] = None
    output: Optional[str] = None
    T: int = 100

    def __post_init__(self):
        start, stop, step = self.snr_db
        if not step > 0:
            raise ConfigError(f"SNR step must be positive, got {step}")
        if not start <= stop:
            raise ConfigError(f"SNR start {start} exceeds stop {stop}")
        for s in self.schemes:
            if s not in SWEEP_SCHEMES + CSIR_SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}; choose from {', '.join(SWEEP_SCHEMES + CSIR_SCHEMES)}")
        if not self.schemes or not self.M or not self.R or not self.rho:
            raise ConfigError("schemes, M, R and rho need at least one value each")
        for m in self.M:
            if m < 1:
                raise ConfigError(f"M must be a positive integer, got {m}")
        for r in self.R:
            if not r > 0:
                raise ConfigError(f"R must be positive, got {r}")
        for r in self.rho:
            if not 0.0 <= r <= 1.0:
                raise ConfigError(f"rho must lie in [0, 1], got {r}")

    def snr_points(self) -> List[float]:
        start, stop, step = self.snr_db
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]

    def points(self):
        """(scheme, M, R, rho, snr_db) in output order."""
        return [
            (s, m, r, rho, snr)
            for s in self.schemes
            for m in self.M
            for r in self.R
            for rho in self.rho
            for snr in self.snr_points()
        ]


@dataclass
class Row:
    scheme: str
    M: int
    R: float
    rho: float
    snr_db: float
    pout_analytic: Optional[float] = None
    estimate: Optional[OutageEstimate] = None
    error: Optional[str] = None

    def cells(self) -> List[str]:
        est = self.estimate
        return [
            self.scheme,
            str(self.M),
            repr(float(self.R)),
            repr(float(self.rho)),
            repr(float(self.snr_db)),
            "" if self.pout_analytic is None else repr(float(self.pout_analytic)),
            "" if est is None else repr(float(est.p_hat)),
            "" if est is None else repr(float(est.half_width_95)),
            "" if est is None else str(est.samples),
            "" if est is None else str(est.master_seed),
        ]

    def oracle_status(self) -> Optional[str]:
        """PASS / FAIL / LOW-CONFIDENCE for rows that carry both numbers."""
        if self.estimate is None or self.pout_analytic is None:
            return None
        if self.estimate.low_confidence:
            return "LOW-CONFIDENCE"
        return "PASS" if self.estimate.agrees(self.pout_analytic) else "FAIL"


# ---------------------------------------------------------------------------
# row evaluation
# ---------------------------------------------------------------------------


def _csir_training(scheme: str, P: float, T: int, M: int):
    if scheme.endswith("-OPT"):
        return csir.optimize_training(P, T, M)
    return csir.equal_power_training(P, T, M)


def evaluate_point(scheme: str, M: int, R: float, rho: float, snr_db: float, mc: Optional[McConfig], T: int = 100) -> Row:
    """Analytic value (and Monte Carlo estimate when requested) at one point."""
    row = Row(scheme, M, R, rho, snr_db)
    P = float(db_to_linear(snr_db))
    config = SystemConfig(M, R, P, rho)
    try:
        if scheme in analytic.POUT:
            row.pout_analytic = float(analytic.POUT[scheme](M, R, P, rho))
            target = scheme
        elif scheme == OSPA:
            result = ospa.pout_ospa(M, R, P, rho)
            row.pout_analytic = result.pout
            target = result.policy
        elif scheme in tpc.TPC_SCHEMES:
            policy = tpc.solve_policy(scheme, M, R, P, rho)
            row.pout_analytic = tpc.pout_tpc(policy)
            target = policy
        elif scheme in CSIR_SCHEMES:
            # the bound is a perfect-CSIR law at the effective link parameters
            link = csir.effective_link(_csir_training(scheme, P, T, M), R, rho)
            spatial = USPA if scheme.startswith("USPA") else BF_IC
            config = SystemConfig(M, link.R_prime, link.P_prime, link.rho_e)
            row.pout_analytic = float(analytic.POUT[spatial](M, link.R_prime, link.P_prime, link.rho_e))
            target = spatial
        else:
            raise ConfigError(f"unknown scheme {scheme!r}")
    except SOLVER_ERRORS as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    if mc is not None:
        row.estimate = simulate(target, config, mc)
    return row


def evaluate_points(points, mc: Optional[McConfig], jobs: int = 1, T: int = 100) -> List[Row]:
    """Evaluate points concurrently; rows come back in input order."""
    work = lambda pt: evaluate_point(*pt, mc=mc, T=T)
    if jobs <= 1:
        return [work(p) for p in points]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(work, points))


def render_rows(rows: Sequence[Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def _report(rows: Sequence[Row], assert_oracle: bool) -> int:
    """Per-row diagnostics to stderr; returns the exit status for the rows."""
    failed_solver = False
    failed_oracle = False
    for i, r in enumerate(rows):
        tag = f"{r.scheme} M={r.M} R={r.R!r} rho={r.rho!r} snr_db={r.snr_db!r}"
        if r.error is not None:
            failed_solver = True
            print(f"row {i}: {tag}: solver failure: {r.error}", file=sys.stderr)
            continue
        status = r.oracle_status()
        if status is None:
            continue
        gap = abs(r.pout_analytic - r.estimate.p_hat)
        print(
            f"row {i}: {tag}: oracle {status} |analytic - mc| = {gap:.3g}, "
            f"3 x halfwidth = {3 * r.estimate.half_width_95:.3g}, outages = {r.estimate.outages}",
            file=sys.stderr,
        )
        failed_oracle |= status == "FAIL"
    if failed_solver:
        return EXIT_SOLVER
    if assert_oracle and failed_oracle:
        return EXIT_ORACLE
    return EXIT_OK


def run_sweep(spec: SweepSpec, jobs: int = 1, assert_oracle: bool = False) -> int:
    rows = evaluate_points(spec.points(), spec.mc, jobs, spec.T)
    _write_text(spec.output, render_rows(rows))
    return _report(rows, assert_oracle)


# ---------------------------------------------------------------------------
# cross-over table
# ---------------------------------------------------------------------------


def crossover_table(M: int, R: float, rhos: Sequence[float]) -> List[Tuple[float, Optional[float], int, str]]:
    """(rho, cross-over dB or None, multiplicity, status) per rho.

    Status is ``ok``, ``none`` for the sentinel row when no cross-over
    exists, or ``non-monotone`` when the value does not exceed the previous
    finite one.
    """
    out = []
    last = None
    for rho in rhos:
        try:
            c = analytic.crossover_snr(M, R, rho)
        except NotFoundError:
            out.append((rho, None, 0, "none"))
            continue
        status = "ok"
        if last is not None and not c.snr_db > last:
            status = "non-monotone"
        last = c.snr_db
        out.append((rho, c.snr_db, c.multiplicity, status))
    return out


def render_crossover(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rho", "crossover_snr_db", "multiplicity", "status"])
    for rho, snr, mult, status in table:
        w.writerow([repr(float(rho)), "" if snr is None else repr(float(snr)), str(mult), status])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------


_PLOT_TEMPLATE = '''"""Plot the CSV files written next to this script (requires matplotlib)."""
import csv
import os
from collections import defaultdict

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def outage_plot(name, title):
    curves = defaultdict(list)
    with open(os.path.join(HERE, name)) as fh:
        for row in csv.DictReader(fh):
            if row["pout_analytic"]:
                key = (row["scheme"], row["M"], row["rho"])
                curves[key].append((float(row["snr_db"]), float(row["pout_analytic"])))
    plt.figure()
    for (scheme, M, rho), pts in sorted(curves.items()):
        pts.sort()
        plt.semilogy([p[0] for p in pts], [p[1] for p in pts], label=f"{{scheme}} M={{M}} rho={{rho}}")
    plt.xlabel("SNR (dB)")
    plt.ylabel("outage probability")
    plt.title(title)
    plt.grid(True, which="both", alpha=0.3)
    plt.legend(fontsize="small")


def policy_plot(names, title):
    plt.figure()
    for name in names:
        with open(os.path.join(HERE, name)) as fh:
            rows = list(csv.DictReader(fh))
        plt.plot([float(r["gamma"]) for r in rows], [float(r["lambda_opt"]) for r in rows], label=name[:-4])
    plt.xlabel("feedback SNR gamma")
    plt.ylabel("lambda_opt")
    plt.title(title)
    plt.legend(fontsize="small")


{body}
plt.show()
'''


def _plot_script(body: str) -> str:
    return _PLOT_TEMPLATE.format(body=body)


def _snr_range(args, default):
    return tuple(args.snr_db) if args.snr_db is not None else default


def _tag(x: float) -> str:
    return repr(float(x)).replace(".", "p").replace("-", "m")


def figure_files(n: int, args, mc: Optional[McConfig]) -> Tuple[Dict[str, str], int]:
    """File name -> contents for figure ``n`` and the worst exit status met."""
    R = args.R if args.R is not None else 2.0
    files: Dict[str, str] = {}
    status = EXIT_OK
    jobs = args.jobs

    def sweep(name, schemes, Ms, rhos, snr, T=100, pairs=None):
        nonlocal status
        spec = SweepSpec(tuple(schemes), tuple(Ms), (R,), tuple(rhos), snr, mc, None, T)
        pts = spec.points() if pairs is None else [p for p in spec.points() if (p[0], p[1]) in pairs]
        rows = evaluate_points(pts, mc, jobs, T)
        files[name] = render_rows(rows)
        status = max(status, _report(rows, args.assert_oracle))

    if n == 1:
        rhos = tuple(args.rho) if args.rho else FIG1_RHOS
        sweep("fig1_outage.csv", [USPA, BF_IC], [2], rhos, _snr_range(args, (0.0, 40.0, 1.0)))
        files["fig1_crossover.csv"] = render_crossover(crossover_table(2, R, rhos))
        body = 'outage_plot("fig1_outage.csv", "USPA and BF-IC, M = 2")'
    elif n == 2:
        rho = args.rho[0] if args.rho else 0.999
        snr = _snr_range(args, (0.0, 50.0, 1.0))
        sweep("fig2_outage.csv", [USPA, BF_IC, BF_PERFECT], [2, 4], [rho], snr)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scheme", "M", "rho", "slope_35_45_db"])
        for scheme in (USPA, BF_IC, BF_PERFECT):
            for M in (2, 4):
                curve = analytic.outage_curve(scheme, M, R, rho, np.arange(35.0, 45.5, 1.0))
                w.writerow([scheme, str(M), repr(float(rho)), repr(analytic.diversity_slope(curve))])
        files["fig2_slopes.csv"] = buf.getvalue()
        body = 'outage_plot("fig2_outage.csv", "diversity at high feedback correlation")'
    elif n == 3:
        pairs = _parse_pairs(args.pairs) if args.pairs else FIG3_PAIRS
        grid = np.linspace(0.0, args.gamma_max, args.points)
        names = []
        for rho, snr in pairs:
            P = float(db_to_linear(snr))
            try:
                lam = [ospa.lambda_opt(2, R, P, rho, float(g)) for g in grid]
            except SOLVER_ERRORS as exc:
                print(f"figure 3 rho={rho} snr_db={snr}: solver failure: {exc}", file=sys.stderr)
                status = max(status, EXIT_SOLVER)
                continue
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["gamma", "lambda_opt"])
            for g, v in zip(grid, lam):
                w.writerow([repr(float(g)), repr(float(v))])
            name = f"fig3_rho{_tag(rho)}_snr{_tag(snr)}.csv"
            files[name] = buf.getvalue()
            names.append(name)
        body = f"policy_plot({names!r}, \"lambda_opt for M = 2\")"
    elif n == 4:
        rho = args.rho[0] if args.rho else 0.9
        snr = _snr_range(args, (0.0, 20.0, 2.0))
        sweep("fig4_outage.csv", [USPA, BF_IC, tpc.USPA_TPC, tpc.BFIC_TPC, OSPA], [2], [rho], snr)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["power_policy", "crossover_snr_db"])
        short = analytic.crossover_snr(2, R, rho).snr_db
        w.writerow(["short-term", repr(short)])
        if not args.skip_tpc_crossover:
            try:
                w.writerow(["TPC", repr(tpc.tpc_crossover_snr(2, R, rho, start_db=short))])
            except SOLVER_ERRORS as exc:
                print(f"figure 4 TPC cross-over: solver failure: {exc}", file=sys.stderr)
                status = max(status, EXIT_SOLVER)
        files["fig4_crossover.csv"] = buf.getvalue()
        body = 'outage_plot("fig4_outage.csv", "spatial and temporal power control, M = 2")'
    elif n == 5:
        rho = args.rho[0] if args.rho else 0.9
        snr = _snr_range(args, (0.0, 30.0, 2.0))
        schemes = [USPA, BF_IC] + list(CSIR_SCHEMES)
        # M = 4 carries the optimized-training curves only
        pairs = {(s, 2) for s in schemes} | {(s, 4) for s in (USPA, BF_IC, "USPA-CSIR-OPT", "BFIC-CSIR-OPT")}
        sweep("fig5_outage.csv", schemes, [2, 4], [rho], snr, T=args.T, pairs=pairs)
        body = 'outage_plot("fig5_outage.csv", "imperfect receiver CSI, T = {}")'.format(args.T)
    else:
        raise UsageError(f"figure number must be 1..5, got {n}")
    if args.plot_script:
        files[f"fig{n}_plot.py"] = _plot_script(body)
    return files, status


def _parse_pairs(items: Sequence[str]) -> List[Tuple[float, float]]:
    pairs = []
    for item in items:
        try:
            rho, snr = item.split(":")
            pairs.append((float(rho), float(snr)))
        except ValueError as exc:
            raise UsageError(f"pairs are written rho:snr_db, got {item!r}") from exc
    return pairs


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def read_config_file(path: str) -> Dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser: argparse.ArgumentParser, values: Dict[str, str]) -> None:
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, raw in values.items():
        if key in ("config", "help") or key not in actions:
            raise UsageError(f"unknown config key {key!r}")
        action = actions[key]
        conv = action.type or str
        try:
            if isinstance(action, argparse._StoreTrueAction):
                value = raw.lower() in ("1", "true", "yes", "on")
            elif action.nargs in ("+", "*") or isinstance(action.nargs, int):
                value = [conv(v) for v in raw.replace(",", " ").split()]
            else:
                value = conv(raw)
        except ValueError as exc:
            raise UsageError(f"config key {key!r}: {exc}") from exc
        defaults[key] = value
    parser.set_defaults(**defaults)


def _mc_from_args(args) -> Optional[McConfig]:
    if not args.mc_samples:
        return None
    return McConfig(args.mc_samples, args.seed, args.workers)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--mc-samples", type=int, default=0, help="Monte Carlo draws per point (0 disables)")
    p.add_argument("--seed", type=int, default=12345, help="master seed for Monte Carlo streams")
    p.add_argument("--workers", type=int, default=1, help="Monte Carlo worker threads")
    p.add_argument("--jobs", type=int, default=1, help="sweep points evaluated concurrently")
    p.add_argument("--assert-oracle", action="store_true", help="exit 4 if any row misses the 3-sigma gate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="miso-outage", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="outage over an SNR sweep, one CSV row per point")
    p.add_argument("--scheme", nargs="+", default=[BF_IC], choices=SWEEP_SCHEMES + CSIR_SCHEMES)
    p.add_argument("--M", nargs="+", type=int, default=[2])
    p.add_argument("--R", nargs="+", type=float, default=[2.0], help="target rate in nats")
    p.add_argument("--rho", nargs="+", type=float, default=[0.9])
    p.add_argument("--snr-db", nargs=3, type=float, default=[0.0, 20.0, 5.0], metavar=("START", "STOP", "STEP"))
    p.add_argument("--T", type=int, default=100, help="block length for the CSIR schemes")
    p.add_argument("--output", "-o", help="CSV path (default stdout)")
    _add_common(p)

    p = sub.add_parser("figure", help="data behind one of the five reference figures")
    p.add_argument("number", type=int, choices=range(1, 6))
    p.add_argument("--outdir", default=".")
    p.add_argument("--plot-script", action="store_true", help="also write a matplotlib script")
    p.add_argument("--R", type=float, default=None)
    p.add_argument("--rho", nargs="+", type=float, default=None, help="override the figure's rho value(s)")
    p.add_argument("--snr-db", nargs=3, type=float, default=None, metavar=("START", "STOP", "STEP"))
    p.add_argument("--pairs", nargs="+", default=None, help="figure 3 (rho:snr_db) pairs")
    p.add_argument("--gamma-max", type=float, default=10.0, help="figure 3 gamma range")
    p.add_argument("--points", type=int, default=101, help="figure 3 gamma grid size")
    p.add_argument("--T", type=int, default=100, help="figure 5 block length")
    p.add_argument("--skip-tpc-crossover", action="store_true", help="figure 4: skip the TPC cross-over search")
    _add_common(p)

    p = sub.add_parser("crossover", help="USPA / BF-IC cross-over SNR per rho")
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--rho", nargs="+", type=float, default=[0.5, 0.7, 0.9, 0.99])
    p.add_argument("--output", "-o")
    p.add_argument("--config", help="key = value file; flags override it")

    p = sub.add_parser("export-policy", help="write a lambda_opt or p(gamma) table")
    p.add_argument("kind", choices=(OSPA,) + tpc.TPC_SCHEMES)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--snr-db", type=float, default=20.0)
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--config", help="key = value file; flags override it")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    first = parser.parse_args(argv)
    if getattr(first, "config", None):
        sub = parser._subparsers._group_actions[0].choices[first.command]
        _apply_config(sub, read_config_file(first.config))
        return parser.parse_args(argv)
    return first


def _dispatch(args) -> int:
    if args.command == "sweep":
        spec = SweepSpec(
            tuple(args.scheme), tuple(args.M), tuple(args.R), tuple(args.rho), tuple(args.snr_db),
            _mc_from_args(args), args.output, args.T,
        )
        return run_sweep(spec, args.jobs, args.assert_oracle)
    if args.command == "figure":
        files, status = figure_files(args.number, args, _mc_from_args(args))
        try:
            os.makedirs(args.outdir, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"cannot create {args.outdir}: {exc}") from exc
        for name, text in files.items():
            _write_text(os.path.join(args.outdir, name), text)
        return status
    if args.command == "crossover":
        table = crossover_table(args.M, args.R, args.rho)
        for rho, _, _, st in table:
            if st == "non-monotone":
                print(f"cross-over not increasing at rho={rho!r}", file=sys.stderr)
        _write_text(args.output, render_crossover(table))
        return EXIT_OK
    if args.command == "export-policy":
        P = float(db_to_linear(args.snr_db))
        config = SystemConfig(args.M, args.R, P, args.rho)
        if args.kind == OSPA:
            policy = ospa.pout_ospa(config.M, config.R, config.P, config.rho).policy
        else:
            policy = tpc.solve_policy(args.kind, config.M, config.R, config.P, config.rho)
        try:
            policy.to_csv(args.output)
        except OSError as exc:
            raise UsageError(f"cannot write {args.output}: {exc}") from exc
        return EXIT_OK
    raise UsageError(f"unknown command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
        return _dispatch(args)
    except (UsageError, ConfigError, DomainError) as exc:
        print(f"miso-outage: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SOLVER_ERRORS as exc:
        print(f"miso-outage: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
