"""Command-line entry point ``ssflab``.

Every subcommand reads a scenario file, runs its checks and writes
``results.csv`` plus ``manifest.txt`` (sha256 of every written file) into the
output directory. Exit status: 0 if every check is within tolerance, 1 if any
``rel_err`` exceeds its tolerance, 2 on input errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .exceptions import SSFError
from .harness import (
    Scenario,
    build_pair,
    run_eta_cauchy,
    run_exponential_convergence,
    run_polynomial_convergence,
    run_unbounded_demo,
    scenario_projections,
    schwartz_functions,
)
from .linalg import op_norm
from .scenario import parse_scenario
from .shift import (
    VerificationReport,
    eta_positivity_and_support,
    koplienko_eta,
    krein_xi,
    verify_exponential_formula,
    verify_krein_formula,
    verify_polynomial_formula,
    verify_schwartz_formula,
)
from .wvn import offdiag_limit, wvn_pair_projection

__all__ = ["RunConfig", "CheckResult", "SUBCOMMANDS", "dispatch", "emit_outputs", "main"]

COLUMNS = (
    "scenario_id", "check", "param", "lhs_re", "lhs_im",
    "rhs_re", "rhs_im", "abs_err", "rel_err", "runtime_ms",
)
DEFAULT_TOLERANCES = {
    "verify-poly": 1e-10,
    "verify-exp": 1e-8,
    "verify-schwartz": 1e-6,
    "eta": 1e-12,
    "xi": 1e-10,
    "wvn": 0.0,
    "converge": 1e-12,
}
SUBCOMMANDS = tuple(DEFAULT_TOLERANCES)
DUAL_PATH_TOL = 1e-7
CAUCHY_SLACK = 0.1
DEMO_REL_TOL = 1e-7
REL_FLOOR = 1e-300


@dataclass(frozen=True)
class RunConfig:
    scenario_path: Path
    output_dir: Path
    subcommand: str
    overrides: tuple = ()
    s_nodes: Optional[int] = None
    tolerance: Optional[float] = None
    quiet: bool = False
    timing: bool = False


@dataclass(frozen=True)
class CheckResult:
    """One results row.

    Equality checks compare ``lhs`` with ``rhs``. Bound checks store the
    measured value as ``lhs`` and the limit as ``rhs``; their ``abs_err`` is the
    excess over the limit and their tolerance is zero.
    """

    scenario_id: str
    check: str
    param: str
    lhs: complex
    rhs: complex
    abs_err: float
    rel_err: float
    runtime_ms: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.rel_err <= self.tolerance

    def csv_fields(self) -> list:
        vals = (self.lhs.real, self.lhs.imag, self.rhs.real, self.rhs.imag,
                self.abs_err, self.rel_err, self.runtime_ms)
        return [self.scenario_id, self.check, self.param, *(repr(float(v)) for v in vals)]


class _Collector:
    def __init__(self, scenario_id: str, tolerance: float, timing: bool):
        self.scenario_id = scenario_id
        self.tolerance = tolerance
        self.timing = timing
        self.rows: List[CheckResult] = []

    def _ms(self, value: float) -> float:
        return float(value) if self.timing else 0.0

    def report(self, check: str, param: str, rep: VerificationReport, tolerance=None):
        self.rows.append(CheckResult(
            self.scenario_id, check, param, rep.lhs, rep.rhs, rep.abs_err, rep.rel_err,
            self._ms(rep.metadata.get("runtime_ms", 0.0)),
            self.tolerance if tolerance is None else tolerance,
        ))

    def equal(self, check: str, param: str, lhs, rhs, runtime_ms=0.0, tolerance=None):
        self.report(check, param, VerificationReport.compare(lhs, rhs, runtime_ms=runtime_ms), tolerance)

    def bound(self, check: str, param: str, measured: float, limit: float, runtime_ms=0.0):
        """``measured <= limit``; use negated values for lower bounds."""
        excess = max(0.0, float(measured) - float(limit))
        rel = excess / max(abs(float(limit)), REL_FLOOR)
        self.rows.append(CheckResult(
            self.scenario_id, check, param, complex(measured), complex(limit),
            excess, rel, self._ms(runtime_ms), 0.0,
        ))


def _fmt_param(name: str, value) -> str:
    return f"{name}={value:g}" if isinstance(value, float) else f"{name}={value}"


# -- subcommands ---------------------------------------------------------------------


def _run_verify_poly(sc: Scenario, out: _Collector, files: dict):
    pair = build_pair(sc)
    eta = koplienko_eta(pair, sc.s_nodes)
    for p in sc.polynomial_specs():
        out.report("koplienko_poly", p.describe(), verify_polynomial_formula(pair, p, sc.s_nodes, eta=eta))


def _run_verify_exp(sc: Scenario, out: _Collector, files: dict):
    pair = build_pair(sc)
    eta = koplienko_eta(pair, sc.s_nodes)
    for t in sc.t_values:
        out.report("koplienko_exp", _fmt_param("t", t), verify_exponential_formula(pair, t, sc.s_nodes, eta=eta))


def _run_verify_schwartz(sc: Scenario, out: _Collector, files: dict):
    pair = build_pair(sc)
    eta = koplienko_eta(pair, sc.s_nodes)
    for f in schwartz_functions(sc):
        rep = verify_schwartz_formula(pair, f, sc.s_nodes, eta=eta)
        out.report("koplienko_schwartz", f.describe(), rep)
        if f.closed_form is not None:
            out.equal("schwartz_dual_path", f.describe(), rep.lhs, rep.metadata["lhs_fourier"],
                      tolerance=DUAL_PATH_TOL)


def _run_eta(sc: Scenario, out: _Collector, files: dict):
    pair = build_pair(sc)
    start = time.perf_counter()
    eta = koplienko_eta(pair, sc.s_nodes)
    ms = 1e3 * (time.perf_counter() - start)
    hs2 = pair.hs_norm_V**2
    param = _fmt_param("s_nodes", sc.s_nodes)
    out.equal("eta_norm_identity", param, eta.integral(), 0.5 * hs2, runtime_ms=ms)
    info = eta_positivity_and_support(eta, pair)
    # lower bound min(eta) >= -1e-10 ||V||^2, stored negated
    out.bound("eta_positivity", param, -info["min_value"], 1e-10 * hs2)
    out.bound("eta_support", param, 0.0 if info["support_ok"] else 1.0, 0.0)
    files["eta.dat"] = eta.to_table("eta")


def _run_xi(sc: Scenario, out: _Collector, files: dict):
    pair = build_pair(sc)
    xi = krein_xi(pair)
    out.equal("xi_trace", "p=lambda", xi.integral(), np.trace(pair.V.entries))
    for p in sc.polynomial_specs():
        out.report("krein_poly", p.describe(), verify_krein_formula(pair, p, xi=xi))
    files["xi.dat"] = xi.to_table("xi")


def _run_wvn(sc: Scenario, out: _Collector, files: dict):
    pair = build_pair(sc)
    h0_norm = op_norm(pair.H0)
    for eps in sc.epsilon_schedule:
        start = time.perf_counter()
        basis = wvn_pair_projection(pair, eps, sc.T, n_slices=sc.slice_count, t_grid=sc.t_grid)
        ms = 1e3 * (time.perf_counter() - start)
        d = basis.diagnostics
        param = _fmt_param("eps", eps)
        resid = float(np.max(d["vector_residuals"])) if len(d["vector_residuals"]) else 0.0
        out.bound("wvn_vector_residual", param, resid, eps, runtime_ms=ms)
        out.bound("wvn_offdiag_H0", param, d["offdiag_A"], eps)
        out.bound("wvn_offdiag_expH0", param, d["offdiag_expA"], eps)
        out.bound("wvn_offdiag_V", param, d["offdiag_V"], 2 * eps)
        out.bound("wvn_offdiag_H", param, d["offdiag_H"], 3 * eps)
        out.bound("wvn_rank", param, basis.rank, float(d["n"]) * d["L"])
        if basis.rank:
            out.bound("wvn_offdiag_bound", param, d["offdiag_A"], offdiag_limit(basis, h0_norm))


def _trend_rows(table, out: _Collector, check: str, skip=()):
    for q in table.quantities():
        if q in skip:
            continue
        series = table.series(q)
        out.bound(check, q, series[-1], series[0])


def _run_unbounded(sc: Scenario, out: _Collector, files: dict):
    demo = run_unbounded_demo(sc)
    files["unbounded.csv"] = demo.to_csv()
    for r in demo.rows:
        if r.quantity_name != "v_hs_tail":
            out.bound("unbounded_demo", f"dim={r.rank}:{r.quantity_name}", r.value, DEMO_REL_TOL)


def _run_converge(sc: Scenario, out: _Collector, files: dict):
    """Compressed-trace runs over the schedule, or the unbounded emulation when ``demo_dims`` is set."""
    if sc.demo_dims:
        return _run_unbounded(sc, out, files)
    pair = build_pair(sc)
    projections = scenario_projections(sc, pair)
    poly = run_polynomial_convergence(sc, pair, projections)
    expo = run_exponential_convergence(sc, pair, projections)
    tables = [poly, expo]
    _trend_rows(poly, out, "trend_poly")
    _trend_rows(expo, out, "trend_exp")
    if len(sc.epsilon_schedule) >= 2:
        cauchy = run_eta_cauchy(sc, pair, projections)
        tables.append(cauchy)
        steps = {}
        for r in cauchy.rows:
            steps.setdefault(r.step_index, {})[r.quantity_name] = r.value
        for step, q in sorted(steps.items()):
            param = _fmt_param("step", step)
            out.equal("eta_n_norm_identity", param, q["eta_l1_norm"], q["half_hs_sq"])
            if "eta_cauchy_diff" in q:
                out.bound("eta_cauchy", param, q["eta_cauchy_diff"], (1 + CAUCHY_SLACK) * q["eta_cauchy_bound"])
    merged = tables[0]
    for t in tables[1:]:
        merged = merged.extend(t)
    files["convergence.csv"] = merged.to_csv()


_RUNNERS = {
    "verify-poly": _run_verify_poly,
    "verify-exp": _run_verify_exp,
    "verify-schwartz": _run_verify_schwartz,
    "eta": _run_eta,
    "xi": _run_xi,
    "wvn": _run_wvn,
    "converge": _run_converge,
}


# -- outputs -------------------------------------------------------------------------


def results_csv(results: Sequence[CheckResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in results:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def emit_outputs(results: Sequence[CheckResult], output_dir, extra_files: Optional[Dict[str, str]] = None):
    """Write ``results.csv``, the extra files and ``manifest.txt``.

    Returns the manifest as a list of ``(file name, sha256 hex)``. Nothing is
    written when ``results`` is empty.
    """
    if not results:
        raise ValueError("no results to write")
    contents = {"results.csv": results_csv(results)}
    contents.update(extra_files or {})
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for name in sorted(contents):
        data = contents[name].encode("utf-8")
        (out / name).write_bytes(data)
        manifest.append((name, hashlib.sha256(data).hexdigest()))
    text = "".join(f"{digest}  {name}\n" for name, digest in manifest)
    (out / "manifest.txt").write_text(text, encoding="utf-8")
    return manifest


def dispatch(cfg: RunConfig) -> int:
    """Run one subcommand; returns the process exit code."""
    try:
        if cfg.subcommand not in _RUNNERS:
            raise ValueError(f"unknown subcommand {cfg.subcommand!r}")
        sc = parse_scenario(cfg.scenario_path, cfg.overrides)
        if cfg.s_nodes is not None:
            if cfg.s_nodes < 1:
                raise ValueError("--snodes must be >= 1")
            sc = replace(sc, s_nodes=cfg.s_nodes)
        tol = cfg.tolerance if cfg.tolerance is not None else DEFAULT_TOLERANCES[cfg.subcommand]
        if not (tol >= 0 and math.isfinite(tol)):
            raise ValueError("--tolerance must be a nonnegative number")
        out = _Collector(sc.scenario_id, tol, cfg.timing)
        files: Dict[str, str] = {}
        _RUNNERS[cfg.subcommand](sc, out, files)
        emit_outputs(out.rows, cfg.output_dir, files)
    except (OSError, SSFError, ValueError) as exc:
        print(f"ssflab: error: {exc}", file=sys.stderr)
        return 2
    failed = [r for r in out.rows if not r.passed]
    if not cfg.quiet:
        for r in out.rows:
            status = "PASS" if r.passed else "FAIL"
            print(f"{status}  {r.check:<22} {r.param:<40} rel_err={r.rel_err:.3e} (tol {r.tolerance:g})")
        print(f"{len(out.rows) - len(failed)}/{len(out.rows)} checks passed; outputs in {cfg.output_dir}")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssflab", description="Spectral shift function experiments.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, type=Path, help="scenario TOML file")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--snodes", type=int, help="override s_nodes")
        p.add_argument("--tolerance", type=float, help="override the rel_err tolerance of equality checks")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a scenario key (TOML literal value, dotted keys for tables)")
        p.add_argument("--quiet", action="store_true")
        p.add_argument("--timing", action="store_true", help="record wall-clock runtime_ms (breaks byte-identical reruns)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        scenario_path=args.scenario,
        output_dir=args.out,
        subcommand=args.subcommand,
        overrides=tuple(args.overrides),
        s_nodes=args.snodes,
        tolerance=args.tolerance,
        quiet=args.quiet,
        timing=args.timing,
    )
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
