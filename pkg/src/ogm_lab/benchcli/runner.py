"""Execute configured runs and write their output files."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..certificates import certify, tolerance_overrides
from ..errors import CertificateUnavailableError, ConfigError, DivergenceError, OgmLabError
from ..methods import make_config, run
from ..numkit import QuadraticNorm
from ..problems import make_problem
from .config import ExperimentConfig, RunSpec
from .plot import emit_plot
from .tables import Table, cert_table, format_float, trace_table

STATUS_OK = "ok"
STATUS_VIOLATION = "violation"
STATUS_DIVERGENCE = "divergence"
STATUS_ERROR = "error"

# a gap this many times the initial scale counts as divergence
BLOWUP_FACTOR = 1e8


@dataclass
class RunResult:
    name: str
    status: str
    messages: List[str] = field(default_factory=list)
    violations: List[Tuple[str, int]] = field(default_factory=list)
    trace: Optional[Table] = None
    cert: Optional[Table] = None


def thread_count() -> int:
    raw = os.environ.get("OGM_LAB_THREADS")
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"OGM_LAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"OGM_LAB_THREADS must be a positive integer, got {raw!r}")
    return n


def build_oracle(spec: RunSpec):
    norm = None
    if spec.norm_diag is not None:
        norm = QuadraticNorm.diagonal(spec.norm_diag)
    elif spec.problem.kind == "quadratic":
        norm = QuadraticNorm.identity(spec.problem.dim)
    oracle = make_problem(spec.problem, norm)
    if spec.L_scale != 1.0:
        oracle = oracle.with_L(oracle.L * spec.L_scale)
    return oracle


def divergence_index(gaps, oracle, x0) -> Optional[int]:
    """First k whose gap exceeds ``BLOWUP_FACTOR`` times the starting scale."""
    ref = oracle.require_reference()
    R2 = oracle.norm.primal(np.asarray(x0) - np.asarray(ref.x)) ** 2
    scale = max(abs(float(gaps[0])), oracle.L * R2, np.finfo(float).tiny)
    hit = np.flatnonzero(~(gaps <= BLOWUP_FACTOR * scale))
    return int(hit[0]) if hit.size else None


def _meta(spec: RunSpec, oracle) -> Dict[str, str]:
    ref = oracle.reference
    return {
        "run": spec.name,
        "method": spec.method,
        "problem": oracle.name,
        "iterations": str(spec.iterations),
        "seed": str(spec.problem.seed),
        "L": format_float(oracle.L),
        "mu": format_float(oracle.mu),
        "reference_residual": format_float(ref.residual) if ref is not None else "nan",
    }


def execute(spec: RunSpec, tolerances=None) -> RunResult:
    """Run one spec in memory; no files are touched."""
    try:
        oracle = build_oracle(spec)
        config = make_config(spec.method, oracle, theta=spec.theta, t=spec.t,
                             last_step=spec.last_step, form=spec.form, mode=spec.mode)
        x0 = np.zeros(oracle.dim) if spec.x0 is None else np.asarray(spec.x0, dtype=float)
        trace = run(config, oracle, x0, spec.iterations)
    except DivergenceError as exc:
        return RunResult(spec.name, STATUS_DIVERGENCE, [f"{spec.name}: diverged at k={exc.k}"],
                         [(spec.name, int(exc.k))])
    except OgmLabError as exc:
        return RunResult(spec.name, STATUS_ERROR, [f"{spec.name}: {exc}"])
    try:
        with tolerance_overrides(**(tolerances or {})):
            reports = certify(trace, oracle)
    except CertificateUnavailableError as exc:
        return RunResult(spec.name, STATUS_ERROR, [f"{spec.name}: {exc}"])
    N = oracle.norm
    extra = {
        "_grad_dual_norm": np.array([N.dual(g) for g in trace.grad_x]),
        "_gap_y": np.array([oracle.gap(y) for y in trace.y]),
    }
    if trace.x_tilde is not None:
        extra["_gap_xtilde"] = np.array([oracle.gap(x) for x in trace.x_tilde])
    meta = _meta(spec, oracle)
    blown = divergence_index(extra["_gap_y"], oracle, x0)
    table = trace_table(trace, {**reports, **extra}, meta)
    cert = cert_table(reports["primary"], {**meta, "certificate": reports["primary"].name})
    result = RunResult(spec.name, STATUS_OK, trace=table, cert=cert)
    if blown is not None:
        result.status = STATUS_DIVERGENCE
        result.violations.append((spec.name, blown))
        result.messages.append(f"{spec.name}: diverged at k={blown}")
    for key in sorted(reports):
        rep = reports[key]
        k = rep.first_violation
        if k is not None:
            if result.status == STATUS_OK:
                result.status = STATUS_VIOLATION
            result.violations.append((spec.name, k))
            result.messages.append(f"{spec.name}: {key} certificate ({rep.name}) violated at k={k}")
    return result


def write_outputs(result: RunResult, spec: RunSpec, out_dir: Path, plots: bool):
    if result.trace is None:
        return
    prefix = out_dir / spec.output
    result.trace.write(f"{prefix}.trace.csv")
    result.cert.write(f"{prefix}.cert.csv")
    if plots:
        emit_plot(result.trace, f"{prefix}.svg", title=f"{spec.name}: {spec.method}")


def run_experiment(config: ExperimentConfig, out_dir, plots: Optional[bool] = None,
                   threads: Optional[int] = None) -> List[RunResult]:
    """Execute every run, write its files, return results sorted by name."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plots = config.plots if plots is None else plots
    threads = thread_count() if threads is None else threads

    def work(spec):
        res = execute(spec, config.tolerances)
        write_outputs(res, spec, out_dir, plots)
        return res

    if threads == 1 or len(config.runs) == 1:
        results = [work(s) for s in config.runs]
    else:
        with ThreadPoolExecutor(max_workers=min(threads, len(config.runs))) as pool:
            results = list(pool.map(work, config.runs))
    return sorted(results, key=lambda r: r.name)
