"""Acceptance suite: numbered criteria, one pass/fail line each.

Report lines never contain timings, so two runs print identical text as
long as every timing criterion lands on the same side of its budget.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from ..certificates import (
    bound_agm,
    bound_ogm_primary,
    check_cocoercivity_chain,
    report_agm,
    report_lc,
    report_ogm,
    report_ogm_tilde,
    report_sc_ogm,
    report_sc_ogm_tilde,
)
from ..methods import make_config, run
from ..numkit import BregmanGenerator, QuadraticNorm
from ..problems import ProblemSpec, make_problem
from ..schedules import ThetaSchedule, audit_theta, clear_caches, gamma_sc

ITERS = 500
ZETA_K_FULL = 10**6
ZETA_K_QUICK = 10**4


@dataclass
class Line:
    cid: str
    title: str
    passed: bool
    detail: str

    def render(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.cid:<4} {self.title}: {self.detail}"


@dataclass
class Suite:
    """State shared across criteria (instances and traces are reused)."""

    quick: bool = False
    mutate: Optional[str] = None
    lines: List[Line] = field(default_factory=list)
    coco: List[float] = field(default_factory=list)
    coco_count: int = 0
    _instances: Optional[list] = None
    _traces: Dict[str, list] = field(default_factory=dict)

    # ---------------------------------------------------------- instances

    def instances(self):
        """Seeded quadratics (n <= 16, alternating kappa) and log-sum-exp."""
        if self._instances is None:
            nq, nl = (10, 3) if self.quick else (20, 5)
            out = []
            for i in range(nq):
                n = 2 + (7 * i) % 15
                kappa = 10.0 if i % 2 == 0 else 1e3
                out.append(make_problem(ProblemSpec("quadratic", dim=n, seed=i, kappa=kappa)))
            for i in range(nl):
                out.append(make_problem(ProblemSpec("log_sum_exp", dim=3 + (5 * i) % 8, seed=100 + i)))
            self._instances = out
        return self._instances

    def theta(self):
        if self.mutate == "theta":
            return ThetaSchedule.custom(func=lambda k: 2.0 ** k, check=False, label="doubling")
        return None

    def traces(self, key, algorithm, last_step=False):
        if key not in self._traces:
            res = []
            for o in self.instances():
                theta = self.theta() if algorithm == "ogm" else None
                cfg = make_config(algorithm, o, theta=theta, last_step=last_step)
                tr = run(cfg, o, np.zeros(o.dim), ITERS)
                self.audit_coco(tr, o)
                res.append((o, tr))
            self._traces[key] = res
        return self._traces[key]

    def audit_coco(self, trace, oracle):
        rep = check_cocoercivity_chain(trace, oracle)
        self.coco.append(rep.extras["min_normalized_slack"])
        self.coco_count += 1

    def add(self, cid, title, passed, detail):
        self.lines.append(Line(cid, title, bool(passed), detail))


def _fmt(v):
    return f"{v:.6g}"


def _worst(reports, attr="worst_slack"):
    vals = [getattr(r, attr) for r in reports]
    vals = [v for v in vals if math.isfinite(v)]
    if not vals:
        return float("nan")
    return min(vals) if attr == "worst_slack" else max(vals)


def _violations(reports, lyap=False):
    return sum(int((r.lyap_violated if lyap else r.violated).sum()) for r in reports)


# ----------------------------------------------------------------- criteria


def c1(s: Suite):
    t0 = time.perf_counter()
    s.instances()
    reps = [report_ogm(tr, o) for o, tr in s.traces("ogm", "ogm")]
    elapsed = time.perf_counter() - t0
    bad = _violations(reps)
    fast = elapsed < 10.0
    s._ogm_reports = reps
    s.add("1", "OGM primary bound", bad == 0 and fast,
          f"{len(reps)} instances x {ITERS} iterations, {bad} violated rows, "
          f"min normalized slack {_fmt(_worst(reps))}, runtime {'within' if fast else 'over'} 10 s")


def c2(s: Suite):
    worst = 0.0
    count = 0
    for sched in (ThetaSchedule.exact(), ThetaSchedule.simple()):
        for L, R2 in ((1.0, 1.0), (3.7, 0.25), (1e3, 42.0)):
            for k in range(1, ITERS + 1):
                r = bound_agm(k, sched, L, R2) / bound_ogm_primary(k, sched, L, R2)
                worst = max(worst, abs(r - 2.0) / 2.0)
                count += 1
    s.add("2", "AGM/OGM bound ratio", worst <= 1e-14,
          f"{count} ratios, max relative deviation from 2 is {_fmt(worst)}")


def c3(s: Suite):
    reps = [report_ogm(tr, o) for o, tr in s.traces("simple_ogm", "simple_ogm")]
    bad = _violations(reps)
    s.add("3", "Simple-OGM bound", bad == 0,
          f"{len(reps)} instances, {bad} violated rows, min normalized slack {_fmt(_worst(reps))}")


def c4(s: Suite):
    exact = [report_ogm_tilde(tr, o) for o, tr in s.traces("ogm_tilde", "ogm", True)]
    simple = [report_ogm_tilde(tr, o) for o, tr in s.traces("simple_tilde", "simple_ogm", True)]
    s._tilde_reports = exact + simple
    be, bs = _violations(exact), _violations(simple)
    s.add("4", "secondary-sequence bounds", be + bs == 0,
          f"exact phi {be} violated rows (min slack {_fmt(_worst(exact))}), "
          f"simple phi {bs} violated rows (min slack {_fmt(_worst(simple))})")


def _sc_instances(s: Suite):
    out = []
    seeds = (0,) if s.quick else (0, 1)
    for kappa in (2.0, 10.0, 100.0):
        for seed in seeds:
            n = 6 + 3 * seed
            out.append(make_problem(ProblemSpec("quadratic", dim=n, seed=200 + seed, kappa=kappa)))
            Q = QuadraticNorm.diagonal(np.linspace(1.0, 4.0, n))
            out.append(make_problem(ProblemSpec("quadratic", dim=n, seed=300 + seed, kappa=kappa), Q))
    return out


def c5(s: Suite):
    prim, tilde, ratios = [], [], []
    for o in _sc_instances(s):
        tr = run(make_config("sc_ogm", o), o, np.zeros(o.dim), ITERS)
        s.audit_coco(tr, o)
        p = report_sc_ogm(tr, o)
        prim.append(p)
        tilde.append(report_sc_ogm_tilde(tr, o))
        ratios.append(p.extras["max_ratio"] - p.extras["rate"])
    s._sc_reports = prim + tilde
    bad_b = _violations(prim)
    bad_l = _violations(prim, lyap=True)
    bad_t = _violations(tilde)
    excess = max(ratios)
    s.add("5", "SC-OGM bounds and contraction",
          bad_b + bad_l + bad_t == 0 and excess <= 1e-9,
          f"{len(prim)} instances, y-bound {bad_b} / contraction {bad_l} / x-bound {bad_t} "
          f"violated rows, max ratio minus rate {_fmt(excess)}")


def _iters_to(o, algorithm, target):
    tr = run(make_config(algorithm, o), o, np.zeros(o.dim), 5000)
    gaps = np.array([o.gap(y) for y in tr.y])
    hit = np.flatnonzero(gaps <= target)
    return int(hit[0]) if hit.size else None


def c6(s: Suite):
    o = make_problem(ProblemSpec("quadratic", dim=12, seed=7, kappa=100.0))
    n_ogm = _iters_to(o, "sc_ogm", 1e-10)
    n_agm = _iters_to(o, "sc_agm", 1e-10)
    g = gamma_sc(1e4).gamma
    ratio = math.log1p(g) / math.log1p(1.0 / (math.sqrt(1e4) - 1.0))
    ok = n_ogm is not None and n_agm is not None and n_ogm < n_agm and 1.3 <= ratio <= 1.5
    s.add("6", "SC-OGM vs SC-AGM", ok,
          f"iterations to gap 1e-10 at kappa=100: SC-OGM {n_ogm}, SC-AGM {n_agm}; "
          f"rate exponent ratio at kappa=1e4 {ratio:.6f}")


def c7(s: Suite):
    agm = [report_agm(tr, o) for o, tr in s.traces("agm", "agm")]
    ogm = getattr(s, "_ogm_reports", None) or [report_ogm(tr, o) for o, tr in s.traces("ogm", "ogm")]
    sc = [r for r in s._sc_reports if r.name == "sc_ogm"]
    chains = [r for r in s._tilde_reports] + [r for r in s._sc_reports if r.name == "sc_ogm_tilde"]
    lc = []
    seeds = (0,) if s.quick else (0, 1, 2)
    for Q in (QuadraticNorm.identity(2), QuadraticNorm.diagonal([1.0, 4.0])):
        for seed in seeds:
            o = make_problem(ProblemSpec("quadratic", dim=2, seed=400 + seed, kappa=50.0), Q)
            for t in (0.5, 0.75, 1.0):
                tr = run(make_config("lc", o, t=t), o, np.zeros(2), 200)
                s.audit_coco(tr, o)
                lc.append(report_lc(tr, o, tr.config.coupling, BregmanGenerator(Q, t)))
    lcsc = []
    for kappa in (2.0, 10.0, 100.0):
        for Q in (QuadraticNorm.identity(5), QuadraticNorm.diagonal([1.0, 2.0, 3.0, 4.0, 5.0])):
            o = make_problem(ProblemSpec("quadratic", dim=5, seed=500, kappa=kappa), Q)
            tr = run(make_config("lc_sc_ogm", o), o, np.zeros(5), ITERS)
            s.audit_coco(tr, o)
            lcsc.append(report_sc_ogm(tr, o))
    ogm_init = sum(int(r.lyap[0] > r.extras["U_init"] + r.tol_lyap[0]) for r in ogm)
    groups = {
        "AGM": _violations(agm, True),
        "OGM": _violations(ogm, True) + ogm_init,
        "SC-OGM": _violations(sc, True),
        "LC": _violations(lc, True),
        "chains": _violations(chains, True),
        "LC-SC-OGM": _violations(lcsc, True),
    }
    total = sum(groups.values())
    parts = ", ".join(f"{k} {v}" for k, v in groups.items())
    s.add("7", "Lyapunov monotonicity", total == 0, f"violated steps: {parts}")


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def c8(s: Suite):
    o = make_problem(ProblemSpec("quadratic", dim=10, seed=11, kappa=1e3))
    x0 = np.zeros(o.dim)

    def ys(alg, **kw):
        return run(make_config(alg, o, **kw), o, x0, 50).y

    forms = max(
        _rel(ys("agm", form="momentum"), ys("agm", form="z")),
        _rel(ys("ogm", form="momentum"), ys("ogm", form="z")),
        _rel(ys("unified", t=0.75, form="momentum"), ys("unified", t=0.75, form="z")),
    )
    pairs = [
        (ys("unified", t=0.5, form="momentum"), ys("agm", form="momentum")),
        (ys("unified", t=0.5, form="z"), ys("agm", form="z")),
        (ys("unified", t=1.0, form="momentum"), ys("ogm", form="momentum")),
        (ys("unified", t=1.0, form="z"), ys("ogm", form="z")),
    ]
    unified = max(_rel(a, b) for a, b in pairs)
    bitwise = sum(bool(np.array_equal(a, b)) for a, b in pairs)
    s.add("8", "form equivalences", forms <= 1e-8 and unified <= 1e-12,
          f"momentum vs z max rel diff {_fmt(forms)}, unified t in {{1/2, 1}} max rel diff "
          f"{_fmt(unified)} ({bitwise}/{len(pairs)} bitwise equal)")


def c9(s: Suite):
    K = ZETA_K_QUICK if s.quick else ZETA_K_FULL
    t0 = time.perf_counter()
    a = audit_theta(K)
    elapsed = time.perf_counter() - t0
    s.add("9a", "zeta estimate", 0.636 <= a.zeta <= 0.656,
          f"K={K}, zeta {a.zeta:.10f}, residual {a.residual:.3g}")
    s.add("9b", "c_k below 1/4", a.c_first_violation is None,
          f"max c_k {a.c_max:.6f} at k={a.c_argmax}, first violation "
          f"{a.c_first_violation}, max over k>=3 {a.c_max_from3:.6f}")
    s.add("9c", "e_k decreasing and bounded", a.e_decreasing and a.decrement_bound_ok
          and math.isfinite(a.e_lower),
          f"decreasing {a.e_decreasing}, e_K {a.e_final:.6f}, limit lower bound {a.e_lower:.6f}")
    s.add("9d", "asymptotic audit runtime", elapsed < 30.0,
          f"{'within' if elapsed < 30.0 else 'over'} 30 s")


def c10(s: Suite):
    worst = min(s.coco)
    s.add("10", "cocoercivity audit", worst >= -1e-8,
          f"{s.coco_count} traces, min normalized slack {worst:.3e}")


CRITERIA: List[Callable[[Suite], None]] = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10]


def run_criteria(quick=False, mutate=None) -> Suite:
    s = Suite(quick=quick, mutate=mutate)
    for crit in CRITERIA:
        crit(s)
    return s


def run_suite(quick=False, mutate=None, replay=True) -> List[Line]:
    """Criteria 1-10, then criterion 11 by replaying them from cold caches."""
    t0 = time.perf_counter()
    first = run_criteria(quick, mutate)
    lines = list(first.lines)
    if replay:
        clear_caches()
        second = run_criteria(quick, mutate)
        same = [l.render() for l in first.lines] == [l.render() for l in second.lines]
        elapsed = time.perf_counter() - t0
        lines.append(Line("11", "determinism", same and elapsed < 300.0,
                          f"replayed report {'identical' if same else 'differs'}, "
                          f"suite runtime {'within' if elapsed < 300.0 else 'over'} 300 s"))
    return lines


def render(lines: List[Line]) -> str:
    passed = sum(l.passed for l in lines)
    body = "\n".join(l.render() for l in lines)
    return f"{body}\n{passed}/{len(lines)} criteria passed\n"
