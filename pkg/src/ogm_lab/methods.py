"""One-step transitions for the accelerated method family and a run driver.

Every stepper takes a :class:`MethodState` and returns a new one; states are
never mutated. Each step makes one gradient call at the new ``x`` and caches
it in the returned state. All gradients are preconditioned by the oracle's
norm (``Q^{-1} grad f``), which reduces to the Euclidean methods when
``Q = I``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import DivergenceError, UsageError
from .numkit import BregmanGenerator, QuadraticNorm, as_vector
from .problems import ObjectiveOracle
from .schedules import (
    CouplingSchedule,
    PhiSchedule,
    ScGamma,
    ThetaSchedule,
    gamma_sc,
)

ALGORITHMS = (
    "agm", "agm_z", "ogm", "ogm_z", "simple_ogm",
    "sc_agm", "sc_ogm", "lc", "lc_sc_ogm", "unified",
)


@dataclass(frozen=True)
class MethodState:
    """Iterates after ``k`` steps; ``grad_x`` is the gradient at ``x``."""

    k: int
    x: np.ndarray
    y: np.ndarray
    z: Optional[np.ndarray]
    y_prev: np.ndarray
    grad_x: np.ndarray
    method_tag: str
    x_tilde: Optional[np.ndarray] = None


def _freeze(*arrays):
    for a in arrays:
        if a is not None:
            a.setflags(write=False)


def init_state(oracle: ObjectiveOracle, x0, method_tag="") -> MethodState:
    x0 = as_vector(x0, oracle.dim, name="x0").copy()
    _freeze(x0)
    g = oracle.grad(x0)
    if not np.all(np.isfinite(g)):
        raise DivergenceError("non-finite gradient", 0)
    _freeze(g)
    return MethodState(k=0, x=x0, y=x0, z=x0, y_prev=x0, grad_x=g, method_tag=method_tag)


def _advance(state, oracle, x, y, z, tag):
    k = state.k + 1
    for v in (x, y, z):
        if not np.all(np.isfinite(v)):
            raise DivergenceError("non-finite iterate", k)
    g = oracle.grad(x)
    if not np.all(np.isfinite(g)):
        raise DivergenceError("non-finite gradient", k)
    _freeze(x, y, z, g)
    return MethodState(k=k, x=x, y=y, z=z, y_prev=state.y, grad_x=g, method_tag=tag)


def _direction(state, oracle):
    if not np.all(np.isfinite(state.grad_x)):
        raise DivergenceError("non-finite gradient", state.k)
    return oracle.norm.apply_inverse(state.grad_x)


def _z_from_theta(x, y, th):
    """Invert ``x = (1 - 1/theta) y + z/theta``."""
    return th * x - (th - 1.0) * y


# --------------------------------------------------------------- O(1/k^2)


def step_agm(state: MethodState, oracle: ObjectiveOracle, theta: ThetaSchedule) -> MethodState:
    """Nesterov momentum form."""
    k = state.k
    tk, tk1 = theta(k), theta(k + 1)
    d = _direction(state, oracle)
    y, x = kernels.momentum(state.x, d, state.y, 1.0 / oracle.L, (tk - 1.0) / tk1, 0.0)
    return _advance(state, oracle, x, y, _z_from_theta(x, y, tk1), "agm")


def step_agm_z(state: MethodState, oracle: ObjectiveOracle, theta: ThetaSchedule) -> MethodState:
    """Three-sequence form with ``z+ = z - (theta_k/L) Q^{-1} g``."""
    k = state.k
    tk, tk1 = theta(k), theta(k + 1)
    d = _direction(state, oracle)
    L = oracle.L
    y, z, x = kernels.couple(state.x, d, _need_z(state), 1.0 / L, 1.0, 0.0, tk / L, 1.0 / tk1)
    return _advance(state, oracle, x, y, z, "agm_z")


def step_ogm(state: MethodState, oracle: ObjectiveOracle, theta: ThetaSchedule) -> MethodState:
    """Momentum plus the correction term ``theta_k/theta_{k+1} (y_{k+1} - x_k)``."""
    k = state.k
    tk, tk1 = theta(k), theta(k + 1)
    d = _direction(state, oracle)
    y, x = kernels.momentum(state.x, d, state.y, 1.0 / oracle.L, (tk - 1.0) / tk1, tk / tk1)
    return _advance(state, oracle, x, y, _z_from_theta(x, y, tk1), "ogm")


def step_ogm_z(state: MethodState, oracle: ObjectiveOracle, theta: ThetaSchedule) -> MethodState:
    """Three-sequence form; the z-step is twice that of AGM."""
    k = state.k
    tk, tk1 = theta(k), theta(k + 1)
    d = _direction(state, oracle)
    L = oracle.L
    y, z, x = kernels.couple(state.x, d, _need_z(state), 1.0 / L, 1.0, 0.0, 2.0 * tk / L, 1.0 / tk1)
    return _advance(state, oracle, x, y, z, "ogm_z")


def step_unified(state: MethodState, oracle: ObjectiveOracle, theta: ThetaSchedule,
                 t: float) -> MethodState:
    """Momentum form of the family interpolating AGM (t = 1/2) and OGM (t = 1)."""
    t = _check_t(t)
    k = state.k
    tk, tk1 = theta(k), theta(k + 1)
    d = _direction(state, oracle)
    a = (tk - 1.0) / tk1
    b = (2.0 * t - 1.0) * (tk / tk1)
    y, x = kernels.momentum(state.x, d, state.y, 1.0 / oracle.L, a, b)
    return _advance(state, oracle, x, y, _z_from_theta(x, y, tk1), "unified")


def step_unified_z(state: MethodState, oracle: ObjectiveOracle, theta: ThetaSchedule,
                   t: float) -> MethodState:
    """z-form of the unified family, ``z+ = z - (2 t theta_k / L) Q^{-1} g``."""
    t = _check_t(t)
    k = state.k
    tk, tk1 = theta(k), theta(k + 1)
    d = _direction(state, oracle)
    L = oracle.L
    y, z, x = kernels.couple(state.x, d, _need_z(state), 1.0 / L, 1.0, 0.0,
                             (2.0 * t) * tk / L, 1.0 / tk1)
    return _advance(state, oracle, x, y, z, "unified_z")


def _check_t(t):
    t = float(t)
    if not (0.0 < t <= 1.0):
        raise UsageError(f"t must lie in (0, 1], got {t}")
    return t


def _need_z(state):
    if state.z is None:
        raise UsageError("state carries no z sequence")
    return state.z


def last_step_modify(state: MethodState, phi: PhiSchedule) -> np.ndarray:
    """``x~_k = (1 - 1/phi_k) y_k + z_k / phi_k`` for the state at step k."""
    z = _need_z(state)
    p = phi(state.k)
    return (1.0 - 1.0 / p) * state.y + z / p


def last_step_momentum(prev: MethodState, state: MethodState, theta: ThetaSchedule,
                       phi: PhiSchedule) -> np.ndarray:
    """Momentum-form expression of ``x~_{k+1}`` from states k and k+1."""
    k = prev.k
    if state.k != k + 1:
        raise UsageError("states must be consecutive")
    tk, p = theta(k), phi(k + 1)
    y1 = state.y
    return y1 + (tk - 1.0) / p * (y1 - prev.y) + tk / p * (y1 - prev.x)


# ---------------------------------------------------------- strongly convex


def _kappa(oracle, kappa=None):
    if oracle.mu <= 0.0:
        raise UsageError("strongly convex method needs mu > 0")
    return oracle.L / oracle.mu if kappa is None else float(kappa)


def step_sc_agm(state: MethodState, oracle: ObjectiveOracle, kappa: Optional[float] = None) -> MethodState:
    """Constant momentum ``(sqrt(kappa) - 1)/(sqrt(kappa) + 1)``."""
    kappa = _kappa(oracle, kappa)
    r = math.sqrt(kappa)
    beta = (r - 1.0) / (r + 1.0)
    d = _direction(state, oracle)
    y, x = kernels.momentum(state.x, d, state.y, 1.0 / oracle.L, beta, 0.0)
    z = (r + 1.0) * x - r * y
    return _advance(state, oracle, x, y, z, "sc_agm")


def sc_ogm_z(x, y, gamma: ScGamma):
    """Auxiliary ``z = ((2 gamma + 1) x - (gamma + 1) y) / gamma``."""
    g = gamma.gamma
    return ((2.0 * g + 1.0) * x - (g + 1.0) * y) / g


def step_sc_ogm(state: MethodState, oracle: ObjectiveOracle, gamma: ScGamma) -> MethodState:
    """Momentum and correction both weighted by ``1/(2 gamma + 1)``."""
    _kappa(oracle)
    beta = gamma.momentum
    d = _direction(state, oracle)
    y, x = kernels.momentum(state.x, d, state.y, 1.0 / oracle.L, beta, beta)
    return _advance(state, oracle, x, y, sc_ogm_z(x, y, gamma), "sc_ogm")


def step_lc(state: MethodState, oracle: ObjectiveOracle, coupling: CouplingSchedule,
            bregman: BregmanGenerator) -> MethodState:
    """Gradient step, closed-form mirror step, then coupling."""
    if not bregman.norm.same_as(oracle.norm):
        raise UsageError("Bregman generator and oracle use different norms")
    k = state.k
    d = _direction(state, oracle)
    a = coupling.alpha(k + 1)
    tau = coupling.tau(k + 1)
    y, z, x = kernels.couple(state.x, d, _need_z(state), 1.0 / oracle.L, 1.0, 0.0,
                             bregman.t * a, tau)
    return _advance(state, oracle, x, y, z, "lc")


def step_lc_sc_ogm(state: MethodState, oracle: ObjectiveOracle, gamma: ScGamma,
                   norm: Optional[QuadraticNorm] = None) -> MethodState:
    """Mirror-descent form of SC-OGM with constant coupling ``gamma/(2 gamma + 1)``.

    ``z+ = (z + gamma x - (gamma/mu) Q^{-1} g) / (1 + gamma)``.
    """
    if norm is not None and not norm.same_as(oracle.norm):
        raise UsageError("norm differs from the oracle's norm")
    _kappa(oracle)
    g = gamma.gamma
    d = _direction(state, oracle)
    w = 1.0 / (1.0 + g)
    y, z, x = kernels.couple(state.x, d, _need_z(state), 1.0 / oracle.L, w, g * w,
                             (g / oracle.mu) * w, gamma.lc_tau)
    return _advance(state, oracle, x, y, z, "lc_sc_ogm")


# ------------------------------------------------------------------ config


@dataclass
class MethodConfig:
    """Algorithm name plus the schedules it needs.

    Build with :func:`make_config` unless the schedules are custom.
    """

    algorithm: str
    theta: Optional[ThetaSchedule] = None
    phi: Optional[PhiSchedule] = None
    coupling: Optional[CouplingSchedule] = None
    gamma: Optional[ScGamma] = None
    bregman: Optional[BregmanGenerator] = None
    t: Optional[float] = None
    last_step: bool = False
    form: str = "z"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.algorithm!r}")
        if self.form not in ("z", "momentum"):
            raise UsageError(f"unknown form {self.form!r}")
        if self.t is not None:
            _check_t(self.t)
        need = {
            "agm": ("theta",), "agm_z": ("theta",), "ogm": ("theta",),
            "ogm_z": ("theta",), "simple_ogm": ("theta",), "unified": ("theta", "t"),
            "sc_agm": (), "sc_ogm": ("gamma",), "lc": ("coupling", "bregman"),
            "lc_sc_ogm": ("gamma",),
        }[self.algorithm]
        for attr in need:
            if getattr(self, attr) is None:
                raise UsageError(f"{self.algorithm} needs {attr}")
        if self.last_step and self.phi is None:
            raise UsageError("last_step needs a phi schedule")
        if self.last_step and self.algorithm in ("sc_agm", "sc_ogm", "lc_sc_ogm"):
            raise UsageError("last-step modification applies to the O(1/k^2) methods only")


def make_config(algorithm: str, oracle: ObjectiveOracle, *, theta=None, t: Optional[float] = None,
                last_step=False, form: Optional[str] = None, mode="ogm") -> MethodConfig:
    """Assemble a :class:`MethodConfig` with default schedules.

    ``theta`` may be a :class:`ThetaSchedule` or one of ``"exact"``,
    ``"simple"``. Simple-OGM always uses the simple theta and phi.
    """
    if algorithm not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {algorithm!r}")
    if isinstance(theta, str) or theta is None:
        variant = "simple" if algorithm == "simple_ogm" else (theta or "exact")
        theta = ThetaSchedule(variant)
    phi = None
    if last_step:
        phi = PhiSchedule("simple" if theta.variant == "simple" else "exact", theta)
    if form is None:
        form = "momentum" if algorithm in ("agm", "ogm", "unified", "sc_agm", "sc_ogm") else "z"
    cfg = dict(algorithm=algorithm, last_step=last_step, form=form)
    if algorithm in ("sc_agm", "sc_ogm", "lc_sc_ogm"):
        if algorithm != "sc_agm":
            cfg["gamma"] = gamma_sc(_kappa(oracle))
        else:
            _kappa(oracle)
        return MethodConfig(**cfg)
    cfg.update(theta=theta, phi=phi)
    if algorithm in ("unified", "lc"):
        cfg["t"] = 1.0 if t is None else float(t)
    if algorithm == "lc":
        cfg["coupling"] = CouplingSchedule(theta, oracle.L, mode, phi=phi)
        cfg["bregman"] = BregmanGenerator(oracle.norm, cfg["t"])
    return MethodConfig(**cfg)


def stepper(config: MethodConfig) -> Callable[[MethodState, ObjectiveOracle], MethodState]:
    """Bind the schedules of ``config`` into a two-argument step function."""
    a = config.algorithm
    th = config.theta
    if a in ("agm", "agm_z"):
        fn = step_agm if (a == "agm" and config.form == "momentum") else step_agm_z
        return lambda s, o: fn(s, o, th)
    if a in ("ogm", "ogm_z", "simple_ogm"):
        fn = step_ogm if (a == "ogm" and config.form == "momentum") else step_ogm_z
        return lambda s, o: fn(s, o, th)
    if a == "unified":
        fn = step_unified if config.form == "momentum" else step_unified_z
        return lambda s, o: fn(s, o, th, config.t)
    if a == "sc_agm":
        return lambda s, o: step_sc_agm(s, o)
    if a == "sc_ogm":
        return lambda s, o: step_sc_ogm(s, o, config.gamma)
    if a == "lc":
        return lambda s, o: step_lc(s, o, config.coupling, config.bregman)
    return lambda s, o: step_lc_sc_ogm(s, o, config.gamma)


def _validate(config: MethodConfig, iters: int):
    if config.coupling is not None:
        config.coupling.validate(iters + 1)
    elif config.theta is not None:
        config.theta.validate(iters + 1)
    if config.phi is not None:
        config.phi.validate(iters)


# ------------------------------------------------------------------- traces


@dataclass
class Trace:
    """Iterates and function values for k = 0..K (rows are iterations)."""

    method: str
    problem: str
    config: Optional[MethodConfig]
    L: float
    mu: float
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    grad_x: np.ndarray
    f_x: np.ndarray
    f_y: np.ndarray
    x_tilde: Optional[np.ndarray] = None
    grad_xtilde: Optional[np.ndarray] = None
    f_xtilde: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return self.x.shape[0] - 1

    def __len__(self):
        return self.x.shape[0]


class TraceRecorder:
    """Collects every state; evaluates ``x~_k`` when a phi schedule is given."""

    def __init__(self, oracle: ObjectiveOracle, phi: Optional[PhiSchedule] = None):
        self.oracle = oracle
        self.phi = phi
        self.states = []
        self._xt, self._gt, self._ft = [], [], []

    def record(self, state: MethodState):
        self.states.append(state)
        if self.phi is not None:
            xt = last_step_modify(state, self.phi)
            self._xt.append(xt)
            self._gt.append(self.oracle.grad(xt))
            self._ft.append(self.oracle.f(xt))

    def __call__(self, state):
        self.record(state)

    def trace(self, config: Optional[MethodConfig], method: str) -> Trace:
        o = self.oracle
        st = self.states
        tr = Trace(
            method=method,
            problem=o.name,
            config=config,
            L=o.L,
            mu=o.mu,
            x=np.array([s.x for s in st]),
            y=np.array([s.y for s in st]),
            z=np.array([s.z for s in st]),
            grad_x=np.array([s.grad_x for s in st]),
            f_x=np.array([o.f(s.x) for s in st]),
            f_y=np.array([o.f(s.y) for s in st]),
        )
        if self.phi is not None:
            tr.x_tilde = np.array(self._xt)
            tr.grad_xtilde = np.array(self._gt)
            tr.f_xtilde = np.array(self._ft)
        return tr


def run(config: MethodConfig, oracle: ObjectiveOracle, x0, iters: int,
        recorder: Optional[TraceRecorder] = None) -> Trace:
    """Iterate the configured method ``iters`` times from ``x0``.

    On divergence the raised :class:`DivergenceError` carries the partial
    trace in its ``trace`` attribute.
    """
    iters = int(iters)
    if iters < 1:
        raise UsageError("iters must be >= 1")
    _validate(config, iters)
    recorder = recorder or TraceRecorder(oracle, config.phi if config.last_step else None)
    step = stepper(config)
    state = init_state(oracle, x0, config.algorithm)
    recorder.record(state)
    # overflow is reported through DivergenceError, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            for _ in range(iters):
                state = step(state, oracle)
                recorder.record(state)
        except DivergenceError as exc:
            exc.trace = recorder.trace(config, config.algorithm) if recorder.states else None
            raise
        return recorder.trace(config, config.algorithm)
