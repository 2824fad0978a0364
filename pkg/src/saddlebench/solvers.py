"""Optimistic mirror descent ascent engine.

One generic two-half-step update, realized in closed form for the two
regularizers: squared-Euclidean (projected optimistic gradient descent
ascent) and negative entropy on simplices (optimistic multiplicative
weights).  The entropy path works in log space with a max-subtraction
shift, so weight collapse on coordinates outside the equilibrium support
underflows harmlessly instead of breaking the run.

Divergence (non-finite iterates, or an entropy exponent beyond +-700) is
recorded on the trajectory rather than raised, because the experiments
deliberately run step sizes past the stability threshold.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigMismatch, InfeasiblePoint, MissingSecondary, NumericalOverflow
from .geometry import (
    CurvedRegion,
    Regularizer,
    Simplex,
    contains,
    project_many,
)
from .problems import JointPoint, MatrixGame, Problem, smoothness

EXP_OVERFLOW_LIMIT = 700.0
INITIAL_FEAS_TOL = 1e-9


@dataclass
class SolverConfig:
    regularizer: Regularizer
    eta: float
    steps: int
    initial: JointPoint
    record_secondary: bool = True

    def __post_init__(self):
        if self.eta <= 0:
            raise ConfigMismatch("step size must be positive")
        if self.steps < 1:
            raise ConfigMismatch("need at least one step")


@dataclass
class Trajectory:
    """Recorded iterates: z_t for t = 0..last and (optionally) the secondary
    iterates hat z_t for t = 1..last+1 (hat_xs[i] holds hat z_{i+1})."""

    xs: np.ndarray
    ys: np.ndarray
    hat_xs: np.ndarray | None
    hat_ys: np.ndarray | None
    config: SolverConfig
    diverged_at: int | None = None

    @property
    def last_t(self) -> int:
        return len(self.xs) - 1

    def z(self, t: int) -> JointPoint:
        return JointPoint(self.xs[t], self.ys[t])

    def z_hat(self, t: int) -> JointPoint:
        if self.hat_xs is None:
            raise MissingSecondary("secondary iterates were not recorded")
        if t < 1:
            raise IndexError("hat iterates start at t = 1")
        return JointPoint(self.hat_xs[t - 1], self.hat_ys[t - 1])


def _validate(problem: Problem, config: SolverConfig) -> None:
    if config.regularizer is Regularizer.ENTROPY:
        if not (isinstance(problem.x_set, Simplex) and isinstance(problem.y_set, Simplex)):
            raise ConfigMismatch("entropy regularizer needs simplex feasible sets")
        if np.any(config.initial.x <= 0) or np.any(config.initial.y <= 0):
            raise InfeasiblePoint("entropy runs need a strictly positive initial point")
    if not (
        contains(problem.x_set, config.initial.x, INITIAL_FEAS_TOL)
        and contains(problem.y_set, config.initial.y, INITIAL_FEAS_TOL)
    ):
        raise InfeasiblePoint("initial point is outside the feasible set")
    if config.regularizer is Regularizer.ENTROPY and isinstance(problem, MatrixGame):
        threshold = 0.125
    else:
        threshold = 1.0 / (8.0 * smoothness(problem, "l2"))
    if config.eta > threshold + 1e-12:
        warnings.warn(
            f"step size {config.eta} exceeds the analyzed threshold {threshold:.6g}; "
            "the run may diverge",
            RuntimeWarning,
            stacklevel=3,
        )


def _euclidean_half_step(problem, eta, hx, hy, gx, gy):
    px = project_many(problem.x_set, (hx - eta * gx)[None, :])[0]
    py = project_many(problem.y_set, (hy - eta * gy)[None, :])[0]
    return px, py


def _entropy_half_step(eta, lhx, lhy, fx, fy):
    # multiplicative update z ∝ ẑ exp(-eta F) per block; F's y-block is
    # -grad_y f, so this ascends in y exactly as the four update displays
    ax = lhx - eta * fx
    ay = lhy - eta * fy
    ax -= ax.max()
    ay -= ay.max()
    lx = ax - np.log(np.exp(ax).sum())
    ly = ay - np.log(np.exp(ay).sum())
    return lx, ly


def omd_step(
    problem: Problem, config: SolverConfig, z_prev: JointPoint, z_hat: JointPoint
) -> tuple[JointPoint, JointPoint]:
    """One full optimistic step from (z_{t-1}, hat z_t): returns (z_t, hat z_{t+1}).

    z_t      = argmin_z eta <z, F(z_{t-1})> + D(z, hat z_t)
    hat z_{t+1} = argmin_z eta <z, F(z_t)>     + D(z, hat z_t)
    """
    eta = config.eta
    gx_prev, gyneg_prev = problem.field(z_prev.x, z_prev.y)
    if config.regularizer is Regularizer.EUCLIDEAN:
        x_t, y_t = _euclidean_half_step(problem, eta, z_hat.x, z_hat.y, gx_prev, gyneg_prev)
        gx, gyneg = problem.field(x_t, y_t)
        hx, hy = _euclidean_half_step(problem, eta, z_hat.x, z_hat.y, gx, gyneg)
        return JointPoint(x_t, y_t), JointPoint(hx, hy)
    for g in (gx_prev, gyneg_prev):
        if np.any(np.abs(eta * g) > EXP_OVERFLOW_LIMIT):
            raise NumericalOverflow("entropy exponent exceeds 700 in magnitude")
    lhx = np.log(z_hat.x)
    lhy = np.log(z_hat.y)
    lx, ly = _entropy_half_step(eta, lhx, lhy, gx_prev, gyneg_prev)
    x_t, y_t = np.exp(lx), np.exp(ly)
    gx, gyneg = problem.field(x_t, y_t)
    if np.any(np.abs(eta * gx) > EXP_OVERFLOW_LIMIT) or np.any(np.abs(eta * gyneg) > EXP_OVERFLOW_LIMIT):
        raise NumericalOverflow("entropy exponent exceeds 700 in magnitude")
    lhx2, lhy2 = _entropy_half_step(eta, lhx, lhy, gx, gyneg)
    return JointPoint(x_t, y_t), JointPoint(np.exp(lhx2), np.exp(lhy2))


def run(problem: Problem, config: SolverConfig) -> Trajectory:
    """Run T optimistic steps from z_0 = hat z_1 = config.initial."""
    _validate(problem, config)
    T = config.steps
    eta = config.eta
    M = problem.x_set.dim
    N = problem.y_set.dim
    xs = np.empty((T + 1, M))
    ys = np.empty((T + 1, N))
    record_hat = config.record_secondary
    hat_xs = np.empty((T + 1, M)) if record_hat else None
    hat_ys = np.empty((T + 1, N)) if record_hat else None

    x = np.asarray(config.initial.x, dtype=float).copy()
    y = np.asarray(config.initial.y, dtype=float).copy()
    xs[0], ys[0] = x, y
    if record_hat:
        hat_xs[0], hat_ys[0] = x, y  # hat z_1 = z_0
    diverged_at = None
    entropy = config.regularizer is Regularizer.ENTROPY

    if entropy:
        lhx = np.log(x)
        lhy = np.log(y)
        gx, gyneg = problem.field(x, y)
        for t in range(1, T + 1):
            if np.any(np.abs(eta * gx) > EXP_OVERFLOW_LIMIT) or np.any(np.abs(eta * gyneg) > EXP_OVERFLOW_LIMIT):
                diverged_at = t
                break
            lx, ly = _entropy_half_step(eta, lhx, lhy, gx, gyneg)
            x, y = np.exp(lx), np.exp(ly)
            gx, gyneg = problem.field(x, y)
            if np.any(np.abs(eta * gx) > EXP_OVERFLOW_LIMIT) or np.any(np.abs(eta * gyneg) > EXP_OVERFLOW_LIMIT):
                diverged_at = t
                break
            lhx, lhy = _entropy_half_step(eta, lhx, lhy, gx, gyneg)
            if not (
                np.isfinite(x).all()
                and np.isfinite(y).all()
                and np.isfinite(lhx).all()
                and np.isfinite(lhy).all()
            ):
                diverged_at = t
                break
            xs[t], ys[t] = x, y
            if record_hat:
                hat_xs[t], hat_ys[t] = np.exp(lhx), np.exp(lhy)
    else:
        proj_x = _fast_projector(problem.x_set)
        proj_y = _fast_projector(problem.y_set)
        field = problem.field
        gx, gyneg = field(x, y)
        hx, hy = x.copy(), y.copy()
        for t in range(1, T + 1):
            x = proj_x(hx - eta * gx)
            y = proj_y(hy - eta * gyneg)
            gx, gyneg = field(x, y)
            hx = proj_x(hx - eta * gx)
            hy = proj_y(hy - eta * gyneg)
            if not (
                np.isfinite(x).all() and np.isfinite(y).all() and np.isfinite(hx).all() and np.isfinite(hy).all()
            ):
                diverged_at = t
                break
            xs[t], ys[t] = x, y
            if record_hat:
                hat_xs[t], hat_ys[t] = hx, hy

    last = (diverged_at - 1) if diverged_at is not None else T
    xs = xs[: last + 1]
    ys = ys[: last + 1]
    if record_hat:
        hat_xs = hat_xs[: last + 1]
        hat_ys = hat_ys[: last + 1]
    return Trajectory(xs, ys, hat_xs, hat_ys, config, diverged_at)


def _fast_projector(s):
    """Single-point projection closure avoiding per-call dispatch."""
    from .geometry import _project_curved_batch, _project_simplex_batch

    if isinstance(s, Simplex):
        return lambda v: _project_simplex_batch(v[None, :])[0]
    if isinstance(s, CurvedRegion):
        n = s.n
        return lambda v: _project_curved_batch(v[None, :], n)[0]
    return lambda v: project_many(s, v[None, :])[0]
