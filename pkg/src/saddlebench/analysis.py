"""Trajectory metrics and inequality checkers.

Everything here consumes recorded trajectories (or standalone points) and is
pure: duality gaps, the potential/movement traces driving the convergence
recursions, the one-step regret inequality checker, empirical estimation of
the saddle-point metric-subregularity exponent, the closed-form convergence
bound, and a tight simulator for the auxiliary recursion lemma.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AtEquilibrium,
    InvalidBeta,
    MissingSecondary,
    PreconditionViolated,
    TooFewPoints,
)
from .equilibrium import EquilibriumInfo, distances_to_equilibria
from .geometry import Product, Regularizer, sample_point, vertices_of
from .numerics import _ols
from .problems import JointPoint, Problem
from .solvers import Trajectory


@dataclass
class MetricSeries:
    name: str
    values: np.ndarray
    t_offset: int = 0


@dataclass
class LyapunovTrace:
    """theta[i] is Theta_{i+1} (t = 1..T+1); zeta[i] is zeta_{i+1} (t = 1..T)."""

    theta: np.ndarray
    zeta: np.ndarray


@dataclass
class SpmsEstimate:
    points: np.ndarray  # rows (distance, ratio)
    fitted_beta: float
    fitted_C: float
    r_squared: float


def _kl_rows(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row-wise KL(A_i, B_i) with the 0 ln 0 = 0 convention."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(A > 0.0, A * (np.log(np.where(A > 0.0, A, 1.0)) - np.log(B)), 0.0)
    return terms.sum(-1)


def duality_gap_matrix(G: np.ndarray, z: JointPoint) -> float:
    """max_j (G^T x)_j - min_i (G y)_i, the simplex-game duality gap."""
    G = np.asarray(G, dtype=float)
    return float((G.T @ z.x).max() - (G @ z.y).min())


def duality_gaps_matrix(G: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    return (xs @ G).max(-1) - (ys @ G.T).min(-1)


def _dist2_to_target(target, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    if isinstance(target, EquilibriumInfo):
        if not target.unique and target.face_projection_supported:
            return distances_to_equilibria(target, xs, ys)
        # unique equilibrium, or optimal faces beyond the exact-projection
        # cap: measure to the LP point (itself an equilibrium, so every
        # potential argument below still applies)
        target = target.z_star
    return ((xs - target.x) ** 2).sum(-1) + ((ys - target.y) ** 2).sum(-1)


def theta_zeta_trace(traj: Trajectory, problem: Problem, target) -> LyapunovTrace:
    """Potential Theta_t and movement zeta_t along a recorded trajectory.

    Entropy:   Theta_t = KL(z*, hat z_t) + (1/16) KL(hat z_t, z_{t-1}),
               zeta_t  = KL(hat z_{t+1}, z_t) + KL(z_t, hat z_t).
    Euclidean: the same with squared distances, and the leading term measured
               to the equilibrium set.
    `target` is a JointPoint or an EquilibriumInfo (whose polytopes are used
    for the Euclidean distance when the equilibrium is not unique).
    """
    if traj.hat_xs is None:
        raise MissingSecondary("theta/zeta need recorded secondary iterates")
    xs, ys = traj.xs, traj.ys
    hx, hy = traj.hat_xs, traj.hat_ys  # hx[i] = hat x_{i+1}
    T = traj.last_t
    if traj.config.regularizer is Regularizer.ENTROPY:
        zs = target.z_star if isinstance(target, EquilibriumInfo) else target
        lead = _kl_rows(np.broadcast_to(zs.x, hx.shape), hx) + _kl_rows(np.broadcast_to(zs.y, hy.shape), hy)
        lag = _kl_rows(hx, xs) + _kl_rows(hy, ys)  # KL(hat z_{t}, z_{t-1}) at i = t-1
        theta = lead + lag / 16.0
        zeta = (
            _kl_rows(hx[1:], xs[1:])
            + _kl_rows(hy[1:], ys[1:])
            + _kl_rows(xs[1:], hx[:-1])
            + _kl_rows(ys[1:], hy[:-1])
        )
    else:
        lead = _dist2_to_target(target, hx, hy)
        lag = ((hx - xs) ** 2).sum(-1) + ((hy - ys) ** 2).sum(-1)
        theta = lead + lag / 16.0
        zeta = ((hx[1:] - xs[1:]) ** 2).sum(-1) + ((hy[1:] - ys[1:]) ** 2).sum(-1) + (
            (xs[1:] - hx[:-1]) ** 2
        ).sum(-1) + ((ys[1:] - hy[:-1]) ** 2).sum(-1)
    assert len(theta) == T + 1 and len(zeta) == T
    return LyapunovTrace(theta=theta, zeta=zeta)


def lemma1_check(traj: Trajectory, problem: Problem, z_ref: JointPoint) -> float:
    """Largest violation of the one-step regret inequality along the run.

    For t = 1..T checks
      eta F(z_t)^T (z_t - z) <= D(z, hz_t) - D(z, hz_{t+1}) - D(hz_{t+1}, z_t)
                                - (15/16) D(z_t, hz_t) + (1/16) D(hz_t, z_{t-1})
    with D the regularizer's Bregman divergence; returns max(LHS - RHS).
    """
    if traj.hat_xs is None:
        raise MissingSecondary("lemma-1 check needs recorded secondary iterates")
    eta = traj.config.eta
    xs, ys = traj.xs[1:], traj.ys[1:]  # z_t, t = 1..T
    xprev, yprev = traj.xs[:-1], traj.ys[:-1]
    hx_t, hy_t = traj.hat_xs[:-1], traj.hat_ys[:-1]  # hat z_t
    hx_n, hy_n = traj.hat_xs[1:], traj.hat_ys[1:]  # hat z_{t+1}
    fx, fy = problem.field_many(xs, ys)
    lhs = eta * (((xs - z_ref.x) * fx).sum(-1) + ((ys - z_ref.y) * fy).sum(-1))
    if traj.config.regularizer is Regularizer.ENTROPY:
        def D(ax, ay, bx, by):
            return _kl_rows(ax, bx) + _kl_rows(ay, by)

        rx = np.broadcast_to(z_ref.x, hx_t.shape)
        ry = np.broadcast_to(z_ref.y, hy_t.shape)
        rhs = (
            D(rx, ry, hx_t, hy_t)
            - D(rx, ry, hx_n, hy_n)
            - D(hx_n, hy_n, xs, ys)
            - (15.0 / 16.0) * D(xs, ys, hx_t, hy_t)
            + (1.0 / 16.0) * D(hx_t, hy_t, xprev, yprev)
        )
    else:
        def D(ax, ay, bx, by):
            return 0.5 * (((ax - bx) ** 2).sum(-1) + ((ay - by) ** 2).sum(-1))

        rx, ry = z_ref.x, z_ref.y
        rhs = (
            D(rx, ry, hx_t, hy_t)
            - D(rx, ry, hx_n, hy_n)
            - D(hx_n, hy_n, xs, ys)
            - (15.0 / 16.0) * D(xs, ys, hx_t, hy_t)
            + (1.0 / 16.0) * D(hx_t, hy_t, xprev, yprev)
        )
    return float((lhs - rhs).max())


def spms_ratio(
    problem: Problem,
    z: JointPoint,
    projection: JointPoint,
    probe_count: int = 64,
    seed: int = 0,
) -> tuple[float, float]:
    """Lower estimate of sup_{z'} [F(z)^T (z - z')]_+ / ||z - z'|| and the
    distance ||z - projection||.

    Probes: every vertex of the product feasible set when enumerable (up to
    1000), `probe_count` random feasible points, and the projection itself.
    """
    dist = float(np.sqrt(((z.x - projection.x) ** 2).sum() + ((z.y - projection.y) ** 2).sum()))
    if dist <= 1e-10:
        raise AtEquilibrium("the queried point is (numerically) an equilibrium")
    prod = Product([problem.x_set, problem.y_set])
    probes = []
    V = vertices_of(prod, cap=1000)
    if V is not None:
        probes.extend(V)
    state = seed
    for _ in range(probe_count):
        p, state = sample_point(prod, state)
        probes.append(p)
    probes.append(projection.concat())
    P = np.array(probes)
    zc = z.concat()
    F = np.concatenate(problem.field(z.x, z.y))
    diffs = zc - P
    norms = np.sqrt((diffs**2).sum(-1))
    ok = norms > 1e-12
    vals = np.maximum(diffs[ok] @ F, 0.0) / norms[ok]
    return float(vals.max()), dist


def fit_spms(points: np.ndarray) -> SpmsEstimate:
    """Power-law fit ratio ~ C * distance^(beta+1) from (distance, ratio) rows."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    P = P[(P[:, 0] > 0) & (P[:, 1] > 0)]
    if len(P) < 5:
        raise TooFewPoints("need at least 5 positive (distance, ratio) points")
    slope, intercept, r2 = _ols(np.log(P[:, 0]), np.log(P[:, 1]))
    return SpmsEstimate(points=P, fitted_beta=slope - 1.0, fitted_C=float(np.exp(intercept)), r_squared=r2)


def predicted_bound(beta: float, C5: float, dist0_sq: float, t: int) -> float:
    """Closed-form last-iterate bound: linear for beta = 0, t^(-1/beta) above."""
    if beta < 0:
        raise InvalidBeta("beta must be nonnegative")
    if beta == 0:
        return 64.0 * dist0_sq * (1.0 + C5) ** (-t)
    lead = (1.0 + 4.0 * (4.0 / beta) ** (1.0 / beta)) * dist0_sq
    tail = 2.0 * (2.0 / (C5 * beta)) ** (1.0 / beta)
    return 32.0 * (lead + tail) * float(t) ** (-1.0 / beta)


def recursion_bound_check(B1: float, p: float, q: float, horizon: int) -> float:
    """Simulate the tight recursion B_{t+1} = B_t - q B_{t+1}^(p+1) and return
    max_t B_t / (c t^(-1/p)) for c = max(B1, (2/(qp))^(1/p)); the lemma
    guarantees the result is at most 1."""
    if p <= 0 or q <= 0:
        raise PreconditionViolated("p and q must be positive")
    if q * (1.0 + p) * B1**p > 1.0 + 1e-12:
        raise PreconditionViolated("q (1+p) B1^p <= 1 is required")
    if B1 == 0.0:
        return 0.0
    c = max(B1, (2.0 / (q * p)) ** (1.0 / p))
    B = B1
    worst = B1 / c
    for t in range(1, horizon):
        # Newton from above on phi(B) = B + q B^(p+1) - B_prev (phi convex)
        target = B
        x = B
        for _ in range(200):
            phi = x + q * x ** (p + 1.0) - target
            dphi = 1.0 + q * (p + 1.0) * x**p
            step = phi / dphi
            x -= step
            if abs(step) <= 1e-14 * max(1.0, x):
                break
        B = max(x, 0.0)
        worst = max(worst, B / (c * (t + 1) ** (-1.0 / p)))
    return worst


def average_duality_gap(G: np.ndarray, traj: Trajectory) -> MetricSeries:
    """Running average (1/T') sum_{t<=T'} gap(z_t) over every prefix T' >= 1."""
    gaps = duality_gaps_matrix(G, traj.xs[1:], traj.ys[1:])
    avg = np.cumsum(gaps) / np.arange(1, len(gaps) + 1)
    return MetricSeries(name="avg_gap", values=avg, t_offset=1)
