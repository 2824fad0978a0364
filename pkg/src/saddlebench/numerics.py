"""Deterministic pseudo-randomness, dense matrix primitives, and rate fitting.

The RNG is SplitMix64: a counter-based 64-bit generator whose whole stream is
a pure function of the seed, so every experiment in the package is bit-exactly
reproducible.  Matrices are plain row-major float64 ``numpy`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveValue, WindowTooSmall, ZeroMatrix

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

OPNORM_MAX_ITERS = 100_000


def splitmix_next(state: int) -> tuple[int, int]:
    """Advance SplitMix64 once; returns (output, next state).

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    output = z ^ (z >> 31)
    """
    state = (state + _GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31), state


def splitmix_stream(state: int, count: int) -> tuple[np.ndarray, int]:
    """Vectorized SplitMix64: the next `count` outputs as uint64.

    SplitMix64 is counter-based (state_k = seed + k*gamma mod 2^64), so the
    stream can be produced in one shot; agrees bit-exactly with iterating
    splitmix_next.
    """
    ks = np.arange(1, count + 1, dtype=np.uint64)
    s = (np.uint64(state & _MASK64) + ks * np.uint64(_GAMMA)).astype(np.uint64)
    z = s
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    return z, (state + count * _GAMMA) & _MASK64


def uniform_pm1(state: int) -> tuple[float, int]:
    """One uniform draw in [-1, 1): 2*(u / 2^64) - 1 for raw output u."""
    u, state = splitmix_next(state)
    return 2.0 * (u / 2.0**64) - 1.0, state


def uniform_pm1_stream(state: int, count: int) -> tuple[np.ndarray, int]:
    """Vectorized uniform_pm1."""
    raw, state = splitmix_stream(state, count)
    return 2.0 * (raw / 2.0**64) - 1.0, state


def uniform_01_stream(state: int, count: int) -> tuple[np.ndarray, int]:
    """Uniform draws in (0, 1]: (u + 1) / 2^64."""
    raw, state = splitmix_stream(state, count)
    return (raw + 1.0) / 2.0**64, state


def operator_norm(G: np.ndarray, tol: float = 1e-12) -> float:
    """Largest singular value of G by power iteration on G^T G.

    Deterministic all-ones start; stops when successive Rayleigh-quotient
    estimates differ by less than tol * estimate, capped at 1e5 iterations.
    """
    G = np.asarray(G, dtype=float)
    if not np.any(G):
        raise ZeroMatrix("operator norm of the all-zero matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = G.shape[1]

    def iterate(v0) -> float:
        v = v0 / np.linalg.norm(v0)
        est = float(np.linalg.norm(G @ v))
        for _ in range(OPNORM_MAX_ITERS):
            w = G.T @ (G @ v)
            nw = np.linalg.norm(w)
            if nw == 0.0:
                return est  # start hit the kernel of G^T G exactly
            v = w / nw
            new_est = float(np.linalg.norm(G @ v))
            if abs(new_est - est) < tol * max(abs(new_est), 1e-300):
                return new_est
            est = new_est
        return est

    # all-ones start per the deterministic contract, plus a ramp start that
    # guards against matrices whose top singular space is exactly orthogonal
    # to it (circulant games); the max of the two monotone underestimates
    best = max(iterate(np.ones(d)), iterate(np.arange(1.0, d + 1.0)))
    if best == 0.0:
        best = max(iterate(np.eye(d)[j]) for j in range(d))
    return best


@dataclass(frozen=True)
class RateFit:
    """OLS fit of a log-transformed series over an index window."""

    slope: float
    intercept: float
    window: tuple[int, int]
    r_squared: float


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    dy = y - ym
    sxx = float(dx @ dx)
    slope = float(dx @ dy) / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    sst = float(dy @ dy)
    if sst <= 1e-300:
        r2 = 1.0
    else:
        r2 = 1.0 - float(resid @ resid) / sst
    return slope, intercept, min(max(r2, 0.0), 1.0)


def _check_window(series: np.ndarray, window: tuple[int, int]) -> np.ndarray:
    lo, hi = window
    if not (0 <= lo < hi <= series.size):
        raise WindowTooSmall(f"window {window} outside series of length {series.size}")
    if hi - lo < 3:
        raise WindowTooSmall(f"window {window} has fewer than 3 points")
    vals = series[lo:hi]
    if np.any(vals <= 0.0) or not np.all(np.isfinite(vals)):
        raise NonPositiveValue("log fit requires positive finite values in the window")
    return vals


def fit_log_linear(series: np.ndarray, window: tuple[int, int], t_offset: int = 0) -> RateFit:
    """OLS of ln(series[t]) against t over window = (lo, hi), half-open.

    The slope is the per-step log decrement; t values are index + t_offset.
    """
    series = np.asarray(series, dtype=float)
    vals = _check_window(series, window)
    t = np.arange(window[0], window[1], dtype=float) + t_offset
    slope, intercept, r2 = _ols(t, np.log(vals))
    return RateFit(slope, intercept, (window[0], window[1]), r2)


def fit_log_log(series: np.ndarray, window: tuple[int, int], t_offset: int = 0) -> RateFit:
    """OLS of ln(series[t]) against ln(t); the slope is the power-law exponent."""
    series = np.asarray(series, dtype=float)
    vals = _check_window(series, window)
    t = np.arange(window[0], window[1], dtype=float) + t_offset
    if t[0] < 1:
        raise WindowTooSmall("log-log fit needs window t values >= 1")
    slope, intercept, r2 = _ols(np.log(t), np.log(vals))
    return RateFit(slope, intercept, (window[0], window[1]), r2)
