"""Benchmark saddle-point problems: objectives, gradient fields, constants.

Every problem is min_x max_y f(x, y) over x_set x y_set with the joint
gradient field F(z) = (grad_x f, -grad_y f).  The catalog covers bilinear
matrix games on simplices, bilinear games over general polytopes, the
antisymmetric bilinear game on curved regions, a strongly-convex-strongly-
concave two-dimensional toy, and the degree-2n toy whose equilibrium is
approached only polynomially fast.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InfeasiblePoint, UnsupportedNormPair, ZeroMatrix
from .geometry import CurvedRegion, FeasibleSet, Simplex, contains
from .numerics import operator_norm, uniform_pm1_stream

FEAS_TOL = 1e-8


@dataclass(frozen=True)
class JointPoint:
    """A point z = (x, y) in the product feasible set."""

    x: np.ndarray
    y: np.ndarray

    def concat(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @staticmethod
    def from_concat(v: np.ndarray, dim_x: int) -> "JointPoint":
        v = np.asarray(v, dtype=float)
        return JointPoint(v[:dim_x].copy(), v[dim_x:].copy())


class Problem:
    """Base problem; concrete kinds fill x_set, y_set, known_equilibrium."""

    x_set: FeasibleSet
    y_set: FeasibleSet
    known_equilibrium: JointPoint | None = None

    def objective(self, z: JointPoint) -> float:
        raise NotImplementedError

    def field(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(grad_x f, -grad_y f) blocks."""
        raise NotImplementedError

    def field_many(self, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Row-wise field over stacked points; subclasses vectorize."""
        fx = np.empty_like(xs)
        fy = np.empty_like(ys)
        for i in range(len(xs)):
            fx[i], fy[i] = self.field(xs[i], ys[i])
        return fx, fy


class MatrixGame(Problem):
    """f(x, y) = x^T G y on Delta_M x Delta_N with entries of G in [-1, 1]."""

    def __init__(self, G):
        self.G = np.asarray(G, dtype=float)
        if self.G.ndim != 2:
            raise DimensionMismatch("game matrix must be 2-D")
        M, N = self.G.shape
        self.x_set = Simplex(M)
        self.y_set = Simplex(N)
        self.known_equilibrium = None

    def objective(self, z):
        return float(z.x @ self.G @ z.y)

    def field(self, x, y):
        return self.G @ y, -(self.G.T @ x)

    def field_many(self, xs, ys):
        return ys @ self.G.T, -(xs @ self.G)


class BilinearPolytope(Problem):
    """f(x, y) = x^T G y over arbitrary polytopal feasible sets."""

    def __init__(self, G, x_set: FeasibleSet, y_set: FeasibleSet):
        self.G = np.asarray(G, dtype=float)
        if self.G.shape != (x_set.dim, y_set.dim):
            raise DimensionMismatch("G shape must match the feasible-set dimensions")
        self.x_set = x_set
        self.y_set = y_set
        self.known_equilibrium = None

    def objective(self, z):
        return float(z.x @ self.G @ z.y)

    def field(self, x, y):
        return self.G @ y, -(self.G.T @ x)

    def field_many(self, xs, ys):
        return ys @ self.G.T, -(xs @ self.G)


class CurvedBilinear(Problem):
    """f(x, y) = x2 y1 - x1 y2 on the curved region (both players).

    The unique equilibrium is the origin for both players.
    """

    def __init__(self, n: int = 2):
        self.n = int(n)
        self.x_set = CurvedRegion(self.n)
        self.y_set = CurvedRegion(self.n)
        zero = np.zeros(2)
        self.known_equilibrium = JointPoint(zero, zero.copy())

    def objective(self, z):
        return float(z.x[1] * z.y[0] - z.x[0] * z.y[1])

    def field(self, x, y):
        # grad_x f = (-y2, y1); grad_y f = (x2, -x1)
        return np.array([-y[1], y[0]]), np.array([-x[1], x[0]])

    def field_many(self, xs, ys):
        return np.stack([-ys[:, 1], ys[:, 0]], axis=1), np.stack([-xs[:, 1], xs[:, 0]], axis=1)


class StronglyConvexToy(Problem):
    """f(x, y) = x1^2 - y1^2 + 2 x1 y1 on Delta_2 x Delta_2; equilibrium (0,1)."""

    def __init__(self):
        self.x_set = Simplex(2)
        self.y_set = Simplex(2)
        e = np.array([0.0, 1.0])
        self.known_equilibrium = JointPoint(e, e.copy())

    def objective(self, z):
        x1, y1 = z.x[0], z.y[0]
        return float(x1 * x1 - y1 * y1 + 2.0 * x1 * y1)

    def field(self, x, y):
        x1, y1 = x[0], y[0]
        return np.array([2.0 * x1 + 2.0 * y1, 0.0]), np.array([2.0 * y1 - 2.0 * x1, 0.0])

    def field_many(self, xs, ys):
        zero = np.zeros(len(xs))
        return (
            np.stack([2.0 * xs[:, 0] + 2.0 * ys[:, 0], zero], axis=1),
            np.stack([2.0 * ys[:, 0] - 2.0 * xs[:, 0], zero], axis=1),
        )


class PowerToy(Problem):
    """f(x, y) = x1^(2n) - x1 y1 - y1^(2n) on Delta_2 x Delta_2."""

    def __init__(self, n: int = 2):
        if n < 2:
            raise DimensionMismatch("power toy needs n >= 2")
        self.n = int(n)
        self.x_set = Simplex(2)
        self.y_set = Simplex(2)
        e = np.array([0.0, 1.0])
        self.known_equilibrium = JointPoint(e, e.copy())

    def objective(self, z):
        x1, y1 = z.x[0], z.y[0]
        return float(x1 ** (2 * self.n) - x1 * y1 - y1 ** (2 * self.n))

    def field(self, x, y):
        n = self.n
        x1, y1 = x[0], y[0]
        gx = np.array([2 * n * x1 ** (2 * n - 1) - y1, 0.0])
        gy_neg = np.array([2 * n * y1 ** (2 * n - 1) + x1, 0.0])
        return gx, gy_neg

    def field_many(self, xs, ys):
        n = self.n
        zero = np.zeros(len(xs))
        return (
            np.stack([2 * n * xs[:, 0] ** (2 * n - 1) - ys[:, 0], zero], axis=1),
            np.stack([2 * n * ys[:, 0] ** (2 * n - 1) + xs[:, 0], zero], axis=1),
        )


def objective(problem: Problem, z: JointPoint) -> float:
    """f(z); raises InfeasiblePoint when z is outside the feasible set."""
    if not (contains(problem.x_set, z.x, FEAS_TOL) and contains(problem.y_set, z.y, FEAS_TOL)):
        raise InfeasiblePoint("objective evaluated outside the feasible set")
    return problem.objective(z)


def gradient_field(problem: Problem, z: JointPoint) -> np.ndarray:
    """F(z) = (grad_x f, -grad_y f) as one concatenated vector."""
    if z.x.shape[-1] != problem.x_set.dim or z.y.shape[-1] != problem.y_set.dim:
        raise DimensionMismatch("joint point does not match the problem dimensions")
    gx, gy_neg = problem.field(z.x, z.y)
    return np.concatenate([gx, gy_neg])


def _jacobian_norm(problem: Problem, z0: JointPoint, h: float = 1e-6) -> float:
    """Spectral norm of the (constant) Jacobian of F by finite differences
    plus power iteration."""
    v0 = z0.concat()
    d = v0.size
    J = np.empty((d, d))
    f0 = gradient_field(problem, z0)
    for j in range(d):
        vp = v0.copy()
        vp[j] += h
        zp = JointPoint.from_concat(vp, z0.x.size)
        J[:, j] = (gradient_field(problem, zp) - f0) / h
    return operator_norm(J, 1e-12)


def smoothness(problem: Problem, norm_pair: str = "l2") -> float:
    """Lipschitz constant of F.

    "l2": Euclidean-norm constant.  "l1-linf": the unit constant valid for
    matrix games with entries in [-1, 1].
    """
    if norm_pair == "l1-linf":
        if isinstance(problem, MatrixGame) and np.all(np.abs(problem.G) <= 1.0 + 1e-12):
            return 1.0
        raise UnsupportedNormPair("l1-linf smoothness only for matrix games with entries in [-1, 1]")
    if norm_pair != "l2":
        raise UnsupportedNormPair(f"unknown norm pair {norm_pair!r}")
    if isinstance(problem, (MatrixGame, BilinearPolytope)):
        return operator_norm(problem.G, 1e-12)
    if isinstance(problem, CurvedBilinear):
        return 1.0  # field is rotation by the antisymmetric unit matrix
    if isinstance(problem, StronglyConvexToy):
        mid = JointPoint(np.array([0.5, 0.5]), np.array([0.5, 0.5]))
        return _jacobian_norm(problem, mid)
    if isinstance(problem, PowerToy):
        n = problem.n
        return float(2 * n * (2 * n - 1) + 1)
    raise TypeError(f"unknown problem {type(problem)!r}")


def random_matrix_game(M: int, N: int, seed: int) -> MatrixGame:
    """Random matrix game: entries uniform in [-1, 1] row-major from the
    SplitMix stream, then rescaled to unit operator norm."""
    if M < 1 or N < 1:
        raise DimensionMismatch("matrix game needs M, N >= 1")
    entries, _ = uniform_pm1_stream(seed, M * N)
    G = entries.reshape(M, N)
    try:
        sigma = operator_norm(G, 1e-12)
    except ZeroMatrix:  # pragma: no cover - probability zero under the stream
        raise
    return MatrixGame(G / sigma)


def multi_ne_game() -> MatrixGame:
    """The fixed 5x5 zero-value game with a continuum of maximin strategies."""
    G = np.array(
        [
            [0.0, -1.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, -1.0, 0.0, 0.0],
            [-1.0, 1.0, 0.0, 0.0, 0.0],
            [-1.0, 1.0, 0.0, 2.0, -1.0],
            [-1.0, 1.0, 0.0, -1.0, 2.0],
        ]
    )
    return MatrixGame(G)


def default_initial(problem: Problem) -> JointPoint:
    """Canonical starting point: uniform on simplices, the upper curve corner
    on curved regions."""

    def one(s: FeasibleSet) -> np.ndarray:
        if isinstance(s, Simplex):
            return np.full(s.dim, 1.0 / s.dim)
        if isinstance(s, CurvedRegion):
            return np.array([0.5, s.b_cap])
        raise TypeError(f"no default initial point for {type(s)!r}")

    return JointPoint(one(problem.x_set), one(problem.y_set))
