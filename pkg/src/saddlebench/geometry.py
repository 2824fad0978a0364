"""Feasible sets, Euclidean projections onto them, and Bregman divergences.

Set variants: probability simplex, axis-aligned box, halfspace polytope
(inequalities plus optional equality rows), the curved planar region
{(a, b): 0 <= a <= 1/2, 0 <= b <= 1/2^n, a^n <= b}, and products of these.

Polytope projection is exact active-face enumeration: project onto the affine
hull of every candidate set of tight constraints (equality rows always
included), keep the feasible candidates, return the nearest.  The candidate
affine maps are built once per polytope on first use, and ties go to the
first candidate in lexicographic subset order, so results are deterministic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    InfeasibleSet,
    TooManyVertices,
)
from .numerics import uniform_01_stream

ENUMERATION_DIM_CAP = 12
VERTEX_CAP = 10_000
_CURVE_BISECT_WIDTH = 1e-14


class Regularizer(Enum):
    EUCLIDEAN = "euclidean"
    ENTROPY = "entropy"


class FeasibleSet:
    """Base class; concrete sets expose dim plus the operations below."""

    dim: int


@dataclass(frozen=True)
class Simplex(FeasibleSet):
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionMismatch("simplex dimension must be >= 1")


class Box(FeasibleSet):
    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise DimensionMismatch("box bounds must be 1-D arrays of equal length")
        if np.any(self.lo > self.hi):
            raise InfeasibleSet("box has lo > hi")
        self.dim = self.lo.size


class HalfspacePolytope(FeasibleSet):
    """{v : A_ineq v <= b_ineq, A_eq v = b_eq}; eq_mask marks equality rows."""

    def __init__(self, A, b, eq_mask=None, check_feasible=True):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float).ravel()
        if self.A.ndim != 2 or self.A.shape[0] != self.b.size:
            raise DimensionMismatch("A must be 2-D with one b entry per row")
        if eq_mask is None:
            eq_mask = np.zeros(self.b.size, dtype=bool)
        self.eq_mask = np.asarray(eq_mask, dtype=bool).ravel()
        if self.eq_mask.size != self.b.size:
            raise DimensionMismatch("eq_mask length must match the number of rows")
        self.dim = self.A.shape[1]
        self._maps = None
        self._vertices = None
        if check_feasible and self.dim <= ENUMERATION_DIM_CAP:
            # the enumeration produces a feasible candidate iff the set is
            # nonempty (projection onto a nonempty closed polytope exists)
            if self._project_batch(np.zeros((1, self.dim))) is None:
                raise InfeasibleSet("polytope has no feasible point")

    def _active_face_maps(self):
        """Affine projection maps for every candidate active set (cached).

        Rank-deficient subsets reproduce the affine hull of smaller ones, so
        the stacked maps are deduplicated; order stays lexicographic over the
        surviving subsets so tie-breaking is deterministic.
        """
        if self._maps is not None:
            return self._maps
        in_idx = np.flatnonzero(~self.eq_mask)
        subsets = self._candidate_subsets(in_idx)
        A_eq = self.A[self.eq_mask]
        b_eq = self.b[self.eq_mask]
        eye = np.eye(self.dim)
        Ms, cs = [], []
        seen = set()
        for S in subsets:
            rows = list(S)
            Asub = np.vstack([A_eq, self.A[rows]]) if rows else A_eq
            bsub = np.concatenate([b_eq, self.b[rows]]) if rows else b_eq
            if Asub.shape[0] == 0:
                M, c = eye, np.zeros(self.dim)
            else:
                P = Asub.T @ np.linalg.pinv(Asub @ Asub.T)
                M, c = eye - P @ Asub, P @ bsub
            key = (np.round(M, 12).tobytes(), np.round(c, 12).tobytes())
            if key in seen:
                continue
            seen.add(key)
            Ms.append(M)
            cs.append(c)
        self._maps = (np.stack(Ms), np.stack(cs))
        return self._maps

    def _candidate_subsets(self, in_idx):
        """Candidate tight inequality sets, in lexicographic order by size.

        Every projection's tight set lies inside the tight set of some vertex
        of its (nonempty) active face, so when the vertex list is available
        only subsets of vertex tight-sets need enumerating; otherwise fall
        back to all subsets up to the ambient dimension.
        """
        total_full = sum(math.comb(in_idx.size, k) for k in range(0, self.dim + 1))

        def full():
            if total_full > 200_000:
                raise TooManyVertices(
                    "active-face enumeration would exceed the subset budget"
                )
            for k in range(0, self.dim + 1):
                yield from itertools.combinations(in_idx, k)

        try:
            V = self.vertices()
        except (TooManyVertices, InfeasibleSet):
            return list(full())
        allowed = set()
        r = V @ self.A[in_idx].T - self.b[in_idx]
        for i in range(len(V)):
            tight = tuple(in_idx[np.abs(r[i]) <= 1e-9])
            for k in range(0, min(self.dim, len(tight)) + 1):
                allowed.update(itertools.combinations(tight, k))
        if len(allowed) >= total_full:
            return list(full())
        return sorted(allowed, key=lambda s: (len(s), s))

    def _feasible_mask(self, points, tol):
        r = points @ self.A.T - self.b
        ok_in = np.all(r[..., ~self.eq_mask] <= tol, axis=-1)
        ok_eq = np.all(np.abs(r[..., self.eq_mask]) <= tol, axis=-1)
        return ok_in & ok_eq

    def _project_batch(self, P, tol=1e-9):
        """Projections of rows of P, or None if no candidate is feasible."""
        if self.dim > ENUMERATION_DIM_CAP:
            raise DimensionMismatch(
                f"active-face projection capped at ambient dimension {ENUMERATION_DIM_CAP}"
            )
        Ms, cs = self._active_face_maps()
        # keep the candidate tensor below ~2e7 floats per slice
        chunk = max(1, int(2e7 / max(1, len(Ms) * self.dim)))
        out = np.empty_like(P, dtype=float)
        for lo in range(0, len(P), chunk):
            hi = min(lo + chunk, len(P))
            cand = np.einsum("sij,bj->bsi", Ms, P[lo:hi]) + cs[None, :, :]
            ok = self._feasible_mask(cand, tol)
            d2 = ((cand - P[lo:hi, None, :]) ** 2).sum(-1)
            d2[~ok] = np.inf
            best = d2.argmin(axis=1)
            if np.isinf(d2[np.arange(hi - lo), best]).any():
                return None
            out[lo:hi] = cand[np.arange(hi - lo), best]
        return out

    def vertices(self):
        """Enumerate the polytope's vertices (cached)."""
        if self._vertices is not None:
            return self._vertices
        d = self.dim
        eq_idx = np.flatnonzero(self.eq_mask)
        in_idx = np.flatnonzero(~self.eq_mask)
        need = d - eq_idx.size
        if need < 0:
            need = 0
        if math.comb(in_idx.size, need) > 20 * VERTEX_CAP:
            raise TooManyVertices("vertex enumeration would exceed the cap")
        found = []
        for S in itertools.combinations(in_idx, need):
            rows = np.concatenate([eq_idx, np.array(S, dtype=int)]) if S else eq_idx
            Asub = self.A[rows]
            if np.linalg.matrix_rank(Asub) < d:
                continue
            v, *_ = np.linalg.lstsq(Asub, self.b[rows], rcond=None)
            if not np.allclose(Asub @ v, self.b[rows], atol=1e-9):
                continue
            if self._feasible_mask(v[None, :], 1e-9)[0]:
                found.append(v)
                if len(found) > VERTEX_CAP:
                    raise TooManyVertices("more than 10^4 vertices")
        if not found:
            raise InfeasibleSet("no vertex found; polytope may be empty")
        V = np.array(found)
        keep = []
        for i in range(len(V)):
            if all(np.linalg.norm(V[i] - V[j]) > 1e-9 for j in keep):
                keep.append(i)
        self._vertices = V[keep]
        return self._vertices


@dataclass(frozen=True)
class CurvedRegion(FeasibleSet):
    """{(a, b): 0 <= a <= 1/2, 0 <= b <= 1/2^n, a^n <= b} for integer n >= 2."""

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise DimensionMismatch("curved region needs n >= 2")
        object.__setattr__(self, "dim", 2)

    @property
    def b_cap(self) -> float:
        return 0.5**self.n


class Product(FeasibleSet):
    def __init__(self, factors):
        self.factors = tuple(factors)
        if not self.factors:
            raise DimensionMismatch("product of zero factors")
        self.dims = [f.dim for f in self.factors]
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)])
        self.dim = int(self.offsets[-1])

    def slices(self):
        return [slice(int(self.offsets[i]), int(self.offsets[i + 1])) for i in range(len(self.factors))]


def _check_dim(s: FeasibleSet, point: np.ndarray):
    if point.shape[-1] != s.dim:
        raise DimensionMismatch(f"point of dimension {point.shape[-1]} vs set of dimension {s.dim}")


def _project_simplex_batch(P: np.ndarray) -> np.ndarray:
    """Sort-and-threshold Euclidean projection onto the probability simplex."""
    d = P.shape[-1]
    s = np.sort(P, axis=-1)[..., ::-1]
    css = np.cumsum(s, axis=-1) - 1.0
    idx = np.arange(1, d + 1, dtype=float)
    cond = s - css / idx > 0
    rho = d - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1)[..., 0] / (rho + 1)
    return np.maximum(P - theta[..., None], 0.0)


def _curve_stationarity_grad(u, p0, p1, n):
    # derivative of g(u) = (p0-u)^2 + (p1-u^n)^2
    return 2.0 * (u - p0) + 2.0 * n * u ** (n - 1) * (u**n - p1)


def _project_curved_batch(P: np.ndarray, n: int) -> np.ndarray:
    cap = 0.5**n
    a = np.clip(P[..., 0], 0.0, 0.5)
    b = np.clip(P[..., 1], 0.0, cap)
    out = np.stack([a, b], axis=-1)
    viol = a**n > b
    if not np.any(viol):
        return out
    p0 = P[..., 0][viol]
    p1 = P[..., 1][viol]
    lo = np.zeros_like(p0)
    hi = np.full_like(p0, 0.5)
    # g is strictly convex on [0, 1/2] whenever the clamped point violates the
    # curve (then p1 < 1/2^n), so bisection on g' is valid
    at_lo = _curve_stationarity_grad(lo, p0, p1, n) >= 0.0
    at_hi = _curve_stationarity_grad(hi, p0, p1, n) <= 0.0
    steps = int(np.ceil(np.log2(0.5 / _CURVE_BISECT_WIDTH)))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        g = _curve_stationarity_grad(mid, p0, p1, n)
        hi = np.where(g > 0.0, mid, hi)
        lo = np.where(g > 0.0, lo, mid)
    u = 0.5 * (lo + hi)
    u = np.where(at_lo, 0.0, u)
    u = np.where(at_hi, 0.5, u)
    res = np.stack([u, np.minimum(u**n, cap)], axis=-1)
    out[viol] = res
    return out


def project_many(s: FeasibleSet, points: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of `points` onto `s`."""
    points = np.asarray(points, dtype=float)
    _check_dim(s, points)
    if isinstance(s, Simplex):
        return _project_simplex_batch(points)
    if isinstance(s, Box):
        return np.clip(points, s.lo, s.hi)
    if isinstance(s, CurvedRegion):
        return _project_curved_batch(points, s.n)
    if isinstance(s, HalfspacePolytope):
        if s.dim > ENUMERATION_DIM_CAP:
            raise DimensionMismatch(
                f"active-face projection capped at ambient dimension {ENUMERATION_DIM_CAP}"
            )
        res = s._project_batch(points)
        if res is None:
            raise InfeasibleSet("no feasible projection candidate; polytope empty?")
        return res
    if isinstance(s, Product):
        parts = [project_many(f, points[..., sl]) for f, sl in zip(s.factors, s.slices())]
        return np.concatenate(parts, axis=-1)
    raise TypeError(f"unknown feasible set {type(s)!r}")


def project(s: FeasibleSet, point: np.ndarray) -> np.ndarray:
    """Euclidean projection of a single point onto `s`."""
    point = np.asarray(point, dtype=float)
    _check_dim(s, point)
    return project_many(s, point[None, :])[0]


def contains(s: FeasibleSet, point: np.ndarray, tol: float) -> bool:
    """True iff every defining constraint is violated by at most tol."""
    point = np.asarray(point, dtype=float)
    _check_dim(s, point)
    if isinstance(s, Simplex):
        return bool(np.all(point >= -tol) and abs(point.sum() - 1.0) <= tol)
    if isinstance(s, Box):
        return bool(np.all(point >= s.lo - tol) and np.all(point <= s.hi + tol))
    if isinstance(s, CurvedRegion):
        a, b = point
        if not (-tol <= a <= 0.5 + tol and -tol <= b <= s.b_cap + tol):
            return False
        return max(a, 0.0) ** s.n <= b + tol
    if isinstance(s, HalfspacePolytope):
        return bool(s._feasible_mask(point[None, :], tol)[0])
    if isinstance(s, Product):
        return all(contains(f, point[sl], tol) for f, sl in zip(s.factors, s.slices()))
    raise TypeError(f"unknown feasible set {type(s)!r}")


def diameter(s: FeasibleSet) -> float:
    """Euclidean diameter of the (bounded) set."""
    if isinstance(s, Simplex):
        return 0.0 if s.dim == 1 else float(np.sqrt(2.0))
    if isinstance(s, Box):
        return float(np.linalg.norm(s.hi - s.lo))
    if isinstance(s, Product):
        return float(np.sqrt(sum(diameter(f) ** 2 for f in s.factors)))
    if isinstance(s, HalfspacePolytope):
        V = s.vertices()
        d2 = ((V[:, None, :] - V[None, :, :]) ** 2).sum(-1)
        return float(np.sqrt(d2.max()))
    if isinstance(s, CurvedRegion):
        # extreme points: the curve (u, u^n) for u in [0, 1/2] and the corner
        # (0, 1/2^n); curve-curve distance is maximal at the endpoints
        cap = s.b_cap
        u = np.linspace(0.0, 0.5, 5001)
        curve = np.stack([u, u**s.n], axis=1)
        corner = np.array([0.0, cap])
        d_corner = np.sqrt(((curve - corner) ** 2).sum(1))
        k = int(d_corner.argmax())
        lo = max(0.0, u[k] - 1e-4)
        hi = min(0.5, u[k] + 1e-4)
        uf = np.linspace(lo, hi, 2001)
        fine = np.sqrt((uf - corner[0]) ** 2 + (uf**s.n - corner[1]) ** 2)
        ends = np.linalg.norm(curve[-1] - curve[0])
        return float(max(fine.max(), d_corner.max(), ends))
    raise TypeError(f"unknown feasible set {type(s)!r}")


def vertices_of(s: FeasibleSet, cap: int = 1000):
    """Vertex list for polytopal sets, or None when unavailable/too many."""
    if isinstance(s, Simplex):
        if s.dim > cap:
            return None
        return np.eye(s.dim)
    if isinstance(s, Box):
        if 2**s.dim > cap:
            return None
        corners = np.array(list(itertools.product(*zip(s.lo, s.hi))))
        return corners
    if isinstance(s, HalfspacePolytope):
        try:
            V = s.vertices()
        except TooManyVertices:
            return None
        return V if len(V) <= cap else None
    if isinstance(s, Product):
        parts = [vertices_of(f, cap) for f in s.factors]
        if any(p is None for p in parts):
            return None
        total = 1
        for p in parts:
            total *= len(p)
            if total > cap:
                return None
        combos = itertools.product(*[range(len(p)) for p in parts])
        return np.array([np.concatenate([parts[i][k] for i, k in enumerate(ix)]) for ix in combos])
    return None  # curved region has no vertex description


def sample_point(s: FeasibleSet, state: int) -> tuple[np.ndarray, int]:
    """One deterministic pseudo-random point of `s` from the SplitMix stream."""
    if isinstance(s, Simplex):
        u, state = uniform_01_stream(state, s.dim)
        e = -np.log(u)
        return e / e.sum(), state
    if isinstance(s, Box):
        u, state = uniform_01_stream(state, s.dim)
        return s.lo + u * (s.hi - s.lo), state
    if isinstance(s, CurvedRegion):
        u, state = uniform_01_stream(state, 2)
        a = 0.5 * u[0]
        b = a**s.n + u[1] * (s.b_cap - a**s.n)
        return np.array([a, b]), state
    if isinstance(s, HalfspacePolytope):
        V = s.vertices()
        u, state = uniform_01_stream(state, len(V))
        w = -np.log(u)
        w /= w.sum()
        return w @ V, state
    if isinstance(s, Product):
        parts = []
        for f in s.factors:
            p, state = sample_point(f, state)
            parts.append(p)
        return np.concatenate(parts), state
    raise TypeError(f"unknown feasible set {type(s)!r}")


def bregman(reg: Regularizer, u: np.ndarray, v: np.ndarray) -> float:
    """Bregman divergence D_psi(u, v) for the chosen regularizer.

    Euclidean: 0.5 ||u - v||^2.  Entropy: the generalized KL
    sum u ln(u/v) - sum u + sum v with 0 ln 0 = 0, which reduces to KL on
    probability vectors and stays well defined on unnormalized ones.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DimensionMismatch("bregman arguments must have equal shape")
    if reg is Regularizer.EUCLIDEAN:
        d = u - v
        return 0.5 * float(d @ d)
    if np.any(u < 0):
        raise DomainError("entropy divergence needs u >= 0")
    pos = u > 0
    if np.any(v[pos] <= 0):
        raise DomainError("entropy divergence needs v > 0 on the support of u")
    total = float(np.sum(u[pos] * np.log(u[pos] / v[pos])))
    return total - float(u.sum()) + float(v.sum())


def kl_joint(z_star, z) -> float:
    """KL(x*, x) + KL(y*, y) for joint points on products of simplices."""
    return bregman(Regularizer.ENTROPY, z_star.x, z.x) + bregman(Regularizer.ENTROPY, z_star.y, z.y)
