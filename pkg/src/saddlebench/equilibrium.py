"""Exact equilibria of matrix games via a dense two-phase simplex LP,
uniqueness certification, and the problem-dependent constants of the
convergence analysis (support gap xi, reachable-mass floor epsilon, sampled
directional margins c_x / c_y, and the derived constants C1, C2, C5).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSample, LpFailure, NonPositiveXi, PreconditionViolated
from .geometry import FeasibleSet, HalfspacePolytope, project
from .numerics import uniform_01_stream
from .problems import JointPoint

LP_FEAS_TOL = 1e-9
SUPPORT_TOL = 1e-9
UNIQUE_GAP_TOL = 1e-7
DUALITY_TOL = 1e-8


@dataclass
class LpSolution:
    objective: float | None
    point: np.ndarray | None
    status: str  # "optimal" | "infeasible" | "unbounded"


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])
    basis[row] = col


def _bland(T: np.ndarray, basis: np.ndarray, ncols: int) -> str:
    """Minimize the last tableau row restricted to columns [0, ncols)."""
    m = T.shape[0] - 1
    while True:
        col = -1
        for j in range(ncols):
            if T[-1, j] < -LP_FEAS_TOL:
                col = j
                break
        if col < 0:
            return "optimal"
        row, best = -1, np.inf
        for i in range(m):
            a = T[i, col]
            if a > LP_FEAS_TOL:
                ratio = T[i, -1] / a
                if ratio < best - 1e-12 or (abs(ratio - best) <= 1e-12 and (row < 0 or basis[i] < basis[row])):
                    best, row = ratio, i
        if row < 0:
            return "unbounded"
        _pivot(T, basis, row, col)


def simplex_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None) -> LpSolution:
    """min c@v subject to A_ub v <= b_ub, A_eq v = b_eq, v >= 0.

    Dense two-phase simplex with Bland's anti-cycling rule; infeasible and
    unbounded problems are reported through the status flag, not exceptions.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None or np.size(A_ub) == 0 else np.asarray(A_ub, float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None or np.size(A_eq) == 0 else np.asarray(A_eq, float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, float).ravel()
    if A_ub.shape[0] != b_ub.size or A_eq.shape[0] != b_eq.size:
        raise ValueError("constraint matrix/vector sizes disagree")
    mu, me = A_ub.shape[0], A_eq.shape[0]
    m = mu + me

    A = np.vstack([A_ub, A_eq])
    b = np.concatenate([b_ub, b_eq])
    S = np.zeros((m, mu))
    for i in range(mu):
        S[i, i] = 1.0
    flip = b < 0
    A[flip] *= -1.0
    b[flip] = -b[flip]
    if mu:
        S[:mu][flip[:mu]] *= -1.0

    # artificial variables wherever a slack cannot start as the basis
    need_art = np.ones(m, dtype=bool)
    need_art[:mu] = flip[:mu]
    art_rows = np.flatnonzero(need_art)
    na = art_rows.size

    ncols = n + mu + na
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :n] = A
    T[:m, n:n + mu] = S
    for k, i in enumerate(art_rows):
        T[i, n + mu + k] = 1.0
    T[:m, -1] = b
    basis = np.empty(m, dtype=int)
    basis[:mu] = np.arange(n, n + mu)
    for k, i in enumerate(art_rows):
        basis[i] = n + mu + k

    if na:
        T[-1, :] = -T[art_rows].sum(axis=0)
        T[-1, n + mu:ncols] = 0.0
        if _bland(T, basis, n + mu) != "optimal" or T[-1, -1] < -1e-7:
            return LpSolution(None, None, "infeasible")
        for i in range(m):
            if basis[i] >= n + mu:
                for j in range(n + mu):
                    if abs(T[i, j]) > LP_FEAS_TOL:
                        _pivot(T, basis, i, j)
                        break
        keep = [i for i in range(m) if basis[i] < n + mu]
        T = np.vstack([T[keep][:, np.r_[0:n + mu, ncols]], np.zeros(n + mu + 1)])
        basis = basis[keep]
        m = len(keep)
    else:
        T = np.vstack([T[:m, np.r_[0:n + mu, ncols]], np.zeros(n + mu + 1)])

    T[-1, :n] = c
    for i in range(m):
        if abs(T[-1, basis[i]]) > 0.0:
            T[-1] -= T[-1, basis[i]] * T[i]
    if _bland(T, basis, n + mu) == "unbounded":
        return LpSolution(None, None, "unbounded")
    v = np.zeros(n + mu)
    v[basis] = T[:m, -1]
    x = v[:n]
    return LpSolution(float(c @ x), x, "optimal")


@dataclass
class EquilibriumInfo:
    rho: float
    x_star: np.ndarray
    y_star: np.ndarray
    supp_x: np.ndarray
    supp_y: np.ndarray
    unique: bool
    xi: float | None
    epsilon: float
    x_star_polytope: FeasibleSet
    y_star_polytope: FeasibleSet
    cx_estimate: float | None = None
    cy_estimate: float | None = None
    rho_primal: float = field(default=0.0, repr=False)
    rho_dual: float = field(default=0.0, repr=False)

    @property
    def z_star(self) -> JointPoint:
        return JointPoint(self.x_star, self.y_star)

    @property
    def face_projection_supported(self) -> bool:
        """Exact projection onto the optimal faces is available (dim cap)."""
        from .geometry import ENUMERATION_DIM_CAP

        return (
            self.x_star_polytope.dim <= ENUMERATION_DIM_CAP
            and self.y_star_polytope.dim <= ENUMERATION_DIM_CAP
        )


def _minimax_lp(G: np.ndarray) -> tuple[float, np.ndarray]:
    """min_x max_y x^T G y: variables (x, rho+, rho-)."""
    M, N = G.shape
    c = np.concatenate([np.zeros(M), [1.0, -1.0]])
    A_ub = np.hstack([G.T, -np.ones((N, 1)), np.ones((N, 1))])
    A_eq = np.concatenate([np.ones(M), [0.0, 0.0]])[None, :]
    sol = simplex_lp(c, A_ub, np.zeros(N), A_eq, np.array([1.0]))
    if sol.status != "optimal":
        raise LpFailure(f"minimax LP ended with status {sol.status}")
    return sol.objective, sol.point[:M]


def _maximin_lp(G: np.ndarray) -> tuple[float, np.ndarray]:
    M, N = G.shape
    c = np.concatenate([np.zeros(N), [-1.0, 1.0]])
    A_ub = np.hstack([-G, np.ones((M, 1)), -np.ones((M, 1))])
    A_eq = np.concatenate([np.ones(N), [0.0, 0.0]])[None, :]
    sol = simplex_lp(c, A_ub, np.zeros(M), A_eq, np.array([1.0]))
    if sol.status != "optimal":
        raise LpFailure(f"maximin LP ended with status {sol.status}")
    return -sol.objective, sol.point[:N]


def is_unique(G: np.ndarray, rho: float) -> bool:
    """Certify uniqueness by per-coordinate range LPs over the optimal faces."""
    G = np.asarray(G, dtype=float)
    M, N = G.shape
    ones_M = np.ones(M)[None, :]
    ones_N = np.ones(N)[None, :]
    bx = np.full(N, rho + SUPPORT_TOL)
    for i in range(M):
        e = np.zeros(M)
        e[i] = 1.0
        hi = simplex_lp(-e, G.T, bx, ones_M, np.array([1.0]))
        lo = simplex_lp(e, G.T, bx, ones_M, np.array([1.0]))
        if hi.status != "optimal" or lo.status != "optimal":
            raise LpFailure("coordinate-range LP failed on X*")
        if (-hi.objective) - lo.objective > UNIQUE_GAP_TOL:
            return False
    by = np.full(M, -(rho - SUPPORT_TOL))
    for j in range(N):
        e = np.zeros(N)
        e[j] = 1.0
        hi = simplex_lp(-e, -G, by, ones_N, np.array([1.0]))
        lo = simplex_lp(e, -G, by, ones_N, np.array([1.0]))
        if hi.status != "optimal" or lo.status != "optimal":
            raise LpFailure("coordinate-range LP failed on Y*")
        if (-hi.objective) - lo.objective > UNIQUE_GAP_TOL:
            return False
    return True


def xi_constant(G: np.ndarray, info: EquilibriumInfo) -> float:
    """Smallest slack of the strict complementarity inequalities at (x*, y*):

    xi = min( min_{i not in supp(x*)} (G y*)_i - rho,
              rho - max_{i not in supp(y*)} (G^T x*)_i ),
    with empty index sets contributing +inf and the convention xi = 1 when
    both are empty; the result is clamped into (0, 1].
    """
    G = np.asarray(G, dtype=float)
    comp_x = np.setdiff1d(np.arange(G.shape[0]), info.supp_x)
    comp_y = np.setdiff1d(np.arange(G.shape[1]), info.supp_y)
    terms = []
    if comp_x.size:
        terms.append(float((G @ info.y_star)[comp_x].min() - info.rho))
    if comp_y.size:
        terms.append(float(info.rho - (G.T @ info.x_star)[comp_y].max()))
    if not terms:
        return 1.0
    xi = min(terms)
    if xi <= 1e-12:
        raise NonPositiveXi(
            f"complementarity slack {xi:.3e} is not positive; "
            "non-unique equilibrium or support misclassification"
        )
    return min(xi, 1.0)


def epsilon_constant(z_star: JointPoint, M: int, N: int) -> float:
    """min over supported coordinates j of exp(-ln(MN) / z*_j)."""
    z = z_star.concat()
    supp = z > 0.0
    log_mn = np.log(float(M) * float(N))
    return float(np.exp(-(log_mn / z[supp])).min())


def solve_matrix_game(G: np.ndarray) -> EquilibriumInfo:
    """Solve both game LPs and assemble the equilibrium summary."""
    G = np.asarray(G, dtype=float)
    M, N = G.shape
    rho_p, x_star = _minimax_lp(G)
    rho_d, y_star = _maximin_lp(G)
    if abs(rho_p - rho_d) > DUALITY_TOL:
        raise LpFailure(f"primal/dual game values disagree: {rho_p} vs {rho_d}")
    rho = 0.5 * (rho_p + rho_d)
    supp_x = np.flatnonzero(x_star > SUPPORT_TOL)
    supp_y = np.flatnonzero(y_star > SUPPORT_TOL)
    x_star = np.where(x_star > SUPPORT_TOL, x_star, 0.0)
    y_star = np.where(y_star > SUPPORT_TOL, y_star, 0.0)
    unique = is_unique(G, rho)
    # optimal faces: X* = {x in simplex: G^T x <= rho 1}, Y* symmetric; each
    # polytope uses its own LP value so the LP vertex is exactly feasible
    A_x = np.vstack([-np.eye(M), G.T, np.ones((1, M))])
    b_x = np.concatenate([np.zeros(M), np.full(N, rho_p), [1.0]])
    eq_x = np.zeros(M + N + 1, dtype=bool)
    eq_x[-1] = True
    A_y = np.vstack([-np.eye(N), -G, np.ones((1, N))])
    b_y = np.concatenate([np.zeros(N), np.full(M, -rho_d), [1.0]])
    eq_y = np.zeros(N + M + 1, dtype=bool)
    eq_y[-1] = True
    # the optimal faces are nonempty by construction (they contain the LP
    # vertices), so skip the constructor's enumeration-based feasibility pass
    x_poly = HalfspacePolytope(A_x, b_x, eq_x, check_feasible=False)
    y_poly = HalfspacePolytope(A_y, b_y, eq_y, check_feasible=False)
    info = EquilibriumInfo(
        rho=rho,
        x_star=x_star,
        y_star=y_star,
        supp_x=supp_x,
        supp_y=supp_y,
        unique=unique,
        xi=None,
        epsilon=epsilon_constant(JointPoint(x_star, y_star), M, N),
        x_star_polytope=x_poly,
        y_star_polytope=y_poly,
        rho_primal=rho_p,
        rho_dual=rho_d,
    )
    try:
        info.xi = xi_constant(G, info)
    except NonPositiveXi:
        if unique:
            raise
        info.xi = None  # undefined for this vertex of a non-unique game
    return info


def estimate_cx_cy(G: np.ndarray, info: EquilibriumInfo, samples: int, seed: int) -> tuple[float, float]:
    """Sampled upper estimates of the directional payoff margins c_x, c_y.

    For each sampled x != x*, the inner maximum over the support face of Y*
    is exact at its vertices e_i, i in supp(y*); the outer minimum over a
    finite sample only shrinks toward the true constant from above.
    """
    if not info.unique:
        raise PreconditionViolated("c_x/c_y are defined for unique-equilibrium games")
    G = np.asarray(G, dtype=float)
    M, N = G.shape
    state = seed

    def one_side(dim, star, cols, margin):
        nonlocal state
        pts = [np.eye(dim)[j] for j in range(dim)]
        for _ in range(samples):
            u, state = uniform_01_stream(state, dim)
            e = -np.log(u)
            pts.append(e / e.sum())
        best = np.inf
        for p in pts:
            l1 = float(np.abs(p - star).sum())
            if l1 <= 1e-12:
                continue
            best = min(best, margin(p) / l1)
        if not np.isfinite(best):
            raise DegenerateSample("every sample coincides with the optimizer")
        return best

    cx = one_side(M, info.x_star, info.supp_y, lambda p: float(((p - info.x_star) @ G)[info.supp_y].max()))
    cy = one_side(N, info.y_star, info.supp_x, lambda p: float((G @ (info.y_star - p))[info.supp_x].max()))
    return cx, cy


def distance_to_equilibria(G: np.ndarray, info: EquilibriumInfo, z: JointPoint) -> float:
    """Squared Euclidean distance from z to the equilibrium product set."""
    if info.unique:
        return float(((z.x - info.x_star) ** 2).sum() + ((z.y - info.y_star) ** 2).sum())
    px = project(info.x_star_polytope, z.x)
    py = project(info.y_star_polytope, z.y)
    return float(((z.x - px) ** 2).sum() + ((z.y - py) ** 2).sum())


def distances_to_equilibria(info: EquilibriumInfo, xs: np.ndarray, ys: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Vectorized dist^2(z_t, Z*) along stacked iterates."""
    if info.unique:
        return ((xs - info.x_star) ** 2).sum(-1) + ((ys - info.y_star) ** 2).sum(-1)
    out = np.empty(len(xs))
    for lo in range(0, len(xs), chunk):
        hi = min(lo + chunk, len(xs))
        px = info.x_star_polytope._project_batch(xs[lo:hi])
        py = info.y_star_polytope._project_batch(ys[lo:hi])
        if px is None or py is None:
            raise LpFailure("equilibrium polytope projection found no feasible candidate")
        out[lo:hi] = ((xs[lo:hi] - px) ** 2).sum(-1) + ((ys[lo:hi] - py) ** 2).sum(-1)
    return out


def derived_constants(xi: float, epsilon: float, C: float, eta: float) -> tuple[float, float, float]:
    """(C1, C2, C5) = (eps^4 C^2 / 64, eps^3 C^2 xi^2 / 128, min(16 eta^2 C^2 / 81, 1/2))."""
    C1 = epsilon**4 * C**2 / 64.0
    C2 = epsilon**3 * C**2 * xi**2 / 128.0
    C5 = min(16.0 * eta**2 * C**2 / 81.0, 0.5)
    return C1, C2, C5
