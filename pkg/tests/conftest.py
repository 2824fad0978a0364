"""Shared independent oracles for the test suite.

These deliberately avoid the code paths they are used to check: the Jacobi
sweep knows nothing of power iteration, the grid projectors know nothing of
sort-thresholding or active faces, the vertex-enumeration LP knows nothing of
simplex pivoting, and the Bregman-argmin solver reaches the step subproblem's
minimum iteratively instead of in closed form.
"""
import itertools

import numpy as np
import pytest

from saddlebench.geometry import Regularizer, Simplex, project_many
from saddlebench.numerics import uniform_01_stream, uniform_pm1_stream


def jacobi_sigma_max(G, sweeps=200, tol=1e-15):
    """Largest singular value via classical Jacobi rotations on G^T G."""
    A = np.asarray(G, float)
    S = A.T @ A
    n = S.shape[0]
    for _ in range(sweeps):
        off = 0.0
        p = q = 0
        for i in range(n):
            for j in range(i + 1, n):
                if abs(S[i, j]) > off:
                    off, p, q = abs(S[i, j]), i, j
        if off < tol:
            break
        if S[p, p] == S[q, q]:
            theta = np.pi / 4.0
        else:
            theta = 0.5 * np.arctan2(2.0 * S[p, q], S[q, q] - S[p, p])
        c, s = np.cos(theta), np.sin(theta)
        J = np.eye(n)
        J[p, p] = J[q, q] = c
        J[p, q] = s
        J[q, p] = -s
        S = J.T @ S @ J
    return float(np.sqrt(max(S.diagonal().max(), 0.0)))


def grid_simplex_oracle(point, step=1e-3):
    """Brute-force nearest simplex point on a dense grid (dims 2 and 3)."""
    point = np.asarray(point, float)
    d = point.size
    if d == 2:
        a = np.arange(0.0, 1.0 + step / 2, step)
        cand = np.stack([a, 1.0 - a], axis=1)
    elif d == 3:
        a = np.arange(0.0, 1.0 + step / 2, step)
        A, B = np.meshgrid(a, a, indexing="ij")
        keep = A + B <= 1.0 + 1e-12
        cand = np.stack([A[keep], B[keep], 1.0 - A[keep] - B[keep]], axis=1)
    else:
        raise ValueError("grid oracle supports dims 2 and 3")
    d2 = ((cand - point) ** 2).sum(1)
    return cand[d2.argmin()]


def grid_curved_oracle(point, n, step=1e-6):
    """Projection onto the curved region by exhausting the boundary curve and
    the clamped interior candidate, with a local refinement pass."""
    p = np.asarray(point, float)
    cap = 0.5**n
    cand = [np.array([min(max(p[0], 0.0), 0.5), min(max(p[1], 0.0), cap)])]
    if cand[0][0] ** n > cand[0][1]:
        cand.pop()
    u = np.arange(0.0, 0.5 + step / 2, step)
    d2 = (p[0] - u) ** 2 + (p[1] - u**n) ** 2
    k = int(d2.argmin())
    lo, hi = max(0.0, u[k] - 2 * step), min(0.5, u[k] + 2 * step)
    uf = np.linspace(lo, hi, 4001)
    d2f = (p[0] - uf) ** 2 + (p[1] - uf**n) ** 2
    best_u = float(uf[d2f.argmin()])
    cand.append(np.array([best_u, best_u**n]))
    dists = [((c - p) ** 2).sum() for c in cand]
    return cand[int(np.argmin(dists))]


def vertex_enum_lp_oracle(c, A_ub, b_ub, lo=None, hi=None):
    """min c@v over {A_ub v <= b_ub, lo <= v <= hi} by vertex enumeration.

    Returns (objective, point) or (None, None) when infeasible.  Bounds
    default to v >= 0 with a caller-supplied box top.
    """
    c = np.asarray(c, float)
    n = c.size
    lo = np.zeros(n) if lo is None else np.asarray(lo, float)
    hi = np.full(n, np.inf) if hi is None else np.asarray(hi, float)
    rows = [np.asarray(A_ub, float).reshape(-1, n)] if A_ub is not None and np.size(A_ub) else []
    rhs = [np.asarray(b_ub, float).ravel()] if rows else []
    eye = np.eye(n)
    rows.append(-eye)
    rhs.append(-lo)
    finite_hi = np.isfinite(hi)
    if finite_hi.any():
        rows.append(eye[finite_hi])
        rhs.append(hi[finite_hi])
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    idx = np.array(list(itertools.combinations(range(len(A)), n)))
    As = A[idx]
    bs = b[idx]
    dets = np.linalg.det(As)
    ok = np.abs(dets) > 1e-12
    if not ok.any():
        return None, None
    V = np.linalg.solve(As[ok], bs[ok][..., None])[..., 0]
    feas = np.all(V @ A.T <= b + 1e-9, axis=1)
    if not feas.any():
        return None, None
    vals = V[feas] @ c
    k = int(vals.argmin())
    return float(vals[k]), V[feas][k]


def finite_difference_field(problem, z, h=1e-6):
    """Central finite differences of the objective; y block negated."""
    from saddlebench.problems import JointPoint

    dx = z.x.size
    v0 = z.concat()
    out = np.empty(v0.size)
    for j in range(v0.size):
        vp = v0.copy()
        vm = v0.copy()
        vp[j] += h
        vm[j] -= h
        fp = problem.objective(JointPoint.from_concat(vp, dx))
        fm = problem.objective(JointPoint.from_concat(vm, dx))
        out[j] = (fp - fm) / (2.0 * h)
    out[dx:] *= -1.0
    return out


def bregman_argmin_oracle(feasible, reg, eta, g, anchor, tol=1e-12, cap=100_000):
    """Iterative minimizer of eta <u, g> + D_reg(u, anchor) over `feasible`.

    Euclidean: projected gradient descent with step 1/2.  Entropy (simplex):
    exponentiated gradient with step 1/2, run to a fixed point.
    """
    g = np.asarray(g, float)
    if reg is Regularizer.EUCLIDEAN:
        u = anchor.copy()
        for _ in range(cap):
            grad = eta * g + (u - anchor)
            nxt = project_many(feasible, (u - 0.5 * grad)[None, :])[0]
            if np.abs(nxt - u).max() <= tol:
                return nxt
            u = nxt
        return u
    assert isinstance(feasible, Simplex)
    u = anchor.copy()
    log_anchor = np.log(anchor)
    for _ in range(cap):
        grad = eta * g + np.log(u) - log_anchor
        w = np.log(u) - 0.5 * grad
        w -= w.max()
        nxt = np.exp(w)
        nxt /= nxt.sum()
        if np.abs(nxt - u).max() <= tol:
            return nxt
        u = nxt
    return u


def ystar_grid_oracle(y, step=2e-3):
    """Dense-grid distance to the maximin face of the 5x5 multi-equilibrium
    game: y = (c, c, c, y4, y5), c = (1 - y4 - y5)/3 >= 0, y5/2 <= y4 <= 2 y5."""
    y4 = np.arange(0.0, 1.0 + step / 2, step)
    best = np.inf
    for v4 in y4:
        v5 = np.arange(0.0, 1.0 - v4 + step / 2, step)
        v5 = v5[(v4 <= 2.0 * v5 + 1e-12) & (v4 >= 0.5 * v5 - 1e-12)]
        if v5.size == 0:
            continue
        c = (1.0 - v4 - v5) / 3.0
        keep = c >= -1e-12
        if not keep.any():
            continue
        v5 = v5[keep]
        c = c[keep]
        cand = np.stack([c, c, c, np.full_like(c, v4), v5], axis=1)
        d = ((cand - y) ** 2).sum(1).min()
        best = min(best, float(d))
    return best


def random_simplex_points(dim, count, seed):
    u, _ = uniform_01_stream(seed, dim * count)
    e = -np.log(u).reshape(count, dim)
    return e / e.sum(1, keepdims=True)


def random_box_points(lo, hi, count, seed):
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    u, _ = uniform_01_stream(seed, lo.size * count)
    return lo + u.reshape(count, lo.size) * (hi - lo)


@pytest.fixture(scope="session")
def rng_pm1():
    def draw(seed, count):
        vals, _ = uniform_pm1_stream(seed, count)
        return vals

    return draw
