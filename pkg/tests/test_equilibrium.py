import numpy as np
import pytest

from saddlebench.equilibrium import (
    DegenerateSample,
    derived_constants,
    distance_to_equilibria,
    epsilon_constant,
    estimate_cx_cy,
    is_unique,
    simplex_lp,
    solve_matrix_game,
    xi_constant,
)
from saddlebench.errors import NonPositiveXi
from saddlebench.geometry import contains
from saddlebench.problems import JointPoint, multi_ne_game, random_matrix_game
from saddlebench.numerics import uniform_01_stream, uniform_pm1_stream
from conftest import random_simplex_points, vertex_enum_lp_oracle

RPS = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
SHIFT2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def test_simplex_lp_examples():
    sol = simplex_lp(np.array([-1.0]), np.array([[1.0]]), np.array([3.0]))
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(-3.0, abs=1e-12)
    assert sol.point[0] == pytest.approx(3.0, abs=1e-12)
    infeasible = simplex_lp(np.array([0.0]), np.array([[1.0]]), np.array([-1.0]))
    assert infeasible.status == "infeasible"
    unbounded = simplex_lp(np.array([-1.0]))
    assert unbounded.status == "unbounded"


def _random_lp(seed):
    """Random small LP with a box that keeps it bounded."""
    u, state = uniform_01_stream(seed, 2)
    nvars = 2 + int(u[0] * 5) % 5
    ncons = 1 + int(u[1] * 8) % 8
    coefs, state = uniform_pm1_stream(state, nvars + ncons * nvars + ncons)
    c = coefs[:nvars]
    A = coefs[nvars:nvars + ncons * nvars].reshape(ncons, nvars)
    b = coefs[nvars + ncons * nvars:] + 0.5
    return c, A, b, np.full(nvars, 2.0)


def lp_matches_oracle(seed):
    c, A, b, hi = _random_lp(seed)
    n = c.size
    A_full = np.vstack([A, np.eye(n)])
    b_full = np.concatenate([b, hi])
    sol = simplex_lp(c, A_full, b_full)
    ref_obj, _ = vertex_enum_lp_oracle(c, A, b, hi=hi)
    if ref_obj is None:
        assert sol.status == "infeasible"
    else:
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(ref_obj, abs=1e-7)


def test_simplex_lp_vs_vertex_enumeration_sample():
    for seed in range(200):
        lp_matches_oracle(seed)


def test_solve_rps():
    info = solve_matrix_game(RPS)
    assert info.rho == pytest.approx(0.0, abs=1e-12)
    assert np.abs(info.x_star - 1 / 3).max() <= 1e-12
    assert np.abs(info.y_star - 1 / 3).max() <= 1e-12
    assert info.unique
    assert info.xi == 1.0  # full supports: convention value
    assert abs(info.rho_primal - info.rho_dual) <= 1e-8


def test_solve_singleton():
    info = solve_matrix_game(np.array([[1.0]]))
    assert info.rho == pytest.approx(1.0)
    assert info.x_star[0] == 1.0
    assert info.y_star[0] == 1.0
    assert epsilon_constant(info.z_star, 1, 1) == pytest.approx(1.0)


def test_solve_multi_ne():
    info = solve_matrix_game(multi_ne_game().G)
    assert info.rho == pytest.approx(0.0, abs=1e-9)
    assert np.abs(info.x_star - np.array([1 / 3, 1 / 3, 1 / 3, 0.0, 0.0])).max() <= 1e-9
    assert not info.unique


def test_is_unique():
    assert is_unique(RPS, 0.0)
    assert not is_unique(multi_ne_game().G, 0.0)
    assert not is_unique(np.zeros((2, 2)), 0.0)


def test_xi_two_by_two_shift_game():
    # oracle: enumerate pure/mixed candidates of [[0,-1],[1,0]].  Row 1
    # dominates row 2 for the minimizer and column 1 dominates column 2 for
    # the maximizer, so x* = y* = e_1 and rho = 0; the definition then gives
    # xi = min((G y*)_2 - 0, 0 - (G^T x*)_2) = min(1, 1) = 1.
    info = solve_matrix_game(SHIFT2)
    assert info.rho == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(info.x_star, [1.0, 0.0])
    assert np.allclose(info.y_star, [1.0, 0.0])
    assert (SHIFT2 @ info.y_star)[1] == pytest.approx(1.0)
    assert (SHIFT2.T @ info.x_star)[1] == pytest.approx(-1.0)
    assert info.xi == pytest.approx(1.0, abs=1e-12)


def test_xi_positive_on_unique_games():
    for seed in (3, 5, 8):
        game = random_matrix_game(3, 3, seed=seed)
        info = solve_matrix_game(game.G)
        if info.unique:
            assert info.xi is not None and 0.0 < info.xi <= 1.0


def test_xi_raises_on_bogus_supports():
    info = solve_matrix_game(RPS)
    tweaked = solve_matrix_game(RPS)
    tweaked.supp_x = np.array([0, 1])  # misclassify a supported coordinate
    with pytest.raises(NonPositiveXi):
        xi_constant(RPS, tweaked)
    del info


def test_epsilon_examples():
    uniform3 = JointPoint(np.full(3, 1 / 3), np.full(3, 1 / 3))
    assert epsilon_constant(uniform3, 3, 3) == pytest.approx(9.0**-3, rel=1e-12)
    for m in (2, 3, 4):
        uni = JointPoint(np.full(m, 1.0 / m), np.full(m, 1.0 / m))
        assert epsilon_constant(uni, m, m) == pytest.approx(float(m * m) ** (-m), rel=1e-9)


def test_estimate_cx_cy_bounds():
    info = solve_matrix_game(RPS)
    cx, cy = estimate_cx_cy(RPS, info, samples=64, seed=1)
    assert cx <= 1.0 + 1e-12
    assert cy <= 1.0 + 1e-12
    assert cx > 0.0 and cy > 0.0


def test_estimate_cx_cy_degenerate():
    info = solve_matrix_game(np.array([[1.0]]))
    with pytest.raises(DegenerateSample):
        estimate_cx_cy(np.array([[1.0]]), info, samples=8, seed=0)


def test_estimate_cx_cy_vs_grid_oracle():
    G = SHIFT2
    info = solve_matrix_game(G)
    cx, cy = estimate_cx_cy(G, info, samples=512, seed=3)
    # brute-force the outer min over a 1e-3 grid on the 2-simplex
    a = np.arange(0.0, 1.0 + 5e-4, 1e-3)
    X = np.stack([a, 1.0 - a], axis=1)
    supp_y = info.supp_y
    vals = []
    for x in X:
        l1 = np.abs(x - info.x_star).sum()
        if l1 <= 1e-12:
            continue
        vals.append(((x - info.x_star) @ G)[supp_y].max() / l1)
    grid_cx = min(vals)
    assert cx >= grid_cx - 1e-3
    vals_y = []
    supp_x = info.supp_x
    for y in X:
        l1 = np.abs(y - info.y_star).sum()
        if l1 <= 1e-12:
            continue
        vals_y.append((G @ (info.y_star - y))[supp_x].max() / l1)
    grid_cy = min(vals_y)
    assert cy >= grid_cy - 1e-3


def test_distance_to_equilibria_unique():
    info = solve_matrix_game(RPS)
    z = JointPoint(np.array([0.5, 0.25, 0.25]), np.array([0.2, 0.2, 0.6]))
    expected = ((z.x - info.x_star) ** 2).sum() + ((z.y - info.y_star) ** 2).sum()
    assert distance_to_equilibria(RPS, info, z) == pytest.approx(expected, rel=1e-12)


def test_distance_to_equilibria_multi_ne_membership():
    G = multi_ne_game().G
    info = solve_matrix_game(G)
    y0 = np.array([1 / 3, 1 / 3, 1 / 3, 0.0, 0.0])
    z = JointPoint(info.x_star.copy(), y0)
    assert distance_to_equilibria(G, info, z) <= 1e-12
    assert contains(info.y_star_polytope, y0, 1e-9)


def test_distance_to_equilibria_multi_ne_vs_grid():
    from conftest import ystar_grid_oracle

    G = multi_ne_game().G
    info = solve_matrix_game(G)
    ys = random_simplex_points(5, 10, seed=77)
    for y in ys:
        z = JointPoint(info.x_star.copy(), y)
        got = distance_to_equilibria(G, info, z)
        ref = ystar_grid_oracle(y)
        assert abs(np.sqrt(got) - np.sqrt(ref)) <= 5e-3


def test_derived_constants():
    C1, C2, C5 = derived_constants(xi=1.0, epsilon=1.0, C=1.0, eta=0.125)
    assert C1 == pytest.approx(1.0 / 64.0)
    assert C2 == pytest.approx(1.0 / 128.0)
    C1z, C2z, C5z = derived_constants(1.0, 1.0, 0.0, 0.125)
    assert (C1z, C2z, C5z) == (0.0, 0.0, 0.0)
    _, _, C5sat = derived_constants(1.0, 1.0, 1.0, 10.0)
    assert C5sat == 0.5


def test_strong_duality_on_random_games():
    for seed in range(100):
        m = 2 + seed % 5
        n = 2 + (seed // 5) % 5
        game = random_matrix_game(m, n, seed=seed)
        info = solve_matrix_game(game.G)
        assert abs(info.rho_primal - info.rho_dual) <= 1e-8
        assert np.all(info.x_star >= -1e-12)
        assert abs(info.x_star.sum() - 1.0) <= 1e-10
        assert (game.G.T @ info.x_star).max() <= info.rho + 1e-9
        assert (game.G @ info.y_star).min() >= info.rho - 1e-9


def test_equilibrium_optimality_inequalities():
    game = random_matrix_game(4, 6, seed=17)
    info = solve_matrix_game(game.G)
    X = random_simplex_points(4, 1000, seed=18)
    Y = random_simplex_points(6, 1000, seed=19)
    f_xstar_y = Y @ (game.G.T @ info.x_star)
    f_x_ystar = X @ (game.G @ info.y_star)
    assert f_xstar_y.max() <= info.rho + 1e-9
    assert f_x_ystar.min() >= info.rho - 2e-9


def test_complementarity_structure_on_unique_games():
    for seed in (3, 7, 21):
        game = random_matrix_game(4, 4, seed=seed)
        info = solve_matrix_game(game.G)
        if not info.unique:
            continue
        gy = game.G @ info.y_star
        on = info.supp_x
        off = np.setdiff1d(np.arange(4), on)
        assert np.abs(gy[on] - info.rho).max() <= 1e-8
        if off.size:
            assert gy[off].min() > info.rho + 1e-10


def test_lp_oracle_on_structured_instances():
    # degenerate and equality-heavy cases
    c = np.array([1.0, 1.0, 1.0])
    A_eq = np.array([[1.0, 1.0, 1.0]])
    sol = simplex_lp(c, None, None, A_eq, np.array([1.0]))
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(1.0)
    # equality plus inequality mix
    sol2 = simplex_lp(
        np.array([-1.0, 0.0]),
        np.array([[1.0, 1.0]]),
        np.array([1.0]),
        np.array([[0.0, 1.0]]),
        np.array([0.25]),
    )
    assert sol2.status == "optimal"
    assert sol2.objective == pytest.approx(-0.75)
