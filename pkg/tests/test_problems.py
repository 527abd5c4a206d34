import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from surfpf import cdf as cdf_mod
from surfpf import geometry
from surfpf.errors import DomainError, ParameterError, RankError
from surfpf.problems import (
    DEFAULT_GRID_MAP,
    EntropicBandit,
    GearToy,
    Quadratic1d,
    QuadraticNd,
    TabularKlMdp,
    bandit_objectives,
    bandit_solve,
    bandit_speed,
    fig1_toy_bandit,
    gear_solve,
    grid_mdp_builder,
    grid_mdp_from_map,
    grid_mdp_preset,
    mdp_objectives,
    mdp_occupancy,
    mdp_speed,
    problem_from_config,
    quad_1d_closed_cdf,
    quad_nd_solve,
    quad_nd_speed,
)


def random_mdp(s, a, seed, gamma=0.9, beta=0.8):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(s), size=s * a)
    return TabularKlMdp(
        state_count=s,
        action_count=a,
        transitions=p,
        r1=rng.uniform(-1, 1, s * a),
        r2=rng.uniform(-1, 1, s * a),
        gamma=gamma,
        rho=rng.dirichlet(np.ones(s)),
        beta=beta,
        reference_log=np.full(s * a, -math.log(a)),
    )


def random_policy(s, a, rng):
    return rng.dirichlet(np.ones(a), size=s)


# ---------------------------------------------------------------------------
# Quadratics
# ---------------------------------------------------------------------------


def test_quad_nd_coincident_minimizers():
    b = np.array([1.0, -2.0])
    p = QuadraticNd(np.eye(2), np.eye(2), b, b)
    for w in (0.0, 0.33, 1.0):
        np.testing.assert_allclose(quad_nd_solve(p, w), b, atol=1e-14)


def test_quad_nd_1d_weighted_midpoint():
    # Oracle: bounded scalar minimization of 0.25 x^2 + 0.75 (x-1)^2.
    p = QuadraticNd([[1.0]], [[1.0]], [0.0], [1.0])
    x = quad_nd_solve(p, 0.25)[0]
    oracle = minimize_scalar(
        lambda t: 0.25 * t**2 + 0.75 * (t - 1.0) ** 2,
        bounds=(0.0, 1.0),
        method="bounded",
        options={"xatol": 1e-13},
    ).x
    assert x == pytest.approx(oracle, abs=1e-8)
    assert x == pytest.approx(0.75, abs=1e-12)


def test_quad_nd_asymmetric_stationary_point():
    p = QuadraticNd([[1.0]], [[4.0]], [0.0], [1.0])
    assert quad_nd_solve(p, 0.5)[0] == pytest.approx(0.8, abs=1e-12)


def test_quad_nd_speed_zero_when_b_equal():
    b = np.array([0.5, 0.5, 0.5])
    p = QuadraticNd(np.eye(3) * 2.0, np.eye(3), b, b)
    for w in (0.0, 0.5, 1.0):
        assert quad_nd_speed(p, w) == pytest.approx(0.0, abs=1e-14)


def test_quad_nd_speed_symmetry():
    p = QuadraticNd([[1.0]], [[1.0]], [0.0], [1.0])
    assert quad_nd_speed(p, 0.0) == pytest.approx(quad_nd_speed(p, 1.0), rel=1e-12)


def test_quad_nd_speed_matches_fd():
    p = QuadraticNd([[1.0]], [[2.0]], [0.0], [1.0])
    fd = geometry.speed_finite_difference(p, 0.5)
    assert quad_nd_speed(p, 0.5) == pytest.approx(fd, rel=1e-4)


def test_quad_nd_speed_matches_fd_random_instance():
    rng = np.random.default_rng(8)
    m1 = rng.normal(size=(3, 3))
    m2 = rng.normal(size=(3, 3))
    p = QuadraticNd(
        m1 @ m1.T + 2 * np.eye(3),
        m2 @ m2.T + 2 * np.eye(3),
        rng.normal(size=3),
        rng.normal(size=3),
    )
    for w in np.linspace(0.05, 0.95, 7):
        fd = geometry.speed_finite_difference(p, w)
        assert p.closed_form_speed(w) == pytest.approx(fd, rel=1e-4)


def test_quad_nd_validation():
    with pytest.raises(ParameterError):
        QuadraticNd([[1.0, 0.2], [0.0, 1.0]], np.eye(2), [0, 0], [1, 1])
    with pytest.raises(ParameterError):
        QuadraticNd([[-1.0]], [[1.0]], [0.0], [1.0])


def test_quad_1d_closed_cdf_endpoints_and_midpoint():
    p = Quadratic1d(1.0, 1.0)
    assert p.phi_exact(0.0) == 0.0
    assert p.phi_exact(1.0) == 1.0
    assert p.phi_exact(0.5) == pytest.approx(0.5, abs=1e-15)


def test_quad_1d_closed_cdf_vs_quadrature_r4():
    p = Quadratic1d(1.0, 4.0)
    numeric = geometry.cdf_from_speed(p.closed_form_speed, grid_size=1025)
    assert cdf_mod.sup_distance(quad_1d_closed_cdf(p), numeric) <= 1e-6


@pytest.mark.parametrize("r", [0.25, 0.5, 1.0, 2.0, 4.0, 9.0])
def test_quad_1d_closed_cdf_vs_scipy_quadrature(r):
    # Independent oracle: scipy.integrate.quad on the ratio-reduced integrand.
    p = Quadratic1d(1.0, r)
    integrand = lambda u: math.hypot(1.0 - u, u) / (u + (1.0 - u) * r) ** 3
    total = quad(integrand, 0.0, 1.0, limit=200)[0]
    for w in np.linspace(0.05, 0.95, 10):
        truth = quad(integrand, 0.0, w, limit=200)[0] / total
        assert p.phi_exact(w) == pytest.approx(truth, abs=1e-10)


def test_quad_1d_symmetry_relation():
    lo, hi = Quadratic1d(1.0, 0.25), Quadratic1d(1.0, 4.0)
    for w in np.linspace(0.0, 1.0, 11):
        assert lo.phi_exact(w) == pytest.approx(1.0 - hi.phi_exact(1.0 - w), abs=1e-12)


def test_quad_1d_validation():
    with pytest.raises(ParameterError):
        Quadratic1d(0.0, 1.0)
    with pytest.raises(ParameterError):
        Quadratic1d(1.0, 1.0, b1=0.3, b2=0.3)


# ---------------------------------------------------------------------------
# Gear toy
# ---------------------------------------------------------------------------


def test_gear_identity_path_at_p1():
    g = GearToy(1.0)
    for w in np.linspace(0.0, 1.0, 7):
        assert gear_solve(g, w) == pytest.approx(w, abs=1e-15)


def test_gear_solution_value_p4():
    # Oracle: bounded scalar minimization of the raw scalarized quadratics.
    g = GearToy(4.0)
    x = gear_solve(g, 0.5)
    oracle = minimize_scalar(
        lambda t: 0.5 * (math.sqrt(4.0) / 2.0) * (t - 1.0) ** 2 + 0.5 * 0.5 * t**2,
        bounds=(0.0, 1.0),
        method="bounded",
        options={"xatol": 1e-13},
    ).x
    assert x == pytest.approx(2.0 * 0.5 / 1.5, abs=1e-12)
    assert x == pytest.approx(oracle, abs=1e-8)


def test_gear_endpoints():
    g = GearToy(7.0)
    assert gear_solve(g, 0.0) == 0.0
    assert gear_solve(g, 1.0) == 1.0


def test_gear_closed_cdf_vs_quadrature():
    for p_val in (1.0, 4.0, 9.0):
        g = GearToy(p_val)
        numeric = geometry.cdf_from_speed(g.closed_form_speed, grid_size=513)
        assert cdf_mod.sup_distance(g.closed_form_cdf(), numeric) <= 1e-6


def test_gear_validation():
    with pytest.raises(ParameterError):
        GearToy(0.5)


# ---------------------------------------------------------------------------
# Entropic bandit
# ---------------------------------------------------------------------------


def test_bandit_uniform_when_rewards_zero():
    a = 5
    b = EntropicBandit(np.log(np.full(a, 1 / a)), np.zeros(a), np.zeros(a), beta=1.0)
    np.testing.assert_allclose(bandit_solve(b, 0.3), np.full(a, 0.2), atol=1e-15)


def test_bandit_symmetric_logits():
    b = EntropicBandit(np.log([0.5, 0.5]), [1.0, 0.0], [0.0, 1.0], beta=1.0)
    np.testing.assert_allclose(bandit_solve(b, 0.5), [0.5, 0.5], atol=1e-15)


def test_bandit_two_arm_sigmoid():
    b = EntropicBandit(np.log([0.5, 0.5]), [1.0, 0.0], [0.0, 1.0], beta=1.0)
    u = bandit_solve(b, 1.0)
    assert u[0] == pytest.approx(0.731059, abs=1e-6)
    assert u[1] == pytest.approx(0.268941, abs=1e-6)


def test_bandit_solution_on_simplex():
    rng = np.random.default_rng(4)
    b = EntropicBandit(
        np.log(rng.dirichlet(np.ones(6))),
        rng.uniform(-2, 2, 6),
        rng.uniform(-2, 2, 6),
        beta=0.7,
    )
    for w in np.linspace(0.0, 1.0, 9):
        u = bandit_solve(b, w)
        assert abs(u.sum() - 1.0) <= 1e-12
        assert np.all(u > 0)


def test_bandit_speed_zero_for_equal_rewards():
    r = np.array([0.1, 0.9, 0.4])
    b = EntropicBandit(np.log(np.full(3, 1 / 3)), r, r, beta=1.0)
    for w in (0.0, 0.6, 1.0):
        assert bandit_speed(b, w) == 0.0


def test_bandit_speed_closed_value():
    b = EntropicBandit(np.log([0.5, 0.5]), [1.0, 0.0], [0.0, 1.0], beta=1.0)
    assert bandit_speed(b, 0.5) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-10)


def test_bandit_speed_matches_fd_grid():
    b = fig1_toy_bandit(arms=8, beta=0.5)
    for w in np.linspace(0.0, 1.0, 21):
        fd = geometry.speed_finite_difference(b, w)
        assert bandit_speed(b, w) == pytest.approx(fd, rel=1e-4)


def test_bandit_objectives_zero_case():
    a = 4
    b = EntropicBandit(np.log(np.full(a, 1 / a)), np.zeros(a), np.zeros(a), beta=1.0)
    np.testing.assert_allclose(
        bandit_objectives(b, np.full(a, 1 / a)), [0.0, 0.0], atol=1e-15
    )


def test_bandit_objectives_linear_term():
    b = EntropicBandit(np.log([0.5, 0.5]), [1.0, 0.0], [0.0, 0.0], beta=1.0)
    f = bandit_objectives(b, np.array([0.5, 0.5]))
    assert f[0] == pytest.approx(-0.5, abs=1e-15)


def test_bandit_objectives_rejects_boundary():
    b = EntropicBandit(np.log([0.5, 0.5]), [1.0, 0.0], [0.0, 1.0], beta=1.0)
    with pytest.raises(DomainError):
        bandit_objectives(b, np.array([1.0, 0.0]))


def test_bandit_solve_optimality_vs_random_points():
    rng = np.random.default_rng(9)
    b = EntropicBandit(
        np.log(rng.dirichlet(np.ones(5))),
        rng.uniform(-1, 1, 5),
        rng.uniform(-1, 1, 5),
        beta=0.9,
    )
    w = 0.35
    best = b.scalarized_value(bandit_solve(b, w), w)
    for _ in range(100):
        u = rng.dirichlet(np.ones(5))
        u = np.maximum(u, 1e-9)
        u /= u.sum()
        assert best <= b.scalarized_value(u, w) + 1e-12


# ---------------------------------------------------------------------------
# Tabular MDP
# ---------------------------------------------------------------------------


def test_single_state_occupancy_is_action_distribution():
    m = random_mdp(1, 4, 0)
    rng = np.random.default_rng(1)
    pi = random_policy(1, 4, rng)
    np.testing.assert_allclose(mdp_occupancy(m, pi), pi[0], atol=1e-12)


def test_two_absorbing_states_occupancy():
    # Hand computation: all mass stays on state 0's actions per the policy.
    p = np.zeros((4, 2))
    p[0, 0] = p[1, 0] = 1.0  # state 0 self-loops
    p[2, 1] = p[3, 1] = 1.0  # state 1 self-loops
    m = TabularKlMdp(
        2, 2, p,
        r1=np.zeros(4), r2=np.zeros(4),
        gamma=0.5, rho=[1.0, 0.0], beta=1.0,
        reference_log=np.log([0.5, 0.5, 0.5, 0.5]),
    )
    pi = np.array([[0.3, 0.7], [0.6, 0.4]])
    x = mdp_occupancy(m, pi)
    np.testing.assert_allclose(x, [0.3, 0.7, 0.0, 0.0], atol=1e-12)


def test_occupancy_feasibility_residual_random_instances():
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        s = int(rng.integers(2, 6))
        a = int(rng.integers(2, 4))
        m = random_mdp(s, a, seed, gamma=float(rng.uniform(0.3, 0.97)))
        x = mdp_occupancy(m, random_policy(s, a, rng))
        residual = np.abs(m._flow.T @ x - (1 - m.gamma) * m.rho).max()
        assert residual <= 1e-10
        assert abs(x.sum() - 1.0) <= 1e-10
        assert np.all(x >= 0)


def test_mdp_objectives_reference_policy_has_zero_kl():
    m = random_mdp(3, 2, 5)
    x = mdp_occupancy(m, m.reference_policy)
    f = mdp_objectives(m, x)
    np.testing.assert_allclose(f, [-m.r1 @ x, -m.r2 @ x], atol=1e-12)


def test_single_state_mdp_reduces_to_bandit():
    m = random_mdp(1, 5, 21, gamma=0.6, beta=1.1)
    b = EntropicBandit(m.reference_log, m.r1, m.r2, beta=m.beta)
    for w in (0.2, 0.5, 0.9):
        x = m.solve_scalarized_exact(w)
        np.testing.assert_allclose(x, bandit_solve(b, w), atol=1e-8)
        np.testing.assert_allclose(
            mdp_objectives(m, x), bandit_objectives(b, x), atol=1e-8
        )
        assert mdp_speed(m, w, x) == pytest.approx(bandit_speed(b, w), abs=1e-8)


def test_mdp_scalarized_local_optimality():
    m = random_mdp(3, 2, 33)
    w = 0.45
    x_star = m.solve_scalarized_exact(w)
    best = m.scalarized_value(x_star, w)
    rng = np.random.default_rng(7)
    for _ in range(100):
        pi = random_policy(3, 2, rng)
        x = mdp_occupancy(m, pi)
        assert best <= m.scalarized_value(x, w) + 1e-9


def test_mdp_speed_zero_for_equal_rewards():
    m = random_mdp(3, 2, 11)
    m2 = TabularKlMdp(
        3, 2, m.transitions, m.r1, m.r1.copy(), m.gamma, m.rho, m.beta, m.reference_log
    )
    for w in (0.1, 0.8):
        x = m2.solve_scalarized_exact(w)
        assert mdp_speed(m2, w, x) == pytest.approx(0.0, abs=1e-12)


def test_mdp_speed_matches_fd_random_instance():
    m = random_mdp(3, 2, 42)
    for w in np.linspace(0.0, 1.0, 11):
        x = m.solve_scalarized_exact(w)
        fd = geometry.speed_finite_difference(m, w)
        assert mdp_speed(m, w, x) == pytest.approx(fd, rel=1e-3)


def test_mdp_validation():
    p = np.ones((4, 2)) * 0.5
    with pytest.raises(ParameterError):
        TabularKlMdp(2, 2, p, np.zeros(4), np.zeros(4), 1.0, [1, 0], 1.0,
                     np.log([0.5] * 4))
    bad_p = p.copy()
    bad_p[0, 0] = 0.7  # row no longer sums to one
    with pytest.raises(ParameterError):
        TabularKlMdp(2, 2, bad_p, np.zeros(4), np.zeros(4), 0.9, [1, 0], 1.0,
                     np.log([0.5] * 4))


# ---------------------------------------------------------------------------
# Grid MDP builder
# ---------------------------------------------------------------------------


def test_grid_smallest_instance():
    m = grid_mdp_builder(1, 2, obstacles=set(), treasures={(0, 1): 1.0},
                         gamma=0.9, beta=1.0)
    assert m.state_count == 3  # two cells plus absorbing terminal
    np.testing.assert_allclose(m.transitions.sum(axis=1), 1.0, atol=1e-15)


def test_grid_flow_matrix_full_rank():
    # Oracle: numerical rank via SVD equals the state count.
    m = grid_mdp_builder(
        3, 4, obstacles={(1, 1)}, treasures={(2, 3): 5.0, (0, 3): 2.0},
        gamma=0.9, beta=1.0,
    )
    rank = np.linalg.matrix_rank(m._flow)
    assert rank == m.state_count


def test_grid_preset_occupancy_sums_to_one():
    m = grid_mdp_preset()
    x = mdp_occupancy(m, m.reference_policy)
    assert abs(x.sum() - 1.0) <= 1e-10


def test_grid_unreachable_treasure_warning():
    m = grid_mdp_builder(
        1, 4, obstacles={(0, 1)}, treasures={(0, 3): 9.0},
        gamma=0.9, beta=1.0,
    )
    assert any("unreachable" in w for w in m.metadata["warnings"])


def test_grid_map_round_trip():
    m = grid_mdp_from_map(DEFAULT_GRID_MAP, gamma=0.95, beta=1.5)
    preset = grid_mdp_preset()
    np.testing.assert_allclose(m.transitions, preset.transitions)
    np.testing.assert_allclose(m.r2, preset.r2)


def test_grid_map_validation():
    with pytest.raises(ParameterError):
        grid_mdp_from_map(("S..", ".."), gamma=0.9, beta=1.0)  # ragged
    with pytest.raises(ParameterError):
        grid_mdp_from_map(("...",), gamma=0.9, beta=1.0)  # no start
    with pytest.raises(ParameterError):
        grid_mdp_from_map(("S", "?"), gamma=0.9, beta=1.0)  # unknown char


# ---------------------------------------------------------------------------
# Cross-instance properties
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "problem",
    [
        Quadratic1d(1.0, 4.0),
        QuadraticNd([[2.0, 0.3], [0.3, 1.0]], np.eye(2), [0.0, 0.0], [1.0, 0.5]),
        GearToy(4.0),
        fig1_toy_bandit(arms=6, beta=0.5),
    ],
    ids=["quad1d", "quad_nd", "gear", "bandit"],
)
def test_scalarized_optimality_sandwich(problem):
    rng = np.random.default_rng(77)
    for w in np.linspace(0.0, 1.0, 11):
        sol = problem.solve_scalarized_exact(w)
        best = problem.scalarized_value(sol, w)
        for _ in range(200):
            if isinstance(problem, EntropicBandit):
                cand = rng.dirichlet(np.ones(problem.action_count))
                cand = np.maximum(cand, 1e-9)
                cand /= cand.sum()
            elif problem.decision_dimension == 1:
                cand = float(np.asarray(sol).reshape(())) + rng.normal() * 0.5
            else:
                cand = np.asarray(sol) + rng.normal(size=problem.decision_dimension)
            assert best <= problem.scalarized_value(cand, w) + 1e-9


@pytest.mark.parametrize(
    "problem",
    [
        Quadratic1d(1.0, 4.0),
        GearToy(9.0),
        fig1_toy_bandit(arms=10, beta=0.25),
    ],
    ids=["quad1d", "gear", "bandit"],
)
def test_front_monotone_tradeoff(problem):
    ws = np.linspace(0.0, 1.0, 101)
    points = np.array([problem.pf_point(w) for w in ws])
    assert np.all(np.diff(points[:, 0]) <= 1e-9)
    assert np.all(np.diff(points[:, 1]) >= -1e-9)


def test_closed_form_speeds_match_fd_all_instances():
    instances = [
        Quadratic1d(1.0, 4.0),
        QuadraticNd([[2.0, 0.3], [0.3, 1.0]], np.eye(2), [0.0, 0.0], [1.0, 0.5]),
        GearToy(4.0),
        fig1_toy_bandit(arms=6, beta=0.5),
    ]
    for problem in instances:
        for w in np.linspace(0.0, 1.0, 9):
            fd = geometry.speed_finite_difference(problem, w)
            assert problem.closed_form_speed(w) == pytest.approx(fd, rel=1e-3)


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------


def test_problem_from_config_kinds():
    assert isinstance(problem_from_config({"kind": "quad1d", "q1": 1, "q2": 4}), Quadratic1d)
    assert isinstance(problem_from_config({"kind": "gear", "p": 3.0}), GearToy)
    assert isinstance(
        problem_from_config({"kind": "fig1_bandit", "arms": 10, "beta": 0.3}),
        EntropicBandit,
    )
    nd = problem_from_config(
        {"kind": "quad_nd", "q1": [[1.0]], "q2": [[2.0]], "b1": [0.0], "b2": [1.0]}
    )
    assert isinstance(nd, QuadraticNd)
    mdp = problem_from_config({"kind": "grid_mdp", "map": list(DEFAULT_GRID_MAP)})
    assert isinstance(mdp, TabularKlMdp)


def test_problem_from_config_errors():
    with pytest.raises(ParameterError):
        problem_from_config({})
    with pytest.raises(ParameterError):
        problem_from_config({"kind": "nope"})
    with pytest.raises(ParameterError):
        problem_from_config({"kind": "gear"})
