import numpy as np
import pytest

from surfpf.bandit_estimation import (
    cdf_error_experiment,
    estimate_rewards,
    estimated_cdf,
    simulate_pulls,
)
from surfpf.cdf import sup_distance
from surfpf.errors import (
    BudgetError,
    CoverageError,
    DegenerateFrontError,
    ParameterError,
)
from surfpf.geometry import cdf_from_speed
from surfpf.problems import EntropicBandit, fig1_toy_bandit


def test_noiseless_pulls_recover_truth():
    truth = fig1_toy_bandit(arms=5, beta=0.5)
    data = simulate_pulls(truth, 23, noise_sigma=0.0, seed=0)
    est = estimate_rewards(data, 5)
    np.testing.assert_allclose(est.r1_hat, truth.r1, atol=1e-15)
    np.testing.assert_allclose(est.r2_hat, truth.r2, atol=1e-15)


def test_round_robin_allocation():
    truth = fig1_toy_bandit(arms=4, beta=0.5)
    data = simulate_pulls(truth, 10, noise_sigma=0.1, seed=1)
    counts = np.bincount(data.arms, minlength=4)
    assert set(counts) <= {10 // 4, 10 // 4 + 1}
    assert counts.sum() == 10


def test_simulate_deterministic_under_seed():
    truth = fig1_toy_bandit(arms=6, beta=0.5)
    a = simulate_pulls(truth, 100, noise_sigma=0.5, seed=42)
    b = simulate_pulls(truth, 100, noise_sigma=0.5, seed=42)
    assert np.array_equal(a.rewards1, b.rewards1)
    assert np.array_equal(a.rewards2, b.rewards2)


def test_budget_error():
    truth = fig1_toy_bandit(arms=8, beta=0.5)
    with pytest.raises(BudgetError):
        simulate_pulls(truth, 7, noise_sigma=0.5, seed=0)


def test_estimation_error_concentration():
    # Monte-Carlo analogue of the uniform concentration bound.
    truth = fig1_toy_bandit(arms=20, beta=0.25)
    hits = 0
    for seed in range(100):
        data = simulate_pulls(truth, 20_000, noise_sigma=0.5, seed=seed)
        est = estimate_rewards(data, 20)
        worst = max(
            np.abs(est.r1_hat - truth.r1).max(),
            np.abs(est.r2_hat - truth.r2).max(),
        )
        hits += worst <= 0.05
    assert hits >= 95


def test_estimate_rewards_single_record_per_arm():
    truth = fig1_toy_bandit(arms=3, beta=0.5)
    data = simulate_pulls(truth, 3, noise_sigma=0.3, seed=5)
    est = estimate_rewards(data, 3)
    np.testing.assert_allclose(est.r1_hat[data.arms], data.rewards1)
    np.testing.assert_allclose(est.counts, [1, 1, 1])


def test_estimate_rewards_duplicates_mean_invariant():
    truth = fig1_toy_bandit(arms=2, beta=0.5)
    data = simulate_pulls(truth, 4, noise_sigma=0.0, seed=0)
    doubled = type(data)(
        arms=np.concatenate([data.arms, data.arms]),
        rewards1=np.concatenate([data.rewards1, data.rewards1]),
        rewards2=np.concatenate([data.rewards2, data.rewards2]),
        pull_budget=8,
    )
    np.testing.assert_allclose(
        estimate_rewards(data, 2).r1_hat, estimate_rewards(doubled, 2).r1_hat
    )


def test_estimate_rewards_coverage_error():
    truth = fig1_toy_bandit(arms=3, beta=0.5)
    data = simulate_pulls(truth, 6, noise_sigma=0.0, seed=0)
    with pytest.raises(CoverageError, match="arm 3"):
        estimate_rewards(data, 4)


def test_plug_in_consistency_with_truth():
    truth = fig1_toy_bandit(arms=10, beta=0.25)
    data = simulate_pulls(truth, 50, noise_sigma=0.0, seed=0)
    est = estimate_rewards(data, 10)
    phi_hat = estimated_cdf(est, truth.r0, truth.beta, grid_size=513)
    phi_true = cdf_from_speed(truth.closed_form_speed, grid_size=513)
    assert sup_distance(phi_hat, phi_true) <= 1e-10


def test_swap_symmetry():
    truth = fig1_toy_bandit(arms=8, beta=0.5)
    data = simulate_pulls(truth, 800, noise_sigma=0.5, seed=3)
    est = estimate_rewards(data, 8)
    phi = estimated_cdf(est, truth.r0, truth.beta, grid_size=513)
    swapped = type(est)(r1_hat=est.r2_hat, r2_hat=est.r1_hat, counts=est.counts)
    phi_swap = estimated_cdf(swapped, truth.r0, truth.beta, grid_size=513)
    for w in np.linspace(0.0, 1.0, 21):
        assert phi_swap.eval(w) == pytest.approx(1.0 - phi.eval(1.0 - w), abs=1e-8)


def test_degenerate_estimates_rejected():
    est_cls = estimate_rewards(
        simulate_pulls(fig1_toy_bandit(arms=3, beta=0.5), 6, 0.0, 0), 3
    )
    same = type(est_cls)(
        r1_hat=est_cls.r1_hat, r2_hat=est_cls.r1_hat.copy(), counts=est_cls.counts
    )
    with pytest.raises(DegenerateFrontError):
        estimated_cdf(same, np.log(np.full(3, 1 / 3)), 0.5)


def test_experiment_noiseless_errors_tiny():
    truth = fig1_toy_bandit(arms=6, beta=0.5)
    rows = cdf_error_experiment(
        truth, [10, 100], trials=3, noise_sigma=0.0, seed=0, grid_size=257
    )
    for row in rows:
        assert row.mean_sup_error <= 1e-8


def test_experiment_error_shrinks_with_budget():
    truth = fig1_toy_bandit(arms=10, beta=0.25)
    rows = cdf_error_experiment(
        truth, [100, 10_000], trials=5, noise_sigma=0.5, seed=0, grid_size=257
    )
    by_pulls = {r.pulls: r.mean_sup_error for r in rows}
    assert by_pulls[10_000] < by_pulls[100]


def test_experiment_rows_sorted_and_reproducible():
    truth = fig1_toy_bandit(arms=5, beta=0.5)
    a = cdf_error_experiment(truth, [50, 10], trials=2, noise_sigma=0.3, seed=9,
                             grid_size=129)
    b = cdf_error_experiment(truth, [10, 50], trials=2, noise_sigma=0.3, seed=9,
                             grid_size=129)
    assert [r.pulls for r in a] == [10, 50]
    for ra, rb in zip(a, b):
        assert ra == rb


def test_experiment_needs_two_trials():
    truth = fig1_toy_bandit(arms=5, beta=0.5)
    with pytest.raises(ParameterError):
        cdf_error_experiment(truth, [10], trials=1, noise_sigma=0.5, seed=0)
