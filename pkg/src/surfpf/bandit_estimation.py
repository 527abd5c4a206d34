"""Reward estimation for bandits and the CDF-error-vs-pulls experiment.

Arms are pulled round-robin (a fixed balanced allocation), rewards observed
with Gaussian noise, and the plug-in CDF built from the empirical means. The
experiment measures how the sup-norm CDF error decays with the pull budget.

RNG streams: every (pull-budget, trial) pair owns an independent child seed
derived as SeedSequence([seed, budget_index, trial]).generate_state(1)[0],
so trials are reproducible bit-for-bit and independent of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cdf as cdf_mod
from . import geometry
from .errors import BudgetError, CoverageError, DegenerateFrontError, ParameterError
from .problems import EntropicBandit

__all__ = [
    "BanditDataset",
    "RewardEstimate",
    "ExperimentRow",
    "simulate_pulls",
    "estimate_rewards",
    "estimated_cdf",
    "cdf_error_experiment",
]


@dataclass(frozen=True)
class BanditDataset:
    """Offline pull log: arm index plus both observed reward samples."""

    arms: np.ndarray
    rewards1: np.ndarray
    rewards2: np.ndarray
    pull_budget: int


@dataclass(frozen=True)
class RewardEstimate:
    r1_hat: np.ndarray
    r2_hat: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class ExperimentRow:
    pulls: int
    mean_sup_error: float
    std_sup_error: float
    trials: int
    seed: int


def simulate_pulls(
    truth: EntropicBandit, pulls: int, noise_sigma: float, seed
) -> BanditDataset:
    """Round-robin pulls with additive Gaussian noise; deterministic per seed."""
    a = truth.action_count
    if pulls < a:
        raise BudgetError(f"budget {pulls} smaller than the arm count {a}")
    if noise_sigma < 0:
        raise ParameterError("noise_sigma must be nonnegative")
    arms = np.arange(pulls) % a
    rng = np.random.default_rng(seed)
    noise = (
        rng.normal(0.0, noise_sigma, size=(2, pulls))
        if noise_sigma > 0
        else np.zeros((2, pulls))
    )
    return BanditDataset(
        arms=arms,
        rewards1=truth.r1[arms] + noise[0],
        rewards2=truth.r2[arms] + noise[1],
        pull_budget=pulls,
    )


def estimate_rewards(data: BanditDataset, arm_count: int) -> RewardEstimate:
    """Per-arm empirical means; every arm must appear at least once."""
    counts = np.bincount(data.arms, minlength=arm_count)
    if np.any(counts == 0):
        missing = int(np.argmax(counts == 0))
        raise CoverageError(f"arm {missing} has no observations")
    r1 = np.bincount(data.arms, weights=data.rewards1, minlength=arm_count) / counts
    r2 = np.bincount(data.arms, weights=data.rewards2, minlength=arm_count) / counts
    return RewardEstimate(r1_hat=r1, r2_hat=r2, counts=counts)


def estimated_cdf(
    est: RewardEstimate,
    r0,
    beta: float,
    grid_size: int = cdf_mod.DEFAULT_GRID_SIZE,
    cfg: geometry.QuadratureConfig | None = None,
) -> cdf_mod.CdfEstimate:
    """Plug-in CDF: estimated rewards in the closed-form speed, then quadrature."""
    if np.allclose(est.r1_hat, est.r2_hat):
        raise DegenerateFrontError("estimated rewards coincide; front is a point")
    plug_in = EntropicBandit(r0=r0, r1=est.r1_hat, r2=est.r2_hat, beta=beta)
    return geometry.cdf_from_speed(plug_in.closed_form_speed, grid_size=grid_size, cfg=cfg)


def cdf_error_experiment(
    truth: EntropicBandit,
    pull_grid,
    trials: int,
    noise_sigma: float,
    seed: int,
    grid_size: int = cdf_mod.DEFAULT_GRID_SIZE,
    cfg: geometry.QuadratureConfig | None = None,
) -> list[ExperimentRow]:
    """Sup-norm error of the plug-in CDF versus the pull budget.

    For each budget T runs `trials` independent simulate -> estimate -> plug-in
    pipelines and records mean and sample standard deviation of the error to
    the true CDF. Rows come back sorted by T.
    """
    if trials < 2:
        raise ParameterError("need at least 2 trials for a standard deviation")
    budgets = sorted(int(t) for t in pull_grid)
    true_phi = geometry.cdf_from_speed(
        truth.closed_form_speed, grid_size=grid_size, cfg=cfg
    )
    rows = []
    for ti, pulls in enumerate(budgets):
        errors = np.empty(trials)
        for trial in range(trials):
            child = int(
                np.random.SeedSequence([seed, ti, trial]).generate_state(1)[0]
            )
            data = simulate_pulls(truth, pulls, noise_sigma, child)
            est = estimate_rewards(data, truth.action_count)
            phi_hat = estimated_cdf(
                est, truth.r0, truth.beta, grid_size=grid_size, cfg=cfg
            )
            errors[trial] = cdf_mod.sup_distance(phi_hat, true_phi)
        rows.append(
            ExperimentRow(
                pulls=pulls,
                mean_sup_error=float(errors.mean()),
                std_sup_error=float(errors.std(ddof=1)),
                trials=trials,
                seed=seed,
            )
        )
    return rows
