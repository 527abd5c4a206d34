"""Inner solvers for the scalarized subproblems.

Three routes: closed-form dispatch for problems that expose one, soft value
iteration for KL-regularized MDPs (the optimal policy is a softmax of
Q-values against the reference, giving a gamma-contraction), and projected
gradient descent on the simplex for bandit-style decisions. Solvers are
stateless given their config; warm-start payloads are owned by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DivergenceError,
    ParameterError,
    UnsupportedProblemError,
)
from .problems import (
    BiObjectiveProblem,
    EntropicBandit,
    TabularKlMdp,
    bandit_solve,
    mdp_occupancy,
)

__all__ = [
    "InnerSolverConfig",
    "SolverResult",
    "solve_exact",
    "soft_value_iteration",
    "projected_gradient",
    "simplex_projection",
    "run_inner",
]

KINDS = ("closed_form", "soft_value_iteration", "projected_gradient")
EXACT_BELLMAN_TOL = 1e-12
_EXACT_STEP_CAP = 2_000_000
INTERIOR_FLOOR = 1e-12


@dataclass(frozen=True)
class InnerSolverConfig:
    """Inner-solver choice and budget (K steps, tolerance, step size)."""

    kind: str = "closed_form"
    max_steps: int = 1
    tolerance: float = 1e-12
    step_size: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown inner solver kind {self.kind!r}")
        if self.max_steps < 1:
            raise ParameterError("max_steps must be >= 1")
        if self.tolerance <= 0:
            raise ParameterError("tolerance must be positive")
        if self.step_size is not None and self.step_size <= 0:
            raise ParameterError("step_size must be positive")


@dataclass
class SolverResult:
    decision: np.ndarray
    objective: np.ndarray
    steps_used: int
    residual: float
    contraction: float | None = None  # measured successive-iterate factor
    floor_hit: bool = False  # interior floor fired before a log/divide
    extras: dict = field(default_factory=dict)


def solve_exact(problem: BiObjectiveProblem, w: float) -> SolverResult:
    """Exact scalarized solution: analytic where available, else soft VI to
    a 1e-12 Bellman residual for tabular MDPs."""
    if getattr(problem, "has_closed_form_solve", False):
        decision = problem.solve_scalarized_exact(w)
        return SolverResult(
            decision=np.atleast_1d(np.asarray(decision, dtype=float)),
            objective=problem.evaluate_objectives(decision),
            steps_used=1,
            residual=0.0,
        )
    if isinstance(problem, TabularKlMdp):
        return soft_value_iteration(
            problem,
            w,
            steps=_EXACT_STEP_CAP,
            q_init=np.zeros(problem.decision_dimension),
            tolerance=EXACT_BELLMAN_TOL,
        )
    raise UnsupportedProblemError(
        f"no exact solve route for {type(problem).__name__}"
    )


def soft_value_iteration(
    m: TabularKlMdp,
    w: float,
    steps: int,
    q_init,
    tolerance: float = 0.0,
) -> SolverResult:
    """Apply the soft Bellman operator for the scalarized reward.

    V(s) = beta * log sum_a pi_ref(a|s) exp(Q(s,a)/beta), Q = r + gamma P V.
    Stops early once the sup-norm Bellman residual falls below `tolerance`.
    Returns the softmax-against-reference policy's occupancy as the decision,
    the final Q under extras["q"], and the measured contraction factor.
    """
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    q = np.asarray(q_init, dtype=float).copy()
    if q.shape != (m.decision_dimension,):
        raise ParameterError(f"q_init must have length {m.decision_dimension}")
    if not np.all(np.isfinite(q)):
        raise DivergenceError("q_init must be finite")
    s, a = m.state_count, m.action_count
    r = w * m.r1 + (1.0 - w) * m.r2
    ref_log = m.reference_log.reshape(s, a)

    residual = math.inf
    prev_residual = None
    contraction = None
    used = 0
    for _ in range(steps):
        v = m.beta * logsumexp(ref_log + q.reshape(s, a) / m.beta, axis=1)
        q_next = r + m.gamma * (m.transitions @ v)
        if not np.all(np.isfinite(q_next)):
            raise DivergenceError("soft value iteration produced non-finite Q")
        residual = float(np.max(np.abs(q_next - q)))
        # Rounding perturbs each residual by ~eps * |Q| in absolute terms, so
        # ratios lose the gamma + 1e-9 resolution once residuals fall below
        # ~1e-5 of the Q scale; stop recording the contraction there.
        noise_floor = 1e-5 * max(1.0, float(np.max(np.abs(q_next))))
        if prev_residual is not None and prev_residual > noise_floor:
            ratio = residual / prev_residual
            contraction = ratio if contraction is None else max(contraction, ratio)
        prev_residual = residual
        q = q_next
        used += 1
        if residual <= tolerance or residual <= 1e-15:
            break

    logits = ref_log + q.reshape(s, a) / m.beta
    policy = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
    x = mdp_occupancy(m, policy)
    return SolverResult(
        decision=x,
        objective=m.evaluate_objectives(x),
        steps_used=used,
        residual=residual,
        contraction=contraction,
        extras={"q": q},
    )


def simplex_projection(y) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sorted-threshold method)."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ParameterError("input must be finite")
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    j = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / j > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def projected_gradient(
    problem: BiObjectiveProblem,
    w: float,
    steps: int,
    step_size: float | None = None,
    x_init=None,
) -> SolverResult:
    """K steps of gradient descent + simplex projection for simplex decisions.

    Default step size 0.1 * beta (the strong-convexity modulus heuristic for
    entropic bandits). Strictly positive iterates are enforced through a tiny
    interior floor before any log; the result flags whether it fired.
    """
    if not isinstance(problem, EntropicBandit):
        raise UnsupportedProblemError(
            "projected gradient requires a simplex decision domain"
        )
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    if step_size is None:
        step_size = 0.1 * problem.beta
    if step_size <= 0:
        raise ParameterError("step_size must be positive")
    a = problem.action_count
    x = (
        np.full(a, 1.0 / a)
        if x_init is None
        else np.asarray(x_init, dtype=float).copy()
    )
    r_w = w * problem.r1 + (1.0 - w) * problem.r2
    floor_hit = False
    for _ in range(steps):
        clipped = np.maximum(x, INTERIOR_FLOOR)
        if np.any(x < INTERIOR_FLOOR):
            floor_hit = True
        grad = problem.beta * (np.log(clipped) + 1.0 - problem.r0) - r_w
        x = simplex_projection(x - step_size * grad)
    x = np.maximum(x, INTERIOR_FLOOR)
    x = x / x.sum()
    return SolverResult(
        decision=x,
        objective=problem.evaluate_objectives(x),
        steps_used=steps,
        residual=float(
            np.linalg.norm(x - bandit_solve(problem, w))
        ),
        floor_hit=floor_hit,
    )


def run_inner(
    problem: BiObjectiveProblem,
    w: float,
    cfg: InnerSolverConfig,
    warm=None,
) -> tuple[SolverResult, object]:
    """Dispatch one inner solve; returns the result and the next warm-start payload.

    Warm payloads are solver-specific: the Q-vector for soft value iteration,
    the decision for projected gradient, unused for closed forms.
    """
    if cfg.kind == "closed_form":
        result = solve_exact(problem, w)
        return result, result.decision
    if cfg.kind == "soft_value_iteration":
        if not isinstance(problem, TabularKlMdp):
            raise UnsupportedProblemError("soft value iteration needs a tabular MDP")
        q_init = (
            np.zeros(problem.decision_dimension)
            if warm is None
            else np.asarray(warm, dtype=float)
        )
        result = soft_value_iteration(
            problem, w, steps=cfg.max_steps, q_init=q_init, tolerance=0.0
        )
        return result, result.extras["q"]
    if cfg.kind == "projected_gradient":
        result = projected_gradient(
            problem, w, steps=cfg.max_steps, step_size=cfg.step_size, x_init=warm
        )
        return result, result.decision
    raise ParameterError(f"unknown inner solver kind {cfg.kind!r}")
