"""Concrete bi-objective problem instances with closed-form structure.

Each instance exposes the common interface: objective evaluation, an exact
scalarized solve where available, and (optionally) a closed-form traversal
speed and arc-length CDF. Instances are immutable after construction and all
operations are pure, so independent weight solves can run concurrently.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np
import scipy.linalg

from . import cdf as cdf_mod
from . import geometry
from .errors import (
    DegenerateFrontError,
    DomainError,
    NumericalError,
    ParameterError,
    RankError,
    AugmentationError,
    UnsupportedProblemError,
)

__all__ = [
    "BiObjectiveProblem",
    "QuadraticNd",
    "Quadratic1d",
    "GearToy",
    "EntropicBandit",
    "TabularKlMdp",
    "quad_nd_solve",
    "quad_nd_speed",
    "quad_1d_closed_cdf",
    "gear_solve",
    "bandit_solve",
    "bandit_speed",
    "bandit_objectives",
    "mdp_occupancy",
    "mdp_objectives",
    "mdp_speed",
    "grid_mdp_builder",
    "grid_mdp_from_map",
    "grid_mdp_preset",
    "fig1_toy_bandit",
    "problem_from_config",
]

_RANK_TOL = 1e-9


class BiObjectiveProblem:
    """Interface shared by all problem instances.

    Subclasses set the capability flags and override the corresponding
    methods. ``scalarized_objectives`` defaults to ``evaluate_objectives``;
    the gear toy overrides it because its inner solve uses raw quadratics
    while the measured front is a fixed reference curve.
    """

    has_exact_solver = False
    has_closed_form_solve = False  # exact route is analytic, not iterative
    has_closed_form_speed = False
    has_closed_form_cdf = False

    decision_dimension: int

    def evaluate_objectives(self, decision) -> np.ndarray:
        raise NotImplementedError

    def scalarized_objectives(self, decision) -> np.ndarray:
        return self.evaluate_objectives(decision)

    def scalarized_value(self, decision, w: float) -> float:
        g = self.scalarized_objectives(decision)
        return float(w * g[0] + (1.0 - w) * g[1])

    def solve_scalarized_exact(self, w: float):
        raise UnsupportedProblemError(
            f"{type(self).__name__} has no exact scalarized solver"
        )

    def closed_form_speed(self, w: float) -> float:
        raise UnsupportedProblemError(
            f"{type(self).__name__} has no closed-form speed"
        )

    def closed_form_cdf(
        self,
        grid_size: int = cdf_mod.DEFAULT_GRID_SIZE,
        cfg: geometry.QuadratureConfig | None = None,
    ) -> cdf_mod.CdfEstimate:
        raise UnsupportedProblemError(f"{type(self).__name__} has no closed-form CDF")

    def initial_decision(self) -> np.ndarray:
        raise UnsupportedProblemError(
            f"{type(self).__name__} has no default initial decision"
        )

    def pf_point(self, w: float) -> np.ndarray:
        """Objective vector of the exact scalarized solution at w."""
        return self.evaluate_objectives(self.solve_scalarized_exact(w))


def _check_weight(w: float) -> float:
    w = float(w)
    if not (0.0 <= w <= 1.0):
        raise DomainError(f"weight {w} outside [0, 1]")
    return w


# ---------------------------------------------------------------------------
# Quadratic problems
# ---------------------------------------------------------------------------


class QuadraticNd(BiObjectiveProblem):
    """f_m(x) = (x - b_m)^T Q_m (x - b_m) with symmetric positive-definite Q_m."""

    has_exact_solver = True
    has_closed_form_solve = True
    has_closed_form_speed = True

    def __init__(self, q1, q2, b1, b2):
        self.q1 = np.atleast_2d(np.asarray(q1, dtype=float))
        self.q2 = np.atleast_2d(np.asarray(q2, dtype=float))
        self.b1 = np.atleast_1d(np.asarray(b1, dtype=float))
        self.b2 = np.atleast_1d(np.asarray(b2, dtype=float))
        d = self.b1.size
        for name, q in (("Q1", self.q1), ("Q2", self.q2)):
            if q.shape != (d, d):
                raise ParameterError(f"{name} must be {d}x{d}, got {q.shape}")
            if not np.allclose(q, q.T, atol=1e-12):
                raise ParameterError(f"{name} must be symmetric")
            if np.linalg.eigvalsh(q).min() <= 0:
                raise ParameterError(f"{name} must be positive definite")
        self.decision_dimension = d

    def evaluate_objectives(self, decision) -> np.ndarray:
        x = np.asarray(decision, dtype=float)
        e1 = x - self.b1
        e2 = x - self.b2
        return np.array([e1 @ self.q1 @ e1, e2 @ self.q2 @ e2])

    def solve_scalarized_exact(self, w: float) -> np.ndarray:
        return quad_nd_solve(self, w)

    def closed_form_speed(self, w: float) -> float:
        return quad_nd_speed(self, w)

    def initial_decision(self) -> np.ndarray:
        return 0.5 * (self.b1 + self.b2)


def _mixture_factor(p: QuadraticNd, w: float):
    sigma = w * p.q1 + (1.0 - w) * p.q2
    try:
        return scipy.linalg.cho_factor(sigma)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(
            f"mixture matrix not positive definite at w={w} "
            f"(condition estimate {np.linalg.cond(sigma):.3e})"
        ) from exc


def quad_nd_solve(p: QuadraticNd, w: float) -> np.ndarray:
    """Unique scalarized minimizer via a symmetric positive-definite solve."""
    w = _check_weight(w)
    factor = _mixture_factor(p, w)
    rhs = w * (p.q1 @ p.b1) + (1.0 - w) * (p.q2 @ p.b2)
    return scipy.linalg.cho_solve(factor, rhs)


def quad_nd_speed(p: QuadraticNd, w: float) -> float:
    """Traversal speed 2 * ||(-(m1+m3), m2+m3)|| from the mixture bilinear forms."""
    w = _check_weight(w)
    factor = _mixture_factor(p, w)
    d = p.b1 - p.b2
    pw_d = scipy.linalg.cho_solve(factor, w * (p.q1 @ d))  # P(w) d
    u = d - pw_d  # (I - P(w)) d
    a1 = p.q1 @ u
    a2 = p.q2 @ pw_d
    s1 = scipy.linalg.cho_solve(factor, a1)
    s2 = scipy.linalg.cho_solve(factor, a2)
    m1 = a1 @ s1
    m2 = a2 @ s2
    m3 = a2 @ s1
    return 2.0 * math.hypot(m1 + m3, m2 + m3)


class Quadratic1d(BiObjectiveProblem):
    """Scalar quadratics q_m (x - b_m)^2; the CDF has a fully closed form."""

    has_exact_solver = True
    has_closed_form_solve = True
    has_closed_form_speed = True
    has_closed_form_cdf = True

    def __init__(self, q1: float, q2: float, b1: float = 0.0, b2: float = 1.0):
        if q1 <= 0 or q2 <= 0:
            raise ParameterError("q1 and q2 must be positive")
        if b1 == b2:
            raise ParameterError("b1 must differ from b2")
        self.q1 = float(q1)
        self.q2 = float(q2)
        self.b1 = float(b1)
        self.b2 = float(b2)
        self.decision_dimension = 1

    @property
    def ratio(self) -> float:
        return self.q2 / self.q1

    def evaluate_objectives(self, decision) -> np.ndarray:
        x = float(np.asarray(decision).reshape(()))
        return np.array(
            [self.q1 * (x - self.b1) ** 2, self.q2 * (x - self.b2) ** 2]
        )

    def solve_scalarized_exact(self, w: float) -> float:
        w = _check_weight(w)
        denom = w * self.q1 + (1.0 - w) * self.q2
        return (w * self.q1 * self.b1 + (1.0 - w) * self.q2 * self.b2) / denom

    def closed_form_speed(self, w: float) -> float:
        w = _check_weight(w)
        denom = w * self.q1 + (1.0 - w) * self.q2
        scale = 2.0 * self.q1**2 * self.q2**2 * (self.b2 - self.b1) ** 2
        return scale * math.hypot(1.0 - w, w) / denom**3

    def phi_exact(self, w: float) -> float:
        """Closed-form Phi(w); depends on (q1, q2) only through q2/q1."""
        return _quad1d_phi(self.ratio, _check_weight(w))

    def closed_form_cdf(self, grid_size=cdf_mod.DEFAULT_GRID_SIZE, cfg=None):
        return quad_1d_closed_cdf(self, grid_size=grid_size)

    def initial_decision(self) -> float:
        return 0.5 * (self.b1 + self.b2)


def _phi_symmetric(w: float) -> float:
    # Equal-curvature case: the integrand denominator is constant, leaving
    # the asinh antiderivative of sqrt(1 + t^2) with t = 2w - 1.
    t = 2.0 * w - 1.0
    num = t * math.hypot(1.0, t) + math.asinh(t)
    num += math.sqrt(2.0) + math.asinh(1.0)
    return num / (2.0 * math.sqrt(2.0) + 2.0 * math.asinh(1.0))


def _z_of_w(w: float) -> float:
    t = 2.0 * w - 1.0
    return t / (1.0 + math.sqrt(1.0 + t * t))


def _rational_antiderivative(r: float):
    """Antiderivative G_r of -4*sqrt(2)*(1+z^2)^2 / ell_r(z)^3 for r != 1.

    ell_r(z) = (r+1) z^2 + 2(r-1) z - (r+1) factors over its two real roots;
    the coefficients of the order-3 partial fractions follow from derivatives
    of p(z)/(z - other_root)^3 at each root.
    """
    eta = (r - 1.0) / (r + 1.0)
    root = math.sqrt(eta * eta + 1.0)
    a = -eta + root
    b = -eta - root
    c = -4.0 * math.sqrt(2.0) / (r + 1.0) ** 3

    def p(z):
        return (1.0 + z * z) ** 2

    def dp(z):
        return 4.0 * z * (1.0 + z * z)

    def ddp(z):
        return 4.0 + 12.0 * z * z

    def coeffs(pole, other):
        g = pole - other
        c3 = p(pole) / g**3
        c2 = dp(pole) / g**3 - 3.0 * p(pole) / g**4
        c1 = 0.5 * (ddp(pole) / g**3 - 6.0 * dp(pole) / g**4 + 12.0 * p(pole) / g**5)
        return c1, c2, c3

    a1, a2, a3 = coeffs(a, b)
    b1, b2, b3 = coeffs(b, a)

    def G(z: float) -> float:
        za = z - a
        zb = z - b
        return c * (
            a1 * math.log(abs(za))
            - a2 / za
            - 0.5 * a3 / za**2
            + b1 * math.log(abs(zb))
            - b2 / zb
            - 0.5 * b3 / zb**2
        )

    return G


def _quad1d_phi(r: float, w: float) -> float:
    if r <= 0:
        raise ParameterError("curvature ratio must be positive")
    if w == 0.0:
        return 0.0
    if w == 1.0:
        return 1.0
    if r == 1.0:
        return _phi_symmetric(w)
    if r < 1.0:
        # Swapping the two objectives maps (r, w) to (1/r, 1-w).
        return 1.0 - _quad1d_phi(1.0 / r, 1.0 - w)
    G = _rational_antiderivative(r)
    z0 = _z_of_w(0.0)
    z1 = _z_of_w(1.0)
    return (G(_z_of_w(w)) - G(z0)) / (G(z1) - G(z0))


def quad_1d_closed_cdf(
    p: Quadratic1d, grid_size: int = cdf_mod.DEFAULT_GRID_SIZE
) -> cdf_mod.CdfEstimate:
    """Closed-form Phi tabulated on the dense grid (all three ratio cases)."""
    return cdf_mod.from_callable(p.phi_exact, grid_size=grid_size)


# ---------------------------------------------------------------------------
# Gear toy
# ---------------------------------------------------------------------------


class GearToy(BiObjectiveProblem):
    """Fixed front ((1-x)^2, x^2) traversed at a tunable, p-dependent speed.

    The inner solve minimizes the raw quadratics w*(sqrt(p)/2)(x-1)^2 +
    (1-w)*x^2/2, whose minimizer path reparametrizes the fixed front; the
    measured objectives are always the front coordinates.
    """

    has_exact_solver = True
    has_closed_form_solve = True
    has_closed_form_speed = True
    has_closed_form_cdf = True

    def __init__(self, p: float):
        if p < 1.0:
            raise ParameterError(f"gear parameter must be >= 1, got {p}")
        self.p = float(p)
        self.decision_dimension = 1

    def evaluate_objectives(self, decision) -> np.ndarray:
        x = float(np.asarray(decision).reshape(()))
        return np.array([(1.0 - x) ** 2, x * x])

    def scalarized_objectives(self, decision) -> np.ndarray:
        x = float(np.asarray(decision).reshape(()))
        sp = math.sqrt(self.p)
        return np.array([0.5 * sp * (x - 1.0) ** 2, 0.5 * x * x])

    def solve_scalarized_exact(self, w: float) -> float:
        return gear_solve(self, w)

    def closed_form_speed(self, w: float) -> float:
        w = _check_weight(w)
        sp = math.sqrt(self.p)
        x = gear_solve(self, w)
        dx_dw = sp / (1.0 + (sp - 1.0) * w) ** 2
        return 2.0 * dx_dw * math.hypot(1.0 - x, x)

    def phi_exact(self, w: float) -> float:
        # Arc length lives on the fixed front, so Phi is the symmetric-front
        # CDF composed with the solution path.
        return _phi_symmetric(gear_solve(self, _check_weight(w)))

    def closed_form_cdf(self, grid_size=cdf_mod.DEFAULT_GRID_SIZE, cfg=None):
        return cdf_mod.from_callable(self.phi_exact, grid_size=grid_size)

    def initial_decision(self) -> float:
        return 0.5


def gear_solve(p: GearToy, w: float) -> float:
    """Scalarized minimizer sqrt(p) w / (1 + (sqrt(p) - 1) w)."""
    w = _check_weight(w)
    sp = math.sqrt(p.p)
    return sp * w / (1.0 + (sp - 1.0) * w)


# ---------------------------------------------------------------------------
# Entropic bandit
# ---------------------------------------------------------------------------


class EntropicBandit(BiObjectiveProblem):
    """Single-state KL-regularized bandit; everything is available in closed form."""

    has_exact_solver = True
    has_closed_form_solve = True
    has_closed_form_speed = True
    has_closed_form_cdf = True

    def __init__(self, r0, r1, r2, beta: float):
        self.r0 = np.asarray(r0, dtype=float)
        self.r1 = np.asarray(r1, dtype=float)
        self.r2 = np.asarray(r2, dtype=float)
        if beta <= 0:
            raise ParameterError("beta must be positive")
        self.beta = float(beta)
        a = self.r0.size
        if a < 2:
            raise ParameterError("need at least 2 actions")
        if self.r1.shape != (a,) or self.r2.shape != (a,):
            raise ParameterError("reward vectors must share the action count")
        for name, v in (("R0", self.r0), ("R1", self.r1), ("R2", self.r2)):
            if not np.all(np.isfinite(v)):
                raise ParameterError(f"{name} must be finite")
        self.action_count = a
        self.decision_dimension = a

    def evaluate_objectives(self, decision) -> np.ndarray:
        return bandit_objectives(self, decision)

    def solve_scalarized_exact(self, w: float) -> np.ndarray:
        return bandit_solve(self, w)

    def closed_form_speed(self, w: float) -> float:
        return bandit_speed(self, w)

    def closed_form_cdf(self, grid_size=cdf_mod.DEFAULT_GRID_SIZE, cfg=None):
        return geometry.cdf_from_speed(
            self.closed_form_speed, grid_size=grid_size, cfg=cfg
        )

    def initial_decision(self) -> np.ndarray:
        return np.full(self.action_count, 1.0 / self.action_count)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def bandit_solve(b: EntropicBandit, w: float) -> np.ndarray:
    """Closed-form scalarized solution SoftMax(R0 + (w R1 + (1-w) R2) / beta)."""
    w = _check_weight(w)
    logits = b.r0 + (w * b.r1 + (1.0 - w) * b.r2) / b.beta
    return _softmax(logits)


def bandit_speed(b: EntropicBandit, w: float) -> float:
    """Traversal speed from the softmax covariance quadratic form."""
    u = bandit_solve(b, w)
    d = b.r1 - b.r2
    quad = float(u @ (d * d) - (u @ d) ** 2)
    return math.hypot(1.0 - w, w) * quad / b.beta


def bandit_objectives(b: EntropicBandit, u) -> np.ndarray:
    """Objectives beta*(<u, log u> - <R0, u>) - <R_m, u>.

    The state-marginal entropy term of the general MDP objective is constant
    zero for a single state and is dropped, so bandit and MDP values agree.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (b.action_count,):
        raise ParameterError(f"decision must have shape ({b.action_count},)")
    if np.any(u <= 0.0):
        raise DomainError("decision must be strictly positive on the simplex")
    kl = b.beta * (u @ np.log(u) - b.r0 @ u)
    return np.array([kl - b.r1 @ u, kl - b.r2 @ u])


def fig1_toy_bandit(arms: int = 20, beta: float = 0.25) -> EntropicBandit:
    """Toy bandit with rewards x and 1 - x^4 on equispaced arm features."""
    x = np.linspace(0.0, 1.0, arms)
    r0 = np.full(arms, -math.log(arms))
    return EntropicBandit(r0=r0, r1=x, r2=1.0 - x**4, beta=beta)


# ---------------------------------------------------------------------------
# Tabular KL-regularized MDP
# ---------------------------------------------------------------------------


class TabularKlMdp(BiObjectiveProblem):
    """Finite MDP with bi-objective rewards and KL regularization to a reference.

    The decision variable is the normalized occupancy vector on the flow
    polytope; objectives are the strongly convex regularized values.
    """

    has_exact_solver = True
    has_closed_form_speed = True

    def __init__(
        self,
        state_count: int,
        action_count: int,
        transitions,
        r1,
        r2,
        gamma: float,
        rho,
        beta: float,
        reference_log,
        metadata: dict | None = None,
    ):
        s, a = int(state_count), int(action_count)
        self.state_count = s
        self.action_count = a
        self.transitions = np.asarray(transitions, dtype=float)
        self.r1 = np.asarray(r1, dtype=float)
        self.r2 = np.asarray(r2, dtype=float)
        self.rho = np.asarray(rho, dtype=float)
        self.reference_log = np.asarray(reference_log, dtype=float)
        if self.transitions.shape != (s * a, s):
            raise ParameterError(
                f"transition matrix must be {(s * a, s)}, got {self.transitions.shape}"
            )
        if np.any(self.transitions < 0) or np.any(
            np.abs(self.transitions.sum(axis=1) - 1.0) > 1e-12
        ):
            raise ParameterError("every transition row must be a distribution")
        if self.rho.shape != (s,) or abs(self.rho.sum() - 1.0) > 1e-12 or np.any(
            self.rho < 0
        ):
            raise ParameterError("rho must be a distribution over states")
        # gamma = 0 (the myopic case) is allowed for solver tests.
        if not (0.0 <= gamma < 1.0):
            raise ParameterError(f"gamma must lie in [0, 1), got {gamma}")
        if beta <= 0:
            raise ParameterError("beta must be positive")
        self.gamma = float(gamma)
        self.beta = float(beta)
        if self.r1.shape != (s * a,) or self.r2.shape != (s * a,):
            raise ParameterError("reward vectors must have length S*A")
        if self.reference_log.shape != (s * a,):
            raise ParameterError("reference_log must have length S*A")
        ref = np.exp(self.reference_log).reshape(s, a)
        if np.any(np.abs(ref.sum(axis=1) - 1.0) > 1e-8):
            raise ParameterError("reference_log rows must exponentiate to distributions")
        self.decision_dimension = s * a
        self.metadata = dict(metadata or {})

        # Per-state summation matrix E and flow Jacobian J = (E - gamma P)^T.
        e = np.zeros((s * a, s))
        for st in range(s):
            e[st * a : (st + 1) * a, st] = 1.0
        self._e = e
        self._flow = e - self.gamma * self.transitions
        sv = np.linalg.svd(self._flow, compute_uv=False)
        if sv.min() <= _RANK_TOL * max(sv.max(), 1.0):
            raise RankError(
                "flow matrix numerically rank-deficient "
                f"(min singular value {sv.min():.3e}); transition data malformed"
            )

    @property
    def reference_policy(self) -> np.ndarray:
        return np.exp(self.reference_log).reshape(self.state_count, self.action_count)

    def evaluate_objectives(self, decision) -> np.ndarray:
        return mdp_objectives(self, decision)

    def solve_scalarized_exact(self, w: float) -> np.ndarray:
        from . import solvers  # local import; solvers dispatches on problem types

        return solvers.solve_exact(self, w).decision

    def closed_form_speed(self, w: float) -> float:
        return mdp_speed(self, _check_weight(w), self.solve_scalarized_exact(w))

    def initial_decision(self) -> np.ndarray:
        return mdp_occupancy(self, self.reference_policy)

    def quadrature_cdf(
        self,
        grid_size: int = 257,
        cfg: geometry.QuadratureConfig | None = None,
    ) -> cdf_mod.CdfEstimate:
        """Reference Phi via quadrature of the exact-solve speed formula."""
        if cfg is None:
            cfg = geometry.QuadratureConfig(panels=2 * (grid_size - 1))
        return geometry.cdf_from_speed(
            self.closed_form_speed, grid_size=grid_size, cfg=cfg
        )


def mdp_occupancy(m: TabularKlMdp, policy) -> np.ndarray:
    """Normalized discounted occupancy of a policy.

    Solves the state flow system for d, then splits each state's mass across
    actions by the policy. The result satisfies the occupancy constraints to
    solver precision and sums to one.
    """
    pi = np.asarray(policy, dtype=float)
    s, a = m.state_count, m.action_count
    if pi.shape != (s, a):
        raise ParameterError(f"policy must be {s}x{a}, got {pi.shape}")
    if np.any(pi < 0) or np.any(np.abs(pi.sum(axis=1) - 1.0) > 1e-9):
        raise ParameterError("policy rows must be distributions")
    # P_pi[s, s'] = sum_a pi(a|s) P[(s,a), s']
    p_pi = np.einsum("sa,sat->st", pi, m.transitions.reshape(s, a, s))
    try:
        d = np.linalg.solve(np.eye(s) - m.gamma * p_pi.T, (1.0 - m.gamma) * m.rho)
    except np.linalg.LinAlgError as exc:
        raise RankError("singular flow system; transition data malformed") from exc
    d = np.maximum(d, 0.0)
    return (d[:, None] * pi).reshape(s * a)


def _xlogx(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def mdp_objectives(m: TabularKlMdp, x) -> np.ndarray:
    """Strongly convex objectives on the occupancy polytope.

    f_m(x) = beta(<x, log x> - <E^T x, log E^T x> - <R0, x>) - <R_m, x>.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (m.decision_dimension,):
        raise ParameterError(f"occupancy must have length {m.decision_dimension}")
    d = m._e.T @ x
    reachable = np.repeat(d > 1e-12, m.action_count)
    if np.any(x[reachable] <= 0.0):
        raise DomainError("occupancy must be strictly positive at reachable pairs")
    if np.any(x < 0.0):
        raise DomainError("occupancy must be nonnegative")
    kl = m.beta * (_xlogx(x).sum() - _xlogx(d).sum() - m.reference_log @ x)
    return np.array([kl - m.r1 @ x, kl - m.r2 @ x])


def mdp_speed(
    m: TabularKlMdp, w: float, x_star, c_aug: float | None = None
) -> float:
    """Traversal speed from the constraint-augmented Hessian at the exact solution.

    The augmentation constant doubles (up to 5 times) if the augmented
    Hessian fails its positive-definiteness check.
    """
    w = _check_weight(w)
    x = np.asarray(x_star, dtype=float)
    if np.any(x <= 0):
        raise DomainError("x_star must be strictly positive (interior solution)")
    if c_aug is None:
        c_aug = m.beta * m.state_count * m.action_count
    if c_aug <= 0:
        raise ParameterError("c_aug must be positive")
    d_state = m._e.T @ x
    j = m._flow.T  # S x SA
    jtj = m._flow @ m._flow.T
    base = m.beta * (
        np.diag(1.0 / x) - (m._e * (1.0 / d_state)) @ m._e.T
    )
    diff = m.r1 - m.r2
    last_exc: Exception | None = None
    for _ in range(6):
        h = base + c_aug * jtj
        try:
            factor = scipy.linalg.cho_factor(h)
        except scipy.linalg.LinAlgError as exc:
            last_exc = exc
            c_aug *= 2.0
            continue
        hinv_d = scipy.linalg.cho_solve(factor, diff)
        hinv_jt = scipy.linalg.cho_solve(factor, j.T)
        schur = j @ hinv_jt
        corr = hinv_jt @ np.linalg.solve(schur, j @ hinv_d)
        val = diff @ (hinv_d - corr)
        return math.hypot(1.0 - w, w) * abs(float(val))
    raise AugmentationError(
        "augmented Hessian not positive definite after 5 doublings; "
        "pass a larger c_aug"
    ) from last_exc


# ---------------------------------------------------------------------------
# Grid MDP builder (treasure-hunt style)
# ---------------------------------------------------------------------------

_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))  # up, down, left, right


def grid_mdp_builder(
    rows: int,
    cols: int,
    obstacles,
    treasures,
    gamma: float,
    beta: float,
    start: tuple[int, int] = (0, 0),
) -> TabularKlMdp:
    """Deterministic 4-action grid MDP with time/treasure trade-off rewards.

    Moving off the grid or into an obstacle stays in place. r1 is -1 per step
    at every grid cell; r2 pays the treasure value at treasure cells. Treasure
    cells transition to an absorbing zero-reward terminal state, approximating
    episode termination in the discounted objective. The reference policy is
    uniform over the four actions.
    """
    obstacles = {tuple(c) for c in obstacles}
    treasures = {tuple(k): float(v) for k, v in dict(treasures).items()}
    if not treasures:
        raise ParameterError("need at least one treasure")
    start = tuple(start)

    def in_grid(cell):
        return 0 <= cell[0] < rows and 0 <= cell[1] < cols

    for cell in obstacles | set(treasures) | {start}:
        if not in_grid(cell):
            raise ParameterError(f"cell {cell} outside the {rows}x{cols} grid")
    if start in obstacles:
        raise ParameterError("start cell is an obstacle")
    if set(treasures) & obstacles:
        raise ParameterError("treasure cells cannot be obstacles")

    cells = [
        (r, c) for r in range(rows) for c in range(cols) if (r, c) not in obstacles
    ]
    index = {cell: i for i, cell in enumerate(cells)}
    s = len(cells) + 1  # plus absorbing terminal
    terminal = s - 1
    a = len(_MOVES)

    p = np.zeros((s * a, s))
    r1 = np.zeros(s * a)
    r2 = np.zeros(s * a)
    for cell, i in index.items():
        for ai, (dr, dc) in enumerate(_MOVES):
            row = i * a + ai
            if cell in treasures:
                p[row, terminal] = 1.0
                r2[row] = treasures[cell]
            else:
                nxt = (cell[0] + dr, cell[1] + dc)
                if not in_grid(nxt) or nxt in obstacles:
                    nxt = cell
                p[row, index[nxt]] = 1.0
            r1[row] = -1.0
    for ai in range(a):
        p[terminal * a + ai, terminal] = 1.0

    rho = np.zeros(s)
    rho[index[start]] = 1.0
    reference_log = np.full(s * a, -math.log(a))

    metadata: dict = {"rows": rows, "cols": cols, "start": start, "warnings": []}
    reachable = _reachable_cells(start, index, obstacles, treasures, rows, cols)
    unreachable = sorted(set(treasures) - reachable)
    if unreachable:
        metadata["warnings"].append(f"unreachable treasures: {unreachable}")

    return TabularKlMdp(
        state_count=s,
        action_count=a,
        transitions=p,
        r1=r1,
        r2=r2,
        gamma=gamma,
        rho=rho,
        beta=beta,
        reference_log=reference_log,
        metadata=metadata,
    )


def _reachable_cells(start, index, obstacles, treasures, rows, cols):
    seen = {start}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        if cell in treasures:
            continue  # absorbing once collected
        for dr, dc in _MOVES:
            nxt = (cell[0] + dr, cell[1] + dc)
            if (
                0 <= nxt[0] < rows
                and 0 <= nxt[1] < cols
                and nxt not in obstacles
                and nxt not in seen
            ):
                seen.add(nxt)
                queue.append(nxt)
    return seen


def grid_mdp_from_map(map_rows, gamma: float, beta: float) -> TabularKlMdp:
    """Build a grid MDP from ASCII rows: '#' obstacle, digit treasure value,
    'S' start, '.' water."""
    rows = len(map_rows)
    if rows == 0:
        raise ParameterError("empty map")
    cols = len(map_rows[0])
    obstacles = set()
    treasures = {}
    start = None
    for r, line in enumerate(map_rows):
        if len(line) != cols:
            raise ParameterError(f"map row {r} has length {len(line)}, expected {cols}")
        for c, ch in enumerate(line):
            if ch == "#":
                obstacles.add((r, c))
            elif ch == "S":
                if start is not None:
                    raise ParameterError("multiple start cells")
                start = (r, c)
            elif ch.isdigit() and ch != "0":
                treasures[(r, c)] = float(ch)
            elif ch != ".":
                raise ParameterError(f"unknown map character {ch!r} at {(r, c)}")
    if start is None:
        raise ParameterError("map has no start cell 'S'")
    return grid_mdp_builder(
        rows, cols, obstacles, treasures, gamma=gamma, beta=beta, start=start
    )


DEFAULT_GRID_MAP = (
    "S....",
    "1....",
    "#3...",
    "##5.9",
)


def grid_mdp_preset(gamma: float = 0.95, beta: float = 1.5) -> TabularKlMdp:
    """Default 4x5 treasure-grid preset at desk scale."""
    return grid_mdp_from_map(DEFAULT_GRID_MAP, gamma=gamma, beta=beta)


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------


def problem_from_config(spec: dict) -> BiObjectiveProblem:
    """Instantiate a problem from a JSON-style preset dictionary."""
    if "kind" not in spec:
        raise ParameterError("problem config needs a 'kind' key")
    kind = spec["kind"]
    params = {k: v for k, v in spec.items() if k != "kind"}
    try:
        if kind == "quad_nd":
            return QuadraticNd(
                q1=params["q1"], q2=params["q2"], b1=params["b1"], b2=params["b2"]
            )
        if kind == "quad1d":
            return Quadratic1d(
                q1=params["q1"],
                q2=params["q2"],
                b1=params.get("b1", 0.0),
                b2=params.get("b2", 1.0),
            )
        if kind == "gear":
            return GearToy(p=params["p"])
        if kind == "bandit":
            return EntropicBandit(
                r0=params["r0"], r1=params["r1"], r2=params["r2"], beta=params["beta"]
            )
        if kind == "fig1_bandit":
            return fig1_toy_bandit(
                arms=params.get("arms", 20), beta=params.get("beta", 0.25)
            )
        if kind == "grid_mdp":
            if "map" in params:
                return grid_mdp_from_map(
                    params["map"],
                    gamma=params.get("gamma", 0.95),
                    beta=params.get("beta", 1.5),
                )
            return grid_mdp_preset(
                gamma=params.get("gamma", 0.95), beta=params.get("beta", 1.5)
            )
    except KeyError as exc:
        raise ParameterError(f"problem config missing key {exc}") from exc
    raise ParameterError(f"unknown problem kind {kind!r}")
