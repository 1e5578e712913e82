"""Inner (fixed-theta) dual solver and projected weights.

For a given theta, maximizes

    t0 - (1/n) sum_i conj(t0 + t . f(x_i, theta))

over (t0, t) by damped Newton, and recovers the projected weights
w_i = conj'(s_i) / n.  The conjugate domain acts as a barrier: backtracking
never lets any s_i leave it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .divergences import DivergenceSpec
from .errors import DomainError
from .models import MomentModel, moment_matrix

__all__ = ["SolverStatus", "SolverOptions", "DualSolution",
           "dual_objective", "solve_inner", "solve_inner_el"]

_MARGIN = 1e-12
_ARMIJO = 1e-4


class SolverStatus(enum.Enum):
    CONVERGED = "converged"
    NO_FEASIBLE_WEIGHTS = "no_feasible_weights"
    MAX_ITERATIONS = "max_iterations"
    DOMAIN_COLLAPSE = "domain_collapse"


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 100
    value_cap: float = 1e8


@dataclass
class DualSolution:
    t_bar: np.ndarray          # (1 + ell,), t_bar[0] is t0
    value: float
    weights: Optional[np.ndarray]
    status: SolverStatus
    iterations: int
    grad_norm: float

    @property
    def converged(self) -> bool:
        return self.status is SolverStatus.CONVERGED


def _feasible(spec: DivergenceSpec, s: np.ndarray) -> bool:
    dom = spec.conjugate_domain
    lo = dom.lo + _MARGIN if np.isfinite(dom.lo) else -np.inf
    hi = dom.hi - _MARGIN if np.isfinite(dom.hi) else np.inf
    return bool(np.all(s > lo) and np.all(s < hi))


def _augmented(model: MomentModel, sample: np.ndarray, theta: np.ndarray) -> np.ndarray:
    F = moment_matrix(model, sample, theta)
    return np.column_stack([np.ones(F.shape[0]), F])


def dual_objective(
    spec: DivergenceSpec,
    model: MomentModel,
    sample: np.ndarray,
    theta: np.ndarray,
    t_bar: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian of the dual objective at t_bar."""
    Fb = _augmented(model, sample, theta)
    t_bar = np.asarray(t_bar, dtype=float)
    s = Fb @ t_bar
    if not all(spec.conjugate_domain.interior(si) for si in s):
        raise DomainError("some t_bar . f_bar(x_i) outside the open conjugate domain")
    n = Fb.shape[0]
    value = float(t_bar[0] - spec.conj(s).mean())
    grad = -Fb.T @ spec.conj_prime(s) / n
    grad[0] += 1.0
    hess = -(Fb * spec.conj_second(s)[:, None]).T @ Fb / n
    return value, grad, hess


def _newton_ascent(objective, t0, opts: SolverOptions):
    """Damped Newton ascent of a concave objective with a domain barrier.

    ``objective(t)`` returns (feasible, value, grad, hess); gradient and
    Hessian may be None when infeasible.  Returns (t, value, status,
    iterations, grad_norm).
    """
    t = np.asarray(t0, dtype=float).copy()
    ok, value, grad, hess = objective(t)
    assert ok, "starting point must be feasible"
    for it in range(1, opts.max_iter + 1):
        gnorm = float(np.abs(grad).max())
        if gnorm <= opts.tol:
            return t, value, SolverStatus.CONVERGED, it - 1, gnorm
        if value > opts.value_cap or np.abs(t).max() > 1e8:
            # for slowly growing objectives (log barriers) divergence shows
            # in |t| long before the value cap is reached
            return t, value, SolverStatus.NO_FEASIBLE_WEIGHTS, it - 1, gnorm
        try:
            d = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            d = None
        if d is None or not np.all(np.isfinite(d)) or float(grad @ d) <= 0.0:
            # f_bar components can be collinear on degenerate samples
            k = hess.shape[0]
            try:
                d = np.linalg.solve(hess - 1e-12 * np.eye(k), -grad)
            except np.linalg.LinAlgError:
                return t, value, SolverStatus.DOMAIN_COLLAPSE, it, gnorm
            if not np.all(np.isfinite(d)) or float(grad @ d) <= 0.0:
                d = grad.copy()
        slope = float(grad @ d)
        if slope <= 2.0 * np.finfo(float).eps * max(1.0, abs(value)):
            # the Newton decrement bounds the remaining improvement; once it
            # drops below the rounding floor of the value no further progress
            # is representable in floating point
            return t, value, SolverStatus.CONVERGED, it, gnorm
        step = 1.0
        while step > 2.0 ** -60:
            ok, v_new, g_new, h_new = objective(t + step * d)
            if ok and v_new >= value + _ARMIJO * step * slope:
                break
            step *= 0.5
        else:
            # cannot move without leaving the domain or decreasing: the
            # iterates are pushed against the barrier, which signals that 0
            # is not in the interior of the convex hull of the moments
            return t, value, SolverStatus.NO_FEASIBLE_WEIGHTS, it, gnorm
        t = t + step * d
        value, grad, hess = v_new, g_new, h_new
    gnorm = float(np.abs(grad).max())
    if gnorm <= opts.tol:
        return t, value, SolverStatus.CONVERGED, opts.max_iter, gnorm
    return t, value, SolverStatus.MAX_ITERATIONS, opts.max_iter, gnorm


def solve_inner(
    spec: DivergenceSpec,
    model: MomentModel,
    sample: np.ndarray,
    theta: np.ndarray,
    opts: SolverOptions = SolverOptions(),
) -> DualSolution:
    """Solve the inner dual problem at theta; weights on the sample points."""
    Fb = _augmented(model, sample, theta)
    n = Fb.shape[0]

    def objective(t):
        s = Fb @ t
        if not _feasible(spec, s):
            return False, None, None, None
        with np.errstate(over="ignore"):
            value = float(t[0] - spec.conj(s).mean())
            grad = -Fb.T @ spec.conj_prime(s) / n
            grad[0] += 1.0
            hess = -(Fb * spec.conj_second(s)[:, None]).T @ Fb / n
        if not (np.isfinite(value) and np.all(np.isfinite(grad))
                and np.all(np.isfinite(hess))):
            # unbounded conjugates (exponential growth) can overflow on wild
            # probes; treat those points as outside the working domain
            return False, None, None, None
        return True, value, grad, hess

    t, value, status, iters, gnorm = _newton_ascent(
        objective, np.zeros(1 + model.ell), opts)
    weights = None
    if status is SolverStatus.CONVERGED:
        weights = spec.conj_prime(Fb @ t) / n
    return DualSolution(t_bar=t, value=value, weights=weights,
                        status=status, iterations=iters, grad_norm=gnorm)


def solve_inner_el(
    model: MomentModel,
    sample: np.ndarray,
    theta: np.ndarray,
    opts: SolverOptions = SolverOptions(),
) -> DualSolution:
    """Empirical-likelihood specialization: t0 vanishes identically.

    Maximizes (1/n) sum_i log(1 - t . f(x_i, theta)) over t in R^ell and
    returns weights w_i = 1 / (n (1 - t . f_i)).
    """
    F = moment_matrix(model, sample, theta)
    n = F.shape[0]

    def objective(t):
        s = F @ t
        r = 1.0 - s
        if np.any(r <= _MARGIN):
            return False, None, None, None
        value = float(np.log(r).mean())
        inv = 1.0 / r
        grad = -F.T @ inv / n
        hess = -(F * (inv * inv)[:, None]).T @ F / n
        return True, value, grad, hess

    t, value, status, iters, gnorm = _newton_ascent(
        objective, np.zeros(model.ell), opts)
    weights = None
    if status is SolverStatus.CONVERGED:
        weights = 1.0 / (n * (1.0 - F @ t))
        # the reduced objective has vanishing gradient along escape rays when
        # 0 is outside the hull of the moments; a genuine interior optimum
        # always renormalizes the weights
        if abs(weights.sum() - 1.0) > 1e-6:
            status = SolverStatus.NO_FEASIBLE_WEIGHTS
            weights = None
    return DualSolution(t_bar=np.concatenate([[0.0], t]), value=value,
                        weights=weights, status=status, iterations=iters,
                        grad_norm=gnorm)
