"""Outer minimization of the profile divergence over theta.

The profile is derivative-free minimized: bracket scan plus golden section
for scalar parameters, restarted Nelder-Mead otherwise.  Infeasible probes
(no weights satisfying the moment constraints) show up as +inf profile
values and are skipped.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .divergences import DivergenceSpec
from .dual import DualSolution, SolverOptions, solve_inner, solve_inner_el
from .errors import NonFiniteMoment
from .models import MomentModel, default_theta_box, jacobian_stack

__all__ = ["EstimateStatus", "EstimateOptions", "EstimateResult",
           "profile_divergence", "initial_theta", "estimate"]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class EstimateStatus(enum.Enum):
    CONVERGED = "converged"
    BOUNDARY_HIT = "boundary_hit"
    NO_FEASIBLE_REGION = "no_feasible_region"


@dataclass(frozen=True)
class EstimateOptions:
    grid_points: int = 64
    theta_tol: float = 1e-9
    starts: int = 5
    solver: SolverOptions = SolverOptions()
    el_fast_path: bool = True  # reduced ell-dimensional objective for KLm


@dataclass
class EstimateResult:
    theta_hat: np.ndarray
    value: float
    inner: Optional[DualSolution]
    trace: list = field(default_factory=list)
    status: EstimateStatus = EstimateStatus.CONVERGED

    @property
    def converged(self) -> bool:
        return self.status is not EstimateStatus.NO_FEASIBLE_REGION


def _solve_at(spec, model, sample, theta, opts: EstimateOptions) -> DualSolution:
    if opts.el_fast_path and spec.name == "KLm":
        return solve_inner_el(model, sample, theta, opts.solver)
    return solve_inner(spec, model, sample, theta, opts.solver)


def profile_divergence(
    spec: DivergenceSpec,
    model: MomentModel,
    sample: np.ndarray,
    theta: np.ndarray,
    opts: EstimateOptions = EstimateOptions(),
) -> float:
    """Inner dual value at theta; +inf when no feasible weights exist."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    try:
        sol = _solve_at(spec, model, sample, theta, opts)
    except NonFiniteMoment:
        return np.inf
    if not sol.converged:
        return np.inf
    return sol.value


def initial_theta(model: MomentModel, sample: np.ndarray) -> np.ndarray:
    """Starting point: model-specific initializer or the box center."""
    if model.init is not None:
        return np.atleast_1d(np.asarray(model.init(sample), dtype=float))
    box = model.theta_box if model.theta_box is not None else default_theta_box(model, sample)
    return 0.5 * (box[:, 0] + box[:, 1])


def _resolve_box(model: MomentModel, sample: np.ndarray) -> np.ndarray:
    if model.theta_box is not None:
        return np.asarray(model.theta_box, dtype=float)
    return default_theta_box(model, sample)


def estimate(
    spec: DivergenceSpec,
    model: MomentModel,
    sample: np.ndarray,
    opts: EstimateOptions = EstimateOptions(),
) -> EstimateResult:
    """Minimize the profile divergence over the parameter box."""
    box = _resolve_box(model, sample)
    trace: list[tuple[np.ndarray, float]] = []

    def profile(theta):
        v = profile_divergence(spec, model, sample, theta, opts)
        trace.append((np.atleast_1d(np.asarray(theta, dtype=float)).copy(), v))
        return v

    if model.d == 1:
        theta_best = _minimize_1d(profile, box[0], opts)
    else:
        theta_best = _minimize_nm(profile, box, initial_theta(model, sample), opts)

    if theta_best is None:
        center = 0.5 * (box[:, 0] + box[:, 1])
        return EstimateResult(theta_hat=center, value=np.inf, inner=None,
                              trace=trace, status=EstimateStatus.NO_FEASIBLE_REGION)

    # the reported minimizer is the best point ever probed, so the result
    # value never exceeds any traced value
    finite = [(tuple(th), v, th) for th, v in trace if np.isfinite(v)]
    vmin = min(v for _, v, _ in finite)
    theta_hat = min(th_key for th_key, v, _ in finite if v <= vmin + 1e-12)
    theta_hat = np.asarray(theta_hat, dtype=float)

    inner = _solve_at(spec, model, sample, theta_hat, opts)
    if inner.converged and not model.non_smooth:
        theta_hat, inner = _polish(spec, model, sample, theta_hat, inner, opts, box)
    status = EstimateStatus.CONVERGED
    if np.any(theta_hat - box[:, 0] <= opts.theta_tol) or \
       np.any(box[:, 1] - theta_hat <= opts.theta_tol):
        status = EstimateStatus.BOUNDARY_HIT
    return EstimateResult(theta_hat=theta_hat, value=float(inner.value),
                          inner=inner, trace=trace, status=status)


def _envelope_gradient(model, sample, theta, sol: DualSolution) -> np.ndarray:
    """Gradient of the profile at theta from the attained dual solution.

    By the envelope theorem only the explicit theta dependence contributes:
    d/dtheta [t0 - (1/n) sum conj(t0 + t.f_i)] = -sum_i w_i (df_i/dtheta) t.
    """
    J = jacobian_stack(model, sample, theta)  # (n, d, ell)
    t = sol.t_bar[1:]
    return -np.einsum("i,ikl,l->k", sol.weights, J, t)


def _polish(spec, model, sample, theta, inner, opts: EstimateOptions, box):
    """Newton refinement of the outer stationarity condition.

    The derivative-free search localizes the minimizer to roughly the square
    root of the value resolution; root-finding on the envelope gradient
    recovers the remaining digits.  Falls back to the unpolished point
    whenever a probe loses feasibility or the step stops helping.
    """
    th, sol = np.asarray(theta, dtype=float).copy(), inner
    scale = np.maximum(1.0, np.abs(th))
    g = _envelope_gradient(model, sample, th, sol)
    gnorm = float(np.abs(g).max())
    d = th.size
    for _ in range(30):
        if gnorm <= 1e-14:
            break
        H = np.empty((d, d))
        hstep = 1e-6 * scale
        ok = True
        for k in range(d):
            e = np.zeros(d)
            e[k] = hstep[k]
            sp = _solve_at(spec, model, sample, th + e, opts)
            sm = _solve_at(spec, model, sample, th - e, opts)
            if not (sp.converged and sm.converged):
                ok = False
                break
            H[:, k] = (_envelope_gradient(model, sample, th + e, sp)
                       - _envelope_gradient(model, sample, th - e, sm)) / (2.0 * hstep[k])
        if not ok:
            break
        try:
            delta = np.linalg.solve(0.5 * (H + H.T), -g)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(delta)):
            break
        step, accepted = 1.0, False
        while step > 2.0 ** -20:
            cand = np.clip(th + step * delta, box[:, 0], box[:, 1])
            sc = _solve_at(spec, model, sample, cand, opts)
            if sc.converged:
                gc = _envelope_gradient(model, sample, cand, sc)
                gcn = float(np.abs(gc).max())
                if gcn < gnorm:
                    th, sol, g, gnorm = cand, sc, gc, gcn
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
        if float(np.abs(step * delta).max()) <= 1e-13 * float(scale.max()):
            break
    # a stationary point of the profile is only kept when it does not sit
    # above the point the search already found
    if sol.converged and sol.value <= inner.value + 1e-12:
        return th, sol
    return np.asarray(theta, dtype=float), inner


def _minimize_1d(profile, bounds, opts: EstimateOptions):
    lo, hi = float(bounds[0]), float(bounds[1])
    grid = np.linspace(lo, hi, opts.grid_points)
    values = np.array([profile(np.array([g])) for g in grid])
    if not np.any(np.isfinite(values)):
        return None
    i = int(np.argmin(values))  # ties resolve to the smallest theta
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = profile(np.array([c]))
    fd = profile(np.array([d]))
    while b - a > opts.theta_tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = profile(np.array([c]))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = profile(np.array([d]))
    return np.array([0.5 * (a + b)])


# Kronecker sequence fractions for deterministic, box-relative restarts
_ALPHAS = np.array([0.6180339887498949, 0.4142135623730951, 0.7320508075688772,
                    0.2360679774997897, 0.3166247903553998, 0.6055512754639893])


def _minimize_nm(profile, box, x0, opts: EstimateOptions):
    from scipy.optimize import minimize

    d = box.shape[0]
    span = box[:, 1] - box[:, 0]
    starts = [np.clip(x0, box[:, 0], box[:, 1])]
    for k in range(1, opts.starts):
        frac = (k * _ALPHAS[:d]) % 1.0
        starts.append(box[:, 0] + (0.1 + 0.8 * frac) * span)

    def fun(theta):
        if np.any(theta < box[:, 0]) or np.any(theta > box[:, 1]):
            return np.inf
        return profile(theta)

    any_finite = False
    for s in starts:
        if not np.isfinite(fun(s)):
            continue
        any_finite = True
        minimize(fun, s, method="Nelder-Mead",
                 options={"xatol": opts.theta_tol, "fatol": 1e-12,
                          "maxiter": 400 * d, "maxfev": 400 * d})
    if not any_finite:
        return None
    return np.zeros(d)  # placeholder; caller picks the best traced point
