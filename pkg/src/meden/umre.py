"""Equivariant risk correction through the exponential-tilt score.

At the minimum-divergence estimate, the empirical measure is exponentially
tilted onto the moment constraints; the score of the resulting tilted family
and its empirical Fisher matrix yield a first-order approximation of the
minimum risk equivariant (Pitman-type) correction for additive-group models:

    theta_corrected = theta_tilde + fisher^{-1} . mean(score rows).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonAdditiveGroup, NonSmoothModel, SingularFisher
from .estimator import EstimateResult
from .models import Group, MomentModel, jacobian_stack, moment_matrix

__all__ = ["TiltStatus", "TiltSolution", "UmreOptions", "UmreResult",
           "solve_tilt", "score_matrix", "fisher_empirical", "umre_correct"]


class TiltStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"


@dataclass
class TiltSolution:
    t_hat: np.ndarray      # (ell,)
    jac_theta: np.ndarray  # (d, ell)
    jac_t: np.ndarray      # (ell, ell), tilted Gram matrix of f
    t_prime: np.ndarray    # (d, ell)
    status: TiltStatus
    iterations: int
    residual: float

    @property
    def converged(self) -> bool:
        return self.status is TiltStatus.CONVERGED


@dataclass(frozen=True)
class UmreOptions:
    cond_cap: float = 1e10
    ridge: bool = True
    tilt_tol: float = 1e-12
    tilt_max_iter: int = 100


@dataclass
class UmreResult:
    theta_umre: np.ndarray
    correction: np.ndarray
    fisher: np.ndarray
    mean_score: np.ndarray
    cond_fisher: float
    ridged: bool
    tilt: TiltSolution


def solve_tilt(
    model: MomentModel,
    sample: np.ndarray,
    theta: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> TiltSolution:
    """Solve mean_i f(x_i, theta) exp(t . f(x_i, theta)) = 0 for t.

    Newton on t, damped through the convex potential mean_i exp(t . f_i)
    whose gradient is the tilted moment vector.
    """
    if model.f_jac_theta is None or model.non_smooth:
        raise NonSmoothModel(f"tilt requires a smooth moment map ({model.name})")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    F = moment_matrix(model, sample, theta)  # (n, ell)
    n, ell = F.shape
    t = np.zeros(ell)

    def parts(t):
        s = F @ t
        if s.max() > 700.0:  # exp overflow guard
            return None
        e = np.exp(s)
        pot = e.mean()
        h = F.T @ e / n
        gram = (F * e[:, None]).T @ F / n
        return pot, h, gram

    pot, h, gram = parts(t)
    status = TiltStatus.MAX_ITERATIONS
    iters = max_iter
    for it in range(1, max_iter + 1):
        res = float(np.abs(h).max())
        if res <= tol:
            status, iters = TiltStatus.CONVERGED, it - 1
            break
        d = np.linalg.solve(gram, -h)
        if float(-h @ d) <= 2.0 * np.finfo(float).eps * pot:
            # the potential is flat to rounding; finish as pure Newton
            # root-finding on the residual, which still converges
            # quadratically where the line search cannot measure progress
            trial = parts(t + d)
            if trial is None or float(np.abs(trial[1]).max()) >= res:
                status, iters = TiltStatus.CONVERGED, it
                break
            t = t + d
            pot, h, gram = trial
            continue
        step = 1.0
        while step > 2.0 ** -50:
            trial = parts(t + step * d)
            if trial is not None and trial[0] <= pot + 1e-4 * step * float(h @ d):
                break
            step *= 0.5
        else:
            break
        t = t + step * d
        pot, h, gram = trial

    residual = float(np.abs(h).max())
    jac_t = gram  # d h^T / d t: tilted second-moment matrix, symmetric
    jac_theta = _tilt_jac_theta(model, sample, theta, t, F)
    t_prime = -np.linalg.solve(jac_t.T, jac_theta.T).T
    return TiltSolution(t_hat=t, jac_theta=jac_theta, jac_t=jac_t,
                        t_prime=t_prime, status=status, iterations=iters,
                        residual=residual)


def _tilt_jac_theta(model, sample, theta, t, F):
    """d h^T / d theta with h_j = mean f_j exp(t.f): shape (d, ell)."""
    J = jacobian_stack(model, sample, theta)  # (n, d, ell)
    e = np.exp(F @ t)
    # d/d theta_k of f_j e^{t.f} = (J[:,k,j] + f_j * (J[:,k,:] @ t)) e^{t.f}
    jt = J @ t  # (n, d)
    term = J + jt[:, :, None] * F[:, None, :]
    return np.einsum("i,ikj->kj", e, term) / F.shape[0]


def score_matrix(
    model: MomentModel,
    sample: np.ndarray,
    theta: np.ndarray,
    tilt: TiltSolution,
) -> np.ndarray:
    """Per-observation score rows of the tilted family, shape (n, d).

    Row i is t'(theta) f_i + f'_i t, centered by its tilted-weighted mean so
    the tilted expectation of the score is exactly zero.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    F = moment_matrix(model, sample, theta)
    J = jacobian_stack(model, sample, theta)
    raw = F @ tilt.t_prime.T + J @ tilt.t_hat  # (n, d)
    e = np.exp(F @ tilt.t_hat)
    u = e / e.sum()
    return raw - u @ raw


def fisher_empirical(scores: np.ndarray) -> np.ndarray:
    """(1/n) scores^T scores: symmetric positive semidefinite by construction."""
    scores = np.asarray(scores, dtype=float)
    return scores.T @ scores / scores.shape[0]


def umre_correct(
    spec,
    model: MomentModel,
    sample: np.ndarray,
    est: EstimateResult,
    opts: UmreOptions = UmreOptions(),
) -> UmreResult:
    """Apply the additive-group risk correction to an estimate."""
    if model.group is not Group.ADDITIVE:
        raise NonAdditiveGroup(f"model {model.name} is not additive-group invariant")
    if model.non_smooth or model.f_jac_theta is None:
        raise NonSmoothModel(f"model {model.name} has no smooth theta-Jacobian")

    theta = est.theta_hat
    tilt = solve_tilt(model, sample, theta, tol=opts.tilt_tol,
                      max_iter=opts.tilt_max_iter)
    scores = score_matrix(model, sample, theta, tilt)
    fisher = fisher_empirical(scores)
    mean_score = scores.mean(axis=0)

    cond = float(np.linalg.cond(fisher))
    ridged = False
    fisher_used = fisher
    if not np.isfinite(cond) or cond > opts.cond_cap:
        if not opts.ridge:
            raise SingularFisher(
                f"Fisher matrix condition {cond:.3e} exceeds cap {opts.cond_cap:.1e}")
        eps = 1e-8 * np.trace(fisher) / model.d
        if eps <= 0.0:
            raise SingularFisher("Fisher matrix is numerically zero")
        fisher_used = fisher + eps * np.eye(model.d)
        ridged = True

    correction = np.linalg.solve(fisher_used, mean_score)
    return UmreResult(theta_umre=theta + correction, correction=correction,
                      fisher=fisher, mean_score=mean_score,
                      cond_fisher=cond, ridged=ridged, tilt=tilt)
