"""Moment condition models, their Jacobians and group-invariance metadata.

A model bundles the moment map f(x, theta) in R^ell, its optional
theta-Jacobian, and how the transformation group acts on observations and on
the parameter.  The moment map is evaluated on whole samples at once:
``f(X, theta)`` takes an (n, m) array and returns (n, ell).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteMoment, UnknownModel

__all__ = [
    "Group",
    "MomentModel",
    "InvarianceReport",
    "as_sample",
    "evaluate_moments",
    "moment_matrix",
    "builtin_model",
    "builtin_names",
    "check_invariance",
    "check_jacobian",
    "default_theta_box",
]


class Group(enum.Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"
    NONE = "none"


@dataclass(frozen=True)
class MomentModel:
    """A moment condition model E[f(X, theta)] = 0.

    ``f`` maps an (n, m) sample and a (d,) parameter to an (n, ell) matrix.
    ``f_jac_theta`` returns the stacked theta-Jacobians, shape (n, d, ell),
    with entry [i, k, j] = d f_j(x_i, theta) / d theta_k.  ``f_invariant``
    says whether f(g(x), g_bar(theta)) = f(x, theta) holds identically; when
    it does not, invariance can only be checked at the distribution level.
    """

    name: str
    m: int
    d: int
    ell: int
    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    f_jac_theta: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    group: Group = Group.NONE
    theta_box: Optional[np.ndarray] = None
    non_smooth: bool = False
    f_invariant: bool = True
    location_style: bool = False
    init: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def act_x(self, x: np.ndarray, g: float) -> np.ndarray:
        if self.group is Group.ADDITIVE:
            return x + g
        if self.group is Group.MULTIPLICATIVE:
            return g * x
        raise ValueError(f"model {self.name} carries no group action")

    def act_theta(self, theta: np.ndarray, g: float) -> np.ndarray:
        if self.group is Group.ADDITIVE:
            return theta + g
        if self.group is Group.MULTIPLICATIVE:
            return g * theta
        raise ValueError(f"model {self.name} carries no group action")


def as_sample(data: np.ndarray | list, m: int | None = None) -> np.ndarray:
    """Coerce data to an (n, m) float sample and validate it."""
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("sample must be a 2-d array with at least 2 rows")
    if m is not None and x.shape[1] != m:
        raise ValueError(f"sample has {x.shape[1]} columns, model expects {m}")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite entries")
    return x


def moment_matrix(model: MomentModel, sample: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Evaluate f over the whole sample, shape (n, ell)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    F = np.asarray(model.f(sample, theta), dtype=float)
    if not np.all(np.isfinite(F)):
        raise NonFiniteMoment(f"non-finite moments for {model.name} at theta={theta}")
    return F


def evaluate_moments(model: MomentModel, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Evaluate f at a single observation, shape (ell,)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return moment_matrix(model, x[None, :], theta)[0]


def jacobian_stack(model: MomentModel, sample: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Stacked theta-Jacobians of f over the sample, shape (n, d, ell)."""
    from .errors import NonSmoothModel

    if model.f_jac_theta is None:
        raise NonSmoothModel(f"model {model.name} has no theta-Jacobian")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    J = np.asarray(model.f_jac_theta(sample, theta), dtype=float)
    return J


# ---------------------------------------------------------------------------
# built-in models
# ---------------------------------------------------------------------------

_PHI1 = math.erf(1.0 / math.sqrt(2.0))  # P(|Z| < 1) for Z ~ N(0, 1)


def _mean_only() -> MomentModel:
    return MomentModel(
        name="mean_only",
        m=1, d=1, ell=1,
        f=lambda X, th: X - th[0],
        f_jac_theta=lambda X, th: np.full((X.shape[0], 1, 1), -1.0),
        group=Group.ADDITIVE,
        location_style=True,
        init=lambda X: np.array([X.mean()]),
    )


def _sim_example(name: str = "sim_example", c: float = 1.0) -> MomentModel:
    def f(X, th):
        u = X[:, 0] - th[0]
        return np.column_stack([u, u * u - c])

    def jac(X, th):
        u = X[:, 0] - th[0]
        J = np.empty((X.shape[0], 1, 2))
        J[:, 0, 0] = -1.0
        J[:, 0, 1] = -2.0 * u
        return J

    return MomentModel(
        name=name,
        m=1, d=1, ell=2,
        f=f,
        f_jac_theta=jac,
        group=Group.ADDITIVE,
        location_style=True,
        init=lambda X: np.array([X.mean()]),
    )


def _two_means() -> MomentModel:
    return MomentModel(
        name="two_means",
        m=2, d=1, ell=2,
        f=lambda X, th: X - th[0],
        f_jac_theta=lambda X, th: np.full((X.shape[0], 1, 2), -1.0),
        group=Group.ADDITIVE,
        location_style=True,
        init=lambda X: np.array([X.mean()]),
    )


def _interval_probs() -> MomentModel:
    # E 1{x - theta in (-1, 1)} = P(|Z| < 1) and E 1{x - theta < 0} = 1/2
    # identify theta as the centre of a symmetric unit-variance law.
    def f(X, th):
        u = X[:, 0] - th[0]
        return np.column_stack([
            ((u > -1.0) & (u < 1.0)).astype(float) - _PHI1,
            (u < 0.0).astype(float) - 0.5,
        ])

    return MomentModel(
        name="interval_probs",
        m=1, d=1, ell=2,
        f=f,
        group=Group.ADDITIVE,
        non_smooth=True,
        location_style=True,
        init=lambda X: np.array([np.median(X)]),
    )


def _mean_and_quantile(alpha: float = 0.5) -> MomentModel:
    def f(X, th):
        u = X[:, 0] - th[0]
        return np.column_stack([
            u,
            u * u - 1.0,
            (X[:, 0] <= th[1]).astype(float) - alpha,
        ])

    return MomentModel(
        name="mean_and_quantile",
        m=1, d=2, ell=3,
        f=f,
        group=Group.ADDITIVE,
        non_smooth=True,
        location_style=True,
        init=lambda X: np.array([X.mean(), float(np.quantile(X[:, 0], alpha))]),
    )


def _location_h() -> MomentModel:
    # h(u) = (u, u^3): location of a symmetric law via first and third moments.
    def f(X, th):
        u = X[:, 0] - th[0]
        return np.column_stack([u, u ** 3])

    def jac(X, th):
        u = X[:, 0] - th[0]
        J = np.empty((X.shape[0], 1, 2))
        J[:, 0, 0] = -1.0
        J[:, 0, 1] = -3.0 * u * u
        return J

    return MomentModel(
        name="location_h",
        m=1, d=1, ell=2,
        f=f,
        f_jac_theta=jac,
        group=Group.ADDITIVE,
        location_style=True,
        init=lambda X: np.array([X.mean()]),
    )


def _scale_link() -> MomentModel:
    # E X = theta with E X^2 = 2 theta^2 (coefficient of variation 1);
    # the two components scale by lambda and lambda^2, so only the zero set
    # is preserved under the multiplicative group, not f itself.
    def f(X, th):
        x = X[:, 0]
        return np.column_stack([x - th[0], x * x - 2.0 * th[0] ** 2])

    def jac(X, th):
        J = np.empty((X.shape[0], 1, 2))
        J[:, 0, 0] = -1.0
        J[:, 0, 1] = -4.0 * th[0]
        return J

    return MomentModel(
        name="scale_link",
        m=1, d=1, ell=2,
        f=f,
        f_jac_theta=jac,
        group=Group.MULTIPLICATIVE,
        f_invariant=False,
        init=lambda X: np.array([X.mean()]),
    )


_BUILTINS: dict[str, Callable[[], MomentModel]] = {
    "mean_only": _mean_only,
    "sim_example": _sim_example,
    "mean_variance_link": lambda: _sim_example(name="mean_variance_link"),
    "two_means": _two_means,
    "interval_probs": _interval_probs,
    "mean_and_quantile": _mean_and_quantile,
    "location_h": _location_h,
    "scale_link": _scale_link,
}


def builtin_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILTINS))


def builtin_model(name: str) -> MomentModel:
    """Return a fully populated built-in model by name."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise UnknownModel(
            f"unknown model {name!r}; available: {', '.join(builtin_names())}"
        ) from None
    return factory()


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass
class InvarianceReport:
    model: str
    trials: int
    tol: float
    violations: list = field(default_factory=list)
    max_gap: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations


def default_theta_box(model: MomentModel, sample: np.ndarray) -> np.ndarray:
    """Data-driven parameter box, equivariant under the model's group."""
    x = sample.ravel()
    if model.group is Group.MULTIPLICATIVE:
        s = np.abs(x).mean() + np.abs(x).std()
        lo, hi = 0.05 * s, 5.0 * s
    else:
        sd = x.std()
        lo, hi = x.min() - 5.0 * sd, x.max() + 5.0 * sd
    box = np.empty((model.d, 2))
    box[:, 0] = lo
    box[:, 1] = hi
    return box


def _act(group: Group, v: np.ndarray, g: float) -> np.ndarray:
    if group is Group.ADDITIVE:
        return v + g
    if group is Group.MULTIPLICATIVE:
        return g * v
    raise ValueError("no group action")


def check_invariance(
    model: MomentModel,
    sample: np.ndarray,
    trials: int = 20,
    tol: float = 1e-12,
    seed: int = 0,
    group: Group | None = None,
) -> InvarianceReport:
    """Probe the group-invariance of the model on random (x, theta, g) draws.

    For additive models with the pointwise identity
    f(g(x), g_bar(theta)) = f(x, theta) the check is direct.  Otherwise
    (multiplicative groups, where in general only the zero set of f is
    preserved) invariance is checked at the distribution level by
    re-estimating theta on the transformed sample; pass a looser ``tol``
    there, re-estimation is only accurate to the outer solver tolerance.
    """
    group = model.group if group is None else group
    if group is Group.NONE:
        raise ValueError(f"model {model.name} carries no group")
    rng = np.random.default_rng(seed)
    report = InvarianceReport(model=model.name, trials=trials, tol=tol)

    if group is Group.ADDITIVE and model.f_invariant:
        center = sample.mean()
        spread = sample.std() + 1.0
        for _ in range(trials):
            x = center + spread * rng.standard_normal(model.m)
            theta = center + spread * rng.standard_normal(model.d)
            g = rng.uniform(-5.0, 5.0)
            base = evaluate_moments(model, x, theta)
            moved = evaluate_moments(model, _act(group, x, g), _act(group, theta, g))
            gap = float(np.abs(moved - base).max())
            report.max_gap = max(report.max_gap, gap)
            if gap > tol:
                report.violations.append({"x": x.tolist(), "theta": theta.tolist(),
                                          "g": g, "gap": gap})
        return report

    # distribution-level check by re-estimation
    from .divergences import divergence_by_name
    from .estimator import EstimateOptions, estimate

    spec = divergence_by_name("chisq")
    opts = EstimateOptions(grid_points=64, theta_tol=1e-10)
    base = estimate(spec, model, sample, opts)
    for _ in range(trials):
        if group is Group.ADDITIVE:
            g = rng.uniform(-5.0, 5.0)
            scale = 1.0
        else:
            g = rng.uniform(0.2, 5.0)
            scale = max(abs(g), 1.0)
        moved = estimate(spec, model, _act(group, sample, g), opts)
        target = _act(group, base.theta_hat, g)
        gap = float(np.abs(moved.theta_hat - target).max())
        report.max_gap = max(report.max_gap, gap / scale)
        if gap > tol * scale:
            report.violations.append({"g": g, "gap": gap})
    return report


def check_jacobian(
    model: MomentModel,
    sample: np.ndarray,
    theta: np.ndarray,
    rel_tol: float = 1e-5,
) -> float:
    """Max relative error between f_jac_theta and central finite differences."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    J = jacobian_stack(model, sample, theta)
    worst = 0.0
    for k in range(model.d):
        h = 1e-6 * (1.0 + abs(theta[k]))
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        fd = (moment_matrix(model, sample, tp) - moment_matrix(model, sample, tm)) / (2 * h)
        scale = np.maximum(np.abs(J[:, k, :]), 1.0)
        worst = max(worst, float(np.abs(J[:, k, :] - fd).__truediv__(scale).max()))
    if worst > rel_tol:
        raise AssertionError(
            f"Jacobian of {model.name} disagrees with finite differences: {worst:.2e}"
        )
    return worst
