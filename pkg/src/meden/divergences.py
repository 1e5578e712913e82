"""Power-divergence generators, their convex conjugates and domain bookkeeping.

Each divergence is described by a generator ``phi`` (convex, ``phi(1) = 0``),
its first two derivatives, the Fenchel conjugate ``conj`` and the conjugate's
derivatives.  The five standard members (modified Kullback-Leibler,
Kullback-Leibler, modified chi-square, chi-square, Hellinger) carry hard-coded
closed forms; any other exponent is served by the generic power-family
formulas.  All callables are vectorized over numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, UnknownDivergence

__all__ = [
    "Interval",
    "DivergenceSpec",
    "make_power_divergence",
    "divergence_by_name",
    "conjugate_value",
    "conjugate_derivatives",
    "NAMED_DIVERGENCES",
]

_INF = float("inf")


@dataclass(frozen=True)
class Interval:
    """Extended-real interval with per-endpoint closedness flags."""

    lo: float
    hi: float
    closed_lo: bool = False
    closed_hi: bool = False

    def interior(self, t: float) -> bool:
        return self.lo < t < self.hi

    def in_closure(self, t: float) -> bool:
        if self.lo < t < self.hi:
            return True
        if self.closed_lo and t == self.lo:
            return True
        if self.closed_hi and t == self.hi:
            return True
        return False

    def __str__(self) -> str:
        left = "[" if self.closed_lo else "("
        right = "]" if self.closed_hi else ")"
        return f"{left}{self.lo:g}, {self.hi:g}{right}"


@dataclass(frozen=True)
class DivergenceSpec:
    """A divergence generator phi together with its conjugate calculus.

    ``phi`` is total over the reals (+inf outside its domain).  The derivative
    callables are only meaningful strictly inside the respective domains; the
    solvers guarantee that by construction.
    """

    name: str
    gamma: float
    primal_domain: Interval
    conjugate_domain: Interval
    phi: Callable[[np.ndarray], np.ndarray]
    phi_prime: Callable[[np.ndarray], np.ndarray]
    phi_second: Callable[[np.ndarray], np.ndarray]
    conj: Callable[[np.ndarray], np.ndarray]
    conj_prime: Callable[[np.ndarray], np.ndarray]
    conj_second: Callable[[np.ndarray], np.ndarray]

    def __repr__(self) -> str:  # keep solver traces readable
        return f"DivergenceSpec({self.name})"


def _klm() -> DivergenceSpec:
    def phi(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = -np.log(x) + x - 1.0
        return np.where(x > 0.0, v, _INF)

    return DivergenceSpec(
        name="KLm",
        gamma=0.0,
        primal_domain=Interval(0.0, _INF),
        conjugate_domain=Interval(-_INF, 1.0),
        phi=phi,
        phi_prime=lambda x: 1.0 - 1.0 / np.asarray(x, dtype=float),
        phi_second=lambda x: np.asarray(x, dtype=float) ** -2.0,
        conj=lambda t: -np.log1p(-np.asarray(t, dtype=float)),
        conj_prime=lambda t: 1.0 / (1.0 - np.asarray(t, dtype=float)),
        conj_second=lambda t: (1.0 - np.asarray(t, dtype=float)) ** -2.0,
    )


def _kl() -> DivergenceSpec:
    def phi(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = x * np.log(x) - x + 1.0
        v = np.where(x == 0.0, 1.0, v)
        return np.where(x >= 0.0, v, _INF)

    return DivergenceSpec(
        name="KL",
        gamma=1.0,
        primal_domain=Interval(0.0, _INF, closed_lo=True),
        conjugate_domain=Interval(-_INF, _INF),
        phi=phi,
        phi_prime=lambda x: np.log(np.asarray(x, dtype=float)),
        phi_second=lambda x: 1.0 / np.asarray(x, dtype=float),
        conj=lambda t: np.expm1(np.asarray(t, dtype=float)),
        conj_prime=lambda t: np.exp(np.asarray(t, dtype=float)),
        conj_second=lambda t: np.exp(np.asarray(t, dtype=float)),
    )


def _chisqm() -> DivergenceSpec:
    def phi(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = 0.5 * (x - 1.0) ** 2 / x
        return np.where(x > 0.0, v, _INF)

    def conj(t):
        t = np.asarray(t, dtype=float)
        return 1.0 - np.sqrt(np.maximum(1.0 - 2.0 * t, 0.0))

    return DivergenceSpec(
        name="ChiSqM",
        gamma=-1.0,
        primal_domain=Interval(0.0, _INF),
        conjugate_domain=Interval(-_INF, 0.5, closed_hi=True),
        phi=phi,
        phi_prime=lambda x: 0.5 * (1.0 - np.asarray(x, dtype=float) ** -2.0),
        phi_second=lambda x: np.asarray(x, dtype=float) ** -3.0,
        conj=conj,
        conj_prime=lambda t: (1.0 - 2.0 * np.asarray(t, dtype=float)) ** -0.5,
        conj_second=lambda t: (1.0 - 2.0 * np.asarray(t, dtype=float)) ** -1.5,
    )


def _chisq() -> DivergenceSpec:
    return DivergenceSpec(
        name="ChiSq",
        gamma=2.0,
        primal_domain=Interval(-_INF, _INF),
        conjugate_domain=Interval(-_INF, _INF),
        phi=lambda x: 0.5 * (np.asarray(x, dtype=float) - 1.0) ** 2,
        phi_prime=lambda x: np.asarray(x, dtype=float) - 1.0,
        phi_second=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        conj=lambda t: 0.5 * np.asarray(t, dtype=float) ** 2 + np.asarray(t, dtype=float),
        conj_prime=lambda t: np.asarray(t, dtype=float) + 1.0,
        conj_second=lambda t: np.ones_like(np.asarray(t, dtype=float)),
    )


def _hellinger() -> DivergenceSpec:
    def phi(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore"):
            v = 2.0 * (np.sqrt(np.abs(x)) - 1.0) ** 2
        return np.where(x >= 0.0, v, _INF)

    return DivergenceSpec(
        name="Hellinger",
        gamma=0.5,
        primal_domain=Interval(0.0, _INF, closed_lo=True),
        conjugate_domain=Interval(-_INF, 2.0),
        phi=phi,
        phi_prime=lambda x: 2.0 - 2.0 / np.sqrt(np.asarray(x, dtype=float)),
        phi_second=lambda x: np.asarray(x, dtype=float) ** -1.5,
        conj=lambda t: 2.0 * np.asarray(t, dtype=float) / (2.0 - np.asarray(t, dtype=float)),
        conj_prime=lambda t: 4.0 * (2.0 - np.asarray(t, dtype=float)) ** -2.0,
        conj_second=lambda t: 8.0 * (2.0 - np.asarray(t, dtype=float)) ** -3.0,
    )


def _generic_power(gamma: float) -> DivergenceSpec:
    # phi_gamma restricted to the nonnegative half line (+inf on negatives,
    # which is the extension making the generator convex for every gamma).
    g = float(gamma)
    gg = g * (g - 1.0)

    def phi(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = (np.abs(x) ** g - g * x + g - 1.0) / gg
        if g > 0:
            v = np.where(x == 0.0, 1.0 / g, v)
            return np.where(x >= 0.0, v, _INF)
        return np.where(x > 0.0, v, _INF)

    def phi_prime(x):
        x = np.asarray(x, dtype=float)
        return (x ** (g - 1.0) - 1.0) / (g - 1.0)

    def phi_second(x):
        return np.asarray(x, dtype=float) ** (g - 2.0)

    # Inverting phi' gives x = u**(1/(g-1)) with u = 1 + (g-1) t, from which
    # the conjugate has the closed form (u**(g/(g-1)) - 1) / g.
    def _u(t):
        return np.maximum(1.0 + (g - 1.0) * np.asarray(t, dtype=float), 0.0)

    def conj(t):
        return (_u(t) ** (g / (g - 1.0)) - 1.0) / g

    def conj_prime(t):
        return _u(t) ** (1.0 / (g - 1.0))

    def conj_second(t):
        return _u(t) ** ((2.0 - g) / (g - 1.0))

    if g > 0:
        primal = Interval(0.0, _INF, closed_lo=True)
    else:
        primal = Interval(0.0, _INF)
    if g > 1:
        conj_dom = Interval(-1.0 / (g - 1.0), _INF, closed_lo=True)
    elif g < 0:
        conj_dom = Interval(-_INF, 1.0 / (1.0 - g), closed_hi=True)
    else:  # 0 < g < 1
        conj_dom = Interval(-_INF, 1.0 / (1.0 - g))

    return DivergenceSpec(
        name=f"Power({g:g})",
        gamma=g,
        primal_domain=primal,
        conjugate_domain=conj_dom,
        phi=phi,
        phi_prime=phi_prime,
        phi_second=phi_second,
        conj=conj,
        conj_prime=conj_prime,
        conj_second=conj_second,
    )


NAMED_DIVERGENCES = ("KLm", "KL", "ChiSqM", "ChiSq", "Hellinger")

_SPECIAL_GAMMAS = {
    0.0: _klm,
    1.0: _kl,
    -1.0: _chisqm,
    2.0: _chisq,
    0.5: _hellinger,
}

_BY_NAME = {
    "klm": _klm,
    "kl_m": _klm,
    "el": _klm,
    "kl": _kl,
    "chisqm": _chisqm,
    "chisq_m": _chisqm,
    "chi2m": _chisqm,
    "chisq": _chisq,
    "chi2": _chisq,
    "hellinger": _hellinger,
}


def make_power_divergence(gamma: float) -> DivergenceSpec:
    """Build the power-family generator with exponent ``gamma``.

    ``gamma`` in {0, 1, -1, 2, 1/2} dispatches to the named divergence with
    its tabulated conjugate; any other exponent uses the generic formulas.
    """
    g = float(gamma)
    factory = _SPECIAL_GAMMAS.get(g)
    if factory is not None:
        return factory()
    return _generic_power(g)


def divergence_by_name(name: str) -> DivergenceSpec:
    """Look up a divergence by name; ``Power(gamma)`` is accepted too."""
    key = name.strip().lower()
    factory = _BY_NAME.get(key)
    if factory is not None:
        return factory()
    m = re.fullmatch(r"power\(([-+0-9.eE]+)\)", key)
    if m is None:
        m = re.fullmatch(r"power:([-+0-9.eE]+)", key)
    if m is not None:
        return make_power_divergence(float(m.group(1)))
    raise UnknownDivergence(f"unknown divergence {name!r}")


def conjugate_value(spec: DivergenceSpec, t: float) -> float:
    """Evaluate phi*(t), returning +inf outside the closure of its domain.

    At a closed finite endpoint the limit value is returned (e.g. the modified
    chi-square conjugate equals 1 at t = 1/2).
    """
    t = float(t)
    if math.isnan(t):
        raise DomainError("conjugate argument is NaN")
    if spec.conjugate_domain.in_closure(t):
        return float(spec.conj(t))
    return _INF


def conjugate_derivatives(spec: DivergenceSpec, t: float) -> tuple[float, float]:
    """First and second derivative of phi* strictly inside its domain."""
    t = float(t)
    if not spec.conjugate_domain.interior(t):
        raise DomainError(
            f"t={t!r} outside the open conjugate domain {spec.conjugate_domain} of {spec.name}"
        )
    return float(spec.conj_prime(t)), float(spec.conj_second(t))
