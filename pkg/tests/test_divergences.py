"""Conjugate calculus of the power-divergence family.

Oracle strategy: hand-computed closed-form values for the named members,
a brute-force Legendre sup over a fine grid for the transform itself, and
finite differences for the derivative callables.
"""

import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from meden import (DivergenceSpec, DomainError, UnknownDivergence,
                   conjugate_derivatives, conjugate_value, divergence_by_name,
                   make_power_divergence)
from meden.divergences import NAMED_DIVERGENCES


def _brute_conjugate(spec: DivergenceSpec, t: float) -> float:
    """sup_x { t x - phi(x) } by golden search on the concave inner map."""
    dom = spec.primal_domain
    lo = dom.lo + 1e-12 if np.isfinite(dom.lo) else -1e4
    hi = dom.hi if np.isfinite(dom.hi) else 1e4
    res = minimize_scalar(
        lambda x: -(t * x - float(spec.phi(x))),
        bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-12})
    return -res.fun


def _interior_grid(spec: DivergenceSpec, k: int) -> np.ndarray:
    dom = spec.conjugate_domain
    lo = dom.lo if np.isfinite(dom.lo) else -4.0
    hi = dom.hi if np.isfinite(dom.hi) else 4.0
    return lo + (hi - lo) * (np.arange(1, k + 1) / (k + 1))


# hand-computed values: conj(t) = sup_x {t x - phi(x)} evaluated in closed
# form for each named generator
_SPOT_VALUES = [
    ("KLm", 0.5, math.log(2.0)),          # -log(1 - 1/2)
    ("KLm", -1.0, -math.log(2.0)),        # -log(2)
    ("KL", 1.0, math.e - 1.0),            # e^1 - 1
    ("KL", 0.0, 0.0),
    ("ChiSqM", 0.0, 0.0),
    ("ChiSqM", -4.0, -2.0),               # 1 - sqrt(9)
    ("ChiSq", 3.0, 7.5),                  # 9/2 + 3
    ("ChiSq", -1.0, -0.5),
    ("Hellinger", 1.0, 2.0),              # 2*1/(2-1)
    ("Hellinger", -2.0, -1.0),            # -4/4
]


@pytest.mark.parametrize("name,t,expected", _SPOT_VALUES)
def test_conjugate_spot_values(name, t, expected):
    spec = divergence_by_name(name)
    assert conjugate_value(spec, t) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("name", NAMED_DIVERGENCES)
def test_conjugate_matches_brute_force_sup(name):
    spec = divergence_by_name(name)
    for t in _interior_grid(spec, 25):
        assert float(spec.conj(t)) == pytest.approx(
            _brute_conjugate(spec, t), abs=1e-6)


@pytest.mark.parametrize("name", NAMED_DIVERGENCES)
def test_young_fenchel_inequality(name):
    # t*x <= phi(x) + conj(t) for every x in dom phi, t in dom conj
    spec = divergence_by_name(name)
    xs = np.linspace(0.05, 8.0, 40)
    for t in _interior_grid(spec, 20):
        gaps = spec.phi(xs) + float(spec.conj(t)) - t * xs
        assert np.all(gaps >= -1e-10)


@pytest.mark.parametrize("name", NAMED_DIVERGENCES)
def test_conj_prime_inverts_phi_prime(name):
    spec = divergence_by_name(name)
    for t in _interior_grid(spec, 20):
        x = float(spec.conj_prime(t))
        assert spec.primal_domain.interior(x) or spec.primal_domain.in_closure(x)
        assert float(spec.phi_prime(x)) == pytest.approx(t, abs=1e-9)
        # conj(t) attains its sup at x: conj(t) = t x - phi(x)
        assert float(spec.conj(t)) == pytest.approx(
            t * x - float(spec.phi(x)), abs=1e-9)


@pytest.mark.parametrize("name", NAMED_DIVERGENCES)
def test_conjugate_derivatives_finite_difference(name):
    spec = divergence_by_name(name)
    h = 1e-6
    for t in _interior_grid(spec, 15):
        d1, d2 = conjugate_derivatives(spec, t)
        fd1 = (float(spec.conj(t + h)) - float(spec.conj(t - h))) / (2 * h)
        fd2 = (float(spec.conj_prime(t + h)) - float(spec.conj_prime(t - h))) / (2 * h)
        assert d1 == pytest.approx(fd1, rel=1e-5, abs=1e-8)
        assert d2 == pytest.approx(fd2, rel=1e-5, abs=1e-8)


def test_hellinger_derivatives_at_one():
    # conj(t) = 2t/(2-t): conj'(t) = 4/(2-t)^2, conj''(t) = 8/(2-t)^3
    spec = divergence_by_name("Hellinger")
    d1, d2 = conjugate_derivatives(spec, 1.0)
    assert d1 == pytest.approx(4.0, abs=1e-12)
    assert d2 == pytest.approx(8.0, abs=1e-12)


def test_phi_derivatives_finite_difference():
    h = 1e-6
    for name in NAMED_DIVERGENCES:
        spec = divergence_by_name(name)
        for x in np.linspace(0.3, 4.0, 12):
            fd1 = (float(spec.phi(x + h)) - float(spec.phi(x - h))) / (2 * h)
            fd2 = (float(spec.phi_prime(x + h)) - float(spec.phi_prime(x - h))) / (2 * h)
            assert float(spec.phi_prime(x)) == pytest.approx(fd1, rel=1e-5, abs=1e-8)
            assert float(spec.phi_second(x)) == pytest.approx(fd2, rel=1e-5, abs=1e-8)


def test_phi_normalization():
    for name in NAMED_DIVERGENCES:
        spec = divergence_by_name(name)
        assert float(spec.phi(1.0)) == 0.0
        assert float(spec.phi_prime(1.0)) == pytest.approx(0.0, abs=1e-15)


def test_domain_bookkeeping():
    klm = divergence_by_name("KLm")
    assert klm.conjugate_domain.interior(0.999)
    assert not klm.conjugate_domain.in_closure(1.0)
    assert conjugate_value(klm, 1.5) == math.inf

    chisqm = divergence_by_name("ChiSqM")
    # closed endpoint: the limit value is finite and returned
    assert conjugate_value(chisqm, 0.5) == pytest.approx(1.0)
    assert conjugate_value(chisqm, 0.5 + 1e-9) == math.inf

    hell = divergence_by_name("Hellinger")
    assert conjugate_value(hell, 2.0) == math.inf

    kl = divergence_by_name("KL")
    assert kl.conjugate_domain.in_closure(50.0)


def test_conjugate_derivatives_domain_errors():
    chisqm = divergence_by_name("ChiSqM")
    with pytest.raises(DomainError):
        conjugate_derivatives(chisqm, 0.5)  # boundary is not interior
    with pytest.raises(DomainError):
        conjugate_value(chisqm, float("nan"))


def test_name_lookup_and_aliases():
    assert divergence_by_name("el").name == "KLm"
    assert divergence_by_name("chi2").name == "ChiSq"
    assert divergence_by_name(" KLM ").name == "KLm"
    assert divergence_by_name("power(2)").name == "ChiSq"
    assert divergence_by_name("power(1.7)").gamma == pytest.approx(1.7)
    with pytest.raises(UnknownDivergence):
        divergence_by_name("nope")


def test_generic_power_consistent_with_named_members():
    # the generic formulas at the special exponents must agree with the
    # hard-coded tables wherever both are defined
    from meden.divergences import _generic_power

    ts = np.linspace(-0.4, 0.4, 9)
    for gamma, name in [(0.0, None), (2.0, "ChiSq"), (-1.0, "ChiSqM"),
                        (0.5, "Hellinger")]:
        if name is None:
            continue
        named = divergence_by_name(name)
        generic = _generic_power(gamma)
        np.testing.assert_allclose(generic.conj(ts), named.conj(ts),
                                   rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(generic.conj_prime(ts), named.conj_prime(ts),
                                   rtol=1e-12, atol=1e-12)


def test_generic_power_brute_force():
    for gamma in (1.5, 3.0, -0.5, 0.25):
        spec = make_power_divergence(gamma)
        for t in _interior_grid(spec, 12):
            assert float(spec.conj(t)) == pytest.approx(
                _brute_conjugate(spec, t), abs=1e-6)


def test_make_power_divergence_dispatches_named():
    assert make_power_divergence(0.0).name == "KLm"
    assert make_power_divergence(1.0).name == "KL"
    assert make_power_divergence(0.5).name == "Hellinger"
    assert make_power_divergence(1.7).name == "Power(1.7)"
