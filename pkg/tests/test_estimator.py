"""Outer minimization: collapse at method-of-moments roots, grid oracles,
equivariance, boundary and feasibility statuses."""

import numpy as np
import pytest

from meden import (EstimateOptions, EstimateStatus, as_sample, builtin_model,
                   divergence_by_name, estimate, initial_theta,
                   profile_divergence)
from meden.divergences import NAMED_DIVERGENCES


def _normal_sample(n, seed, mean=1.0, sd=1.0, m=1):
    rng = np.random.default_rng(seed)
    return as_sample(rng.normal(mean, sd, size=(n, m)))


@pytest.mark.parametrize("name", NAMED_DIVERGENCES)
def test_just_identified_collapse_at_sample_mean(name):
    # with as many moments as parameters the projection distance vanishes at
    # the root of the empirical moments, here the sample mean
    sample = _normal_sample(20, seed=1)
    model = builtin_model("mean_only")
    est = estimate(divergence_by_name(name), model, sample)
    assert est.status is EstimateStatus.CONVERGED
    assert est.theta_hat[0] == pytest.approx(float(sample.mean()), abs=1e-10)
    assert est.value == pytest.approx(0.0, abs=1e-12)


def test_just_identified_integer_oracle():
    model = builtin_model("mean_only")
    sample = as_sample([1.0, 2.0, 3.0])
    for name in NAMED_DIVERGENCES:
        est = estimate(divergence_by_name(name), model, sample)
        assert abs(est.theta_hat[0] - 2.0) <= 1e-12, name
        assert est.value <= 1e-14


def test_estimate_matches_dense_grid_oracle():
    # over-identified case: compare against an exhaustive profile scan
    model = builtin_model("sim_example")
    sample = _normal_sample(35, seed=7)
    spec = divergence_by_name("ChiSq")
    est = estimate(spec, model, sample)

    grid = np.linspace(est.theta_hat[0] - 0.5, est.theta_hat[0] + 0.5, 2001)
    values = [profile_divergence(spec, model, sample, np.array([g]))
              for g in grid]
    assert est.value <= min(values) + 1e-10


def test_profile_infeasible_is_inf():
    model = builtin_model("mean_only")
    sample = as_sample([1.0, 2.0])
    v = profile_divergence(divergence_by_name("KLm"), model, sample,
                           np.array([0.0]))
    assert v == np.inf


def test_el_fast_path_agrees_with_generic_path():
    model = builtin_model("sim_example")
    sample = _normal_sample(30, seed=3)
    spec = divergence_by_name("KLm")
    fast = estimate(spec, model, sample, EstimateOptions(el_fast_path=True))
    slow = estimate(spec, model, sample, EstimateOptions(el_fast_path=False))
    assert fast.theta_hat[0] == pytest.approx(slow.theta_hat[0], abs=1e-7)
    assert fast.value == pytest.approx(slow.value, abs=1e-9)


@pytest.mark.parametrize("name", NAMED_DIVERGENCES)
def test_translation_equivariance(name):
    model = builtin_model("sim_example")
    sample = _normal_sample(25, seed=11)
    spec = divergence_by_name(name)
    base = estimate(spec, model, sample)
    for shift in (-7.25, 3.5):
        moved = estimate(spec, model, sample + shift)
        assert moved.theta_hat[0] == pytest.approx(
            base.theta_hat[0] + shift, abs=1e-8)


def test_scale_equivariance_multiplicative_model():
    model = builtin_model("scale_link")
    rng = np.random.default_rng(4)
    sample = as_sample(np.abs(rng.normal(2.0, 1.0, size=(30, 1))) + 0.5)
    spec = divergence_by_name("ChiSq")
    base = estimate(spec, model, sample)
    for lam in (0.5, 3.0):
        moved = estimate(spec, model, lam * sample)
        assert moved.theta_hat[0] == pytest.approx(
            lam * base.theta_hat[0], abs=1e-8 * lam)


def test_two_parameter_model_estimates():
    model = builtin_model("mean_and_quantile")
    sample = _normal_sample(60, seed=21)
    est = estimate(divergence_by_name("ChiSq"), model, sample)
    assert est.converged
    # both coordinates target the centre of the standard normal draw
    assert abs(est.theta_hat[0] - 1.0) < 0.6
    assert abs(est.theta_hat[1] - 1.0) < 0.8


def test_no_feasible_region_status():
    # moments bounded away from zero for every theta in the box
    from meden.models import MomentModel

    model = MomentModel(name="always_positive", m=1, d=1, ell=1,
                        f=lambda X, th: np.ones((X.shape[0], 1)),
                        theta_box=np.array([[-1.0, 1.0]]))
    est = estimate(divergence_by_name("KLm"), model, as_sample([0.0, 1.0]))
    assert est.status is EstimateStatus.NO_FEASIBLE_REGION
    assert not est.converged
    assert est.inner is None


def test_boundary_hit_status():
    model = builtin_model("mean_only")
    narrow = np.array([[5.0, 6.0]])
    boxed = type(model)(**{**model.__dict__, "theta_box": narrow})
    sample = as_sample([0.0, 0.5, 1.0])
    est = estimate(divergence_by_name("ChiSq"), boxed, sample)
    assert est.status is EstimateStatus.BOUNDARY_HIT


def test_initial_theta_uses_model_initializer():
    model = builtin_model("mean_only")
    sample = as_sample([2.0, 4.0])
    np.testing.assert_allclose(initial_theta(model, sample), [3.0])


def test_trace_records_probes():
    model = builtin_model("mean_only")
    sample = as_sample([0.0, 1.0, 2.0])
    est = estimate(divergence_by_name("KLm"), model, sample)
    assert len(est.trace) >= 64  # at least the initial bracket scan
    best = min(v for _, v in est.trace if np.isfinite(v))
    assert est.value <= best + 1e-12
