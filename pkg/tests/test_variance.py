import numpy as np
import pytest

from mrd_adjust import (
    DesignSpec,
    GROUPS,
    confidence_interval,
    conservative_variance,
    enumerate_assignments,
    exact_estimator_variance,
    exact_group_covariance,
    exact_group_variance,
    partition,
    sigma_hat_gamma,
)
from mrd_adjust.design import observed_matrix
from mrd_adjust.estimators import PRESETS, group_mean
from mrd_adjust._norm import norm_ppf, z_quantile

from conftest import random_potentials


def enumeration_moments(potentials, spec, c, beta=None, X=None):
    """Design mean and variance of the contrast by brute force."""
    values = []
    for a in enumerate_assignments(spec):
        part = partition(spec, a)
        Y = observed_matrix(potentials, a)
        if beta is not None:
            Y = Y - X @ beta
        values.append(
            sum(w * group_mean(Y, part, g) for w, g in zip(c, GROUPS))
        )
    values = np.asarray(values)
    return float(values.mean()), float(values.var(ddof=0))


@pytest.fixture(scope="module")
def enum_setup():
    spec = DesignSpec(I=5, J=4, I_T=2, J_T=2)
    potentials, X = random_potentials(spec, seed=10)
    return spec, potentials, X


def test_group_variance_matches_enumeration(enum_setup):
    spec, potentials, _ = enum_setup
    for g in GROUPS:
        c = np.array([1.0 if h == g else 0.0 for h in GROUPS])
        _, var = enumeration_moments(potentials, spec, c)
        exact = exact_group_variance(potentials[g], spec, g)
        assert abs(var - exact) < 1e-12 * max(exact, 1.0)


def test_group_covariance_matches_enumeration(enum_setup):
    spec, potentials, _ = enum_setup
    # Cov(g, h) = (Var(mean_g + mean_h) - Var(g) - Var(h)) / 2 by enumeration
    from itertools import combinations

    for g, h in combinations(GROUPS, 2):
        c_sum = np.array([1.0 if k in (g, h) else 0.0 for k in GROUPS])
        _, var_sum = enumeration_moments(potentials, spec, c_sum)
        vg = exact_group_variance(potentials[g], spec, g)
        vh = exact_group_variance(potentials[h], spec, h)
        cov_enum = (var_sum - vg - vh) / 2.0
        cov = exact_group_covariance(potentials[g], potentials[h], spec, g, h)
        assert abs(cov - cov_enum) < 1e-12 * max(abs(cov_enum), 1.0)


def test_estimator_variance_matches_enumeration(enum_setup):
    spec, potentials, X = enum_setup
    rng = np.random.default_rng(0)
    beta = rng.normal(size=X.shape[2])
    for name, c in PRESETS.items():
        c = np.asarray(c, dtype=float)
        _, var = enumeration_moments(potentials, spec, c)
        report = exact_estimator_variance(potentials, spec, c)
        assert abs(report.total_variance - var) < 1e-12 * max(var, 1.0)
        # residualized variant
        _, var_b = enumeration_moments(potentials, spec, c, beta=beta, X=X)
        rep_b = exact_estimator_variance(potentials, spec, c, beta=beta, X=X)
        assert abs(rep_b.total_variance - var_b) < 1e-12 * max(var_b, 1.0)


def test_variance_report_decomposition(enum_setup):
    spec, potentials, _ = enum_setup
    for c in PRESETS.values():
        rep = exact_estimator_variance(potentials, spec, np.asarray(c, float))
        total = sum(rep.components.values())
        assert abs(total - rep.total_variance) < 1e-12 * max(rep.total_variance, 1.0)
        # report assembles from per-group variances and pair covariances
        c = np.asarray(c, float)
        rebuilt = sum(
            w**2 * rep.group_variances[g] for w, g in zip(c, GROUPS)
        ) + 2 * sum(
            c[GROUPS.index(g)] * c[GROUPS.index(h)] * cov
            for (g, h), cov in rep.pair_covariances.items()
        )
        assert abs(rebuilt - rep.total_variance) < 1e-12 * max(rep.total_variance, 1.0)


def test_conservative_estimator_unbiased(enum_setup):
    spec, potentials, _ = enum_setup
    sums = {g: 0.0 for g in GROUPS}
    assignments = list(enumerate_assignments(spec))
    for a in assignments:
        part = partition(spec, a)
        Y = observed_matrix(potentials, a)
        for g in GROUPS:
            sums[g] += sigma_hat_gamma(Y, part, g).sigma
    for g in GROUPS:
        target = exact_group_variance(potentials[g], spec, g)
        mean = sums[g] / len(assignments)
        assert abs(mean - target) < 1e-10 * max(target, 1.0)


def test_conservative_bound_dominates_variance(enum_setup):
    # E[V_hat] >= Var(tau_hat) for every preset contrast: the bound uses
    # (sum |c_g| sd_g)^2 >= Var of the signed sum
    spec, potentials, _ = enum_setup
    assignments = list(enumerate_assignments(spec))
    for name, c in PRESETS.items():
        c = np.asarray(c, float)
        vhats = []
        for a in assignments:
            part = partition(spec, a)
            Y = observed_matrix(potentials, a)
            vhats.append(conservative_variance(Y, part, c))
        true_var = exact_estimator_variance(potentials, spec, c).total_variance
        assert np.mean(vhats) >= true_var * (1.0 - 1e-10), name


def test_sigma_plus_clips_negative():
    from mrd_adjust.variance import ConservativeComponents

    comp = ConservativeComponents(
        group="tr",
        sigma_B=0.0,
        sigma_S=0.0,
        sigma_BS=0.0,
        alpha_B=0.1,
        alpha_S=0.1,
        sigma=-0.5,
    )
    assert comp.sigma_plus == 0.0


def test_confidence_interval_width():
    lo, hi = confidence_interval(1.0, 4.0, 0.95)
    z = z_quantile(0.95)
    assert np.isclose(hi - lo, 2 * z * 2.0)
    assert np.isclose((lo + hi) / 2, 1.0)
    lo90, hi90 = confidence_interval(1.0, 4.0, 0.90)
    assert hi90 - lo90 < hi - lo


def test_norm_ppf_accuracy():
    # round trip against an independent high-precision erf-based cdf
    import math

    for p in (0.5, 0.75, 0.9, 0.95, 0.975, 0.995, 1e-6, 1 - 1e-9):
        x = norm_ppf(p)
        cdf = 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
        assert abs(cdf - p) < 1e-12
    assert abs(z_quantile(0.95) - 1.959963984540054) < 1e-12
