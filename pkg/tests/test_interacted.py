import numpy as np
import pytest

from mrd_adjust import (
    DesignSpec,
    EffectSpec,
    GROUPS,
    SingularSystem,
    exact_estimator_variance,
    interacted_system,
    partition,
    sample_assignment,
    solve_beta,
    solve_interacted,
    tau_imputation,
    tau_interacted,
    wls_twfe_direct,
)
from mrd_adjust.design import observed_matrix
from mrd_adjust.estimators import (
    interacted_population_system,
    population_system,
)

from conftest import random_potentials


@pytest.fixture(scope="module")
def setup():
    spec = DesignSpec(I=6, J=8, I_T=3, J_T=4)
    potentials, X = random_potentials(spec, seed=77)
    return spec, potentials, X


def test_assembled_system_symmetric(setup):
    spec, potentials, X = setup
    a = sample_assignment(spec, 1)
    part = partition(spec, a)
    Y = observed_matrix(potentials, a)
    for name in ("direct", "total", "buyer_spillover", "seller_spillover"):
        sys_hat = interacted_system(EffectSpec.preset(name), X, Y, part)
        Z, u = sys_hat.assemble()
        assert np.array_equal(Z, Z.T)
        assert Z.shape == (len(sys_hat.groups) * X.shape[2],) * 2
        assert u.shape == (len(sys_hat.groups) * X.shape[2],)


def test_shared_beta_collapse(setup):
    # setting every group's beta to the same vector reduces the interacted
    # objective to the shared-beta one: block sums reproduce the
    # noninteracted system applied to that beta
    spec, potentials, X = setup
    d = X.shape[2]
    rng = np.random.default_rng(0)
    beta = rng.normal(size=d)
    for name in ("direct", "total", "buyer_spillover", "seller_spillover"):
        eff = EffectSpec.preset(name)
        pop_flat = population_system(eff, X, potentials, spec)
        pop_block = interacted_population_system(eff, X, potentials, spec)
        Z, u = pop_block.assemble()
        k = len(pop_block.groups)
        stacked = np.tile(beta, k)
        # quadratic form and linear term agree between representations
        q_block = stacked @ Z @ stacked - 2 * u @ stacked
        q_flat = beta @ pop_flat.Z @ beta - 2 * pop_flat.u @ beta
        assert abs(q_block - q_flat) < 1e-10 * max(abs(q_flat), 1.0), name


def test_population_interacted_never_worse_than_shared(setup):
    spec, potentials, X = setup
    for name in ("total", "buyer_spillover", "seller_spillover"):
        eff = EffectSpec.preset(name)
        c = np.asarray(eff.c, float)
        beta_shared = solve_beta(population_system(eff, X, potentials, spec))
        v_shared = exact_estimator_variance(
            potentials, spec, c, beta=beta_shared, X=X
        ).total_variance
        sys_pop = interacted_population_system(eff, X, potentials, spec)
        beta_blocks = solve_interacted(sys_pop)
        full = {g: beta_blocks.get(g, np.zeros(X.shape[2])) for g in GROUPS}
        v_inter = exact_estimator_variance(
            potentials, spec, c, beta_by_group=full, X=X
        ).total_variance
        assert v_inter <= v_shared * (1 + 1e-10), name


def test_direct_population_system_is_singular_with_flat_optimum(setup):
    # the direct-effect population block system has rank-deficient structure;
    # minimum-norm solutions are optimal and the flat directions do not
    # change the variance
    spec, potentials, X = setup
    eff = EffectSpec.preset("direct")
    sys_pop = interacted_population_system(eff, X, potentials, spec)
    Z, u = sys_pop.assemble()
    with pytest.raises(SingularSystem):
        solve_interacted(sys_pop)
    stacked, *_ = np.linalg.lstsq(Z, u, rcond=None)
    # u must lie in the column space for the lstsq solution to solve exactly
    assert np.linalg.norm(Z @ stacked - u) < 1e-10 * max(np.linalg.norm(u), 1.0)
    d = X.shape[2]
    beta = {g: stacked[k * d : (k + 1) * d] for k, g in enumerate(sys_pop.groups)}
    c = np.asarray(eff.c, float)
    v_opt = exact_estimator_variance(
        potentials, spec, c, beta_by_group=beta, X=X
    ).total_variance
    # optimal among random perturbations
    rng = np.random.default_rng(5)
    for _ in range(25):
        pert = {g: b + rng.normal(size=d) * 0.3 for g, b in beta.items()}
        v = exact_estimator_variance(
            potentials, spec, c, beta_by_group=pert, X=X
        ).total_variance
        assert v >= v_opt - 1e-10 * max(v_opt, 1.0)
    # moving along a null direction keeps the variance flat
    w, V = np.linalg.eigh(Z)
    null = V[:, np.abs(w) < 1e-8 * np.max(np.abs(w))]
    if null.shape[1]:
        shifted = stacked + null[:, 0]
        beta2 = {g: shifted[k * d : (k + 1) * d] for k, g in enumerate(sys_pop.groups)}
        v2 = exact_estimator_variance(
            potentials, spec, c, beta_by_group=beta2, X=X
        ).total_variance
        assert abs(v2 - v_opt) < 1e-8 * max(v_opt, 1.0)


def test_twfe_equals_plugin_direct(setup):
    # absorbing the within-group fixed effects double-decenters each block,
    # so the weighted TWFE regression solves exactly the shared-beta plug-in
    # normal equations for the direct effect
    from mrd_adjust import plugin_system, solve_beta

    spec, potentials, X = setup
    for seed in range(6):
        a = sample_assignment(spec, seed)
        part = partition(spec, a)
        Y = observed_matrix(potentials, a)
        tau_fe, beta_fe = wls_twfe_direct(Y, X, part)
        sys_hat = plugin_system(EffectSpec.preset("direct"), X, Y, part)
        beta_opt = solve_beta(sys_hat)
        tau_opt = tau_imputation(Y, X, part, [1, -1, -1, 1], beta_opt)
        assert np.allclose(beta_fe, beta_opt, rtol=1e-8, atol=1e-10)
        assert abs(tau_fe - tau_opt) < 1e-8 * max(abs(tau_opt), 1.0)


def test_twfe_without_covariates_is_unadjusted():
    spec = DesignSpec(I=6, J=8, I_T=3, J_T=4)
    potentials, _ = random_potentials(spec, seed=9)
    X0 = np.empty((6, 8, 0))
    a = sample_assignment(spec, 3)
    part = partition(spec, a)
    Y = observed_matrix(potentials, a)
    from mrd_adjust import tau_unadjusted

    tau_fe, beta = wls_twfe_direct(Y, X0, part)
    assert beta.shape == (0,)
    assert abs(tau_fe - tau_unadjusted(Y, part, [1, -1, -1, 1])) < 1e-10


def test_interacted_estimate_beats_unadjusted_at_scale():
    # with strong covariate signal and a reasonable size, the exact design
    # variance of the population-interacted estimator is far below unadjusted
    spec = DesignSpec(I=30, J=30, I_T=15, J_T=15)
    potentials, X = random_potentials(spec, seed=55, scale=0.3)
    for name in ("total", "buyer_spillover"):
        eff = EffectSpec.preset(name)
        c = np.asarray(eff.c, float)
        beta = solve_interacted(interacted_population_system(eff, X, potentials, spec))
        full = {g: beta.get(g, np.zeros(X.shape[2])) for g in GROUPS}
        v_int = exact_estimator_variance(
            potentials, spec, c, beta_by_group=full, X=X
        ).total_variance
        v_un = exact_estimator_variance(potentials, spec, c).total_variance
        assert v_int < 0.8 * v_un
