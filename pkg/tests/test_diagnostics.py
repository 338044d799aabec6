import itertools

import numpy as np
import pytest

from mrd_adjust import (
    DesignSpec,
    GROUPS,
    clt_bound_terms,
    clt_condition_check,
    enumerate_assignments,
    partition,
    power_iteration,
    pseudo_outcomes,
    variance_regime,
)

from conftest import random_potentials


def test_power_iteration_matches_svd():
    rng = np.random.default_rng(0)
    for _ in range(20):
        A = rng.normal(size=(rng.integers(2, 12), rng.integers(2, 12)))
        ref = np.linalg.norm(A, 2)
        assert abs(power_iteration(A) - ref) < 1e-6 * ref
    assert power_iteration(np.zeros((3, 3))) == 0.0


def test_pseudo_outcome_identity():
    # averaging z(g) over the treated-by-treated cells reproduces the
    # observed block mean of y(g) for every group and assignment
    spec = DesignSpec(I=5, J=4, I_T=2, J_T=2)
    potentials, _ = random_potentials(spec, seed=1)
    z = pseudo_outcomes(potentials, spec)
    for a in itertools.islice(enumerate_assignments(spec), 100):
        part = partition(spec, a)
        bt, st = part.buyers["tr"], part.sellers["tr"]
        for g in GROUPS:
            bi, sj = part.block(g)
            block_mean = potentials[g][np.ix_(bi, sj)].mean()
            z_mean = z[g][np.ix_(bt, st)].mean()
            assert abs(z_mean - block_mean) < 1e-12


def test_bound_terms_decrease_with_size():
    # for iid outcomes every term vanishes as the marketplace grows
    rng = np.random.default_rng(3)
    sizes = (20, 40, 80)
    reports = []
    for n in sizes:
        spec = DesignSpec(I=n, J=n, I_T=n // 2, J_T=n // 2)
        M = rng.normal(size=(n, n))
        reports.append(clt_bound_terms(M, spec))
    for term in ("term_sqrtI", "term_rowmax", "term_colmax", "term_entrymax", "term_opnorm"):
        vals = [getattr(r, term) for r in reports]
        assert vals[0] > vals[1] > vals[2], term


def test_rank_one_opnorm_term_persists():
    # outcome = x x' with centered x: the operator-norm term stays order one
    rng = np.random.default_rng(4)
    vals = []
    for n in (20, 40, 80):
        spec = DesignSpec(I=n, J=n, I_T=n // 2, J_T=n // 2)
        x = rng.normal(size=n)
        x -= x.mean()
        M = np.outer(x, x)
        vals.append(clt_bound_terms(M, spec).term_opnorm)
    assert min(vals) > 0.5 * max(vals)


def test_transposed_variant_swaps_sides():
    spec = DesignSpec(I=8, J=5, I_T=4, J_T=2)
    potentials, _ = random_potentials(spec, seed=6)
    rep = clt_bound_terms(potentials["tr"], spec)
    t = rep.transposed
    assert t is not None and t.transposed is None
    assert abs(t.term_sqrtI - 1 / np.sqrt(spec.J)) < 1e-15
    d = rep.to_dict()
    assert set(d["transposed"]) == set(d) - {"transposed"}


def test_condition_check_skips_zero_weight_groups():
    spec = DesignSpec(I=6, J=6, I_T=3, J_T=3)
    potentials, _ = random_potentials(spec, seed=7)
    report = clt_condition_check(potentials, spec, [0, 1, 0, -1])
    assert set(report) == {"ib", "cc", "note"}
    for g in ("ib", "cc"):
        assert all(v >= 0 for v in report[g].values())


def test_variance_regime_classification():
    spec = DesignSpec(I=10, J=10, I_T=5, J_T=5)
    rng = np.random.default_rng(8)
    # pure row structure: buyer/seller dominated
    row = rng.normal(size=(10, 1)) @ np.ones((1, 10))
    pot_row = {g: row + 0.001 * rng.normal(size=(10, 10)) for g in GROUPS}
    out = variance_regime(pot_row, spec, [1, 0, 0, -1])
    assert out["classification"] == "buyer_seller_dominated"
    # pure interaction structure: doubly-decentered noise
    noise = rng.normal(size=(10, 10))
    inter = noise - noise.mean(0) - noise.mean(1)[:, None] + noise.mean()
    pot_int = {g: inter.copy() for g in GROUPS}
    out = variance_regime(pot_int, spec, [1, 0, 0, -1])
    assert out["classification"] == "interaction_dominated"
    assert abs(sum(out["shares"].values()) - 1.0) < 1e-10
    assert out["total_variance"] > 0


def test_variance_regime_rejects_degenerate():
    spec = DesignSpec(I=6, J=6, I_T=3, J_T=3)
    const = {g: np.ones((6, 6)) for g in GROUPS}
    with pytest.raises(ValueError):
        variance_regime(const, spec, [1, 0, 0, -1])


def test_bound_terms_reject_constant_matrix():
    spec = DesignSpec(I=6, J=6, I_T=3, J_T=3)
    with pytest.raises(ValueError):
        clt_bound_terms(np.ones((6, 6)), spec)
