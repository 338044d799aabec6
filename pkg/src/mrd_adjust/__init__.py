"""Design-based analysis of simple multiple randomization designs (MRDs).

A simple multiple randomization design independently assigns a fixed number
of buyers and a fixed number of sellers to treatment, which partitions the
buyer x seller grid into four exposure groups.  This package provides

* design construction, assignment sampling and exhaustive enumeration
  (:mod:`mrd_adjust.design`),
* finite-population moment machinery (:mod:`mrd_adjust.moments`),
* unadjusted, ANCOVA and variance-optimal regression-adjusted estimators
  of total / direct / spillover effects (:mod:`mrd_adjust.estimators`),
* exact design-based variances and the conservative variance estimator
  with confidence intervals (:mod:`mrd_adjust.variance`),
* CLT and variance-regime diagnostics (:mod:`mrd_adjust.diagnostics`),
* data generating processes and a deterministic Monte Carlo harness
  (:mod:`mrd_adjust.simulate`),
* CSV/JSON I/O plus a command line interface (:mod:`mrd_adjust.io`,
  :mod:`mrd_adjust.cli`).
"""

from .design import (
    Assignment,
    CapExceeded,
    DesignSpec,
    GroupPartition,
    GROUPS,
    assignment_matrix,
    enumerate_assignments,
    partition,
    sample_assignment,
)
from .estimators import (
    AdjustedEstimate,
    AdjustmentSystem,
    EffectSpec,
    InteractedSystem,
    SingularSystem,
    ancova_beta,
    estimate,
    group_mean,
    interacted_system,
    noninteracted_coefficients,
    plugin_system,
    population_system,
    solve_beta,
    solve_interacted,
    tau_imputation,
    tau_interacted,
    tau_unadjusted,
    wls_twfe_direct,
)
from .diagnostics import (
    CltBoundReport,
    clt_bound_terms,
    clt_condition_check,
    power_iteration,
    pseudo_outcomes,
    variance_regime,
)
from .io import (
    InconsistentTreatment,
    MissingPair,
    NonFinite,
    StudyConfig,
    load_long_csv,
    write_long_csv,
)
from .simulate import (
    MarketplaceDGP,
    MarketplaceTables,
    MCReport,
    NormalDGP,
    RankOneDGP,
    SparseSubgraphDGP,
    brute_force_distribution,
    gen_marketplace,
    gen_normal,
    gen_sparse,
    monte_carlo,
)
from .variance import (
    ConservativeComponents,
    VarianceReport,
    confidence_interval,
    conservative_variance,
    exact_estimator_variance,
    exact_group_covariance,
    exact_group_variance,
    sigma_hat_gamma,
)

SPEC_VERSION = "1"

__all__ = [
    "Assignment",
    "AdjustedEstimate",
    "AdjustmentSystem",
    "CapExceeded",
    "CltBoundReport",
    "ConservativeComponents",
    "DesignSpec",
    "EffectSpec",
    "GroupPartition",
    "GROUPS",
    "InconsistentTreatment",
    "InteractedSystem",
    "MarketplaceDGP",
    "MarketplaceTables",
    "MCReport",
    "MissingPair",
    "NonFinite",
    "NormalDGP",
    "RankOneDGP",
    "SPEC_VERSION",
    "SingularSystem",
    "SparseSubgraphDGP",
    "StudyConfig",
    "VarianceReport",
    "ancova_beta",
    "assignment_matrix",
    "brute_force_distribution",
    "clt_bound_terms",
    "clt_condition_check",
    "confidence_interval",
    "conservative_variance",
    "enumerate_assignments",
    "estimate",
    "gen_marketplace",
    "gen_normal",
    "gen_sparse",
    "load_long_csv",
    "monte_carlo",
    "power_iteration",
    "pseudo_outcomes",
    "exact_estimator_variance",
    "exact_group_covariance",
    "exact_group_variance",
    "group_mean",
    "interacted_system",
    "noninteracted_coefficients",
    "partition",
    "plugin_system",
    "population_system",
    "sample_assignment",
    "sigma_hat_gamma",
    "solve_beta",
    "solve_interacted",
    "tau_imputation",
    "tau_interacted",
    "tau_unadjusted",
    "variance_regime",
    "wls_twfe_direct",
    "write_long_csv",
]
