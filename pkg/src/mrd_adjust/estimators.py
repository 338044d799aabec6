"""Point estimators for doubly-randomized group-mean contrasts.

Includes the unadjusted contrast, imputation (regression-adjusted)
estimators with a shared or per-group coefficient, ANCOVA, the optimal
plug-in adjustments (non-interacted and interacted), and the weighted
two-way-fixed-effects regression that reproduces the direct-effect
plug-in estimate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._norm import z_quantile
from .design import GROUPS, DesignSpec
from .moments import (
    group_u_hat,
    group_Z_hat,
    population_u,
    population_Z,
)

PRESETS = {
    "total": (1.0, 0.0, 0.0, -1.0),
    "direct": (1.0, -1.0, -1.0, 1.0),
    "buyer_spillover": (0.0, 1.0, 0.0, -1.0),
    "seller_spillover": (0.0, 0.0, 1.0, -1.0),
}

_COND_LIMIT = 1e12


class SingularSystem(Exception):
    """Raised when an adjustment system cannot be solved reliably."""

    def __init__(self, cond: float, detail: str = ""):
        self.cond = cond
        msg = f"adjustment system is numerically singular (condition estimate {cond:.3e})"
        if detail:
            msg += "; " + detail
        super().__init__(msg)


@dataclass(frozen=True)
class EffectSpec:
    """A contrast over the four treatment groups.

    ``c`` is indexed in the order (tr, ib, is, cc).  Presets: total,
    direct, buyer_spillover, seller_spillover.  Custom contrasts with
    nonzero coefficient sum are allowed for point estimation but refused
    by adjustment-based inference.
    """

    name: str
    c: tuple

    def __post_init__(self):
        if len(self.c) != 4:
            raise ValueError("c must have one coefficient per group")
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))

    @classmethod
    def preset(cls, name):
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return cls(name=name, c=PRESETS[name])

    @classmethod
    def custom(cls, c, name="custom"):
        return cls(name=name, c=tuple(c))

    @property
    def balanced(self):
        return abs(sum(self.c)) < 1e-12


@dataclass(frozen=True)
class EffectCoefficients:
    """Weights a[group, moment] combining Z^theta / u^theta into one system."""

    effect: str
    a: dict  # (group, theta) -> float


@dataclass
class AdjustmentSystem:
    """Normal equations Z beta = u for a shared (non-interacted) adjustment."""

    effect: str
    Z: np.ndarray
    u: np.ndarray
    warning: str | None = None


@dataclass
class InteractedSystem:
    """Block normal equations for per-group adjustments.

    ``Z_blocks[(g, g')]`` are d x d and ``u_blocks[g]`` are d-vectors for
    the active groups; the assembled matrix is symmetric by construction.
    """

    effect: str
    groups: tuple
    Z_blocks: dict
    u_blocks: dict

    def assemble(self):
        d = len(self.u_blocks[self.groups[0]])
        k = len(self.groups)
        Z = np.zeros((k * d, k * d))
        u = np.zeros(k * d)
        for a, ga in enumerate(self.groups):
            u[a * d : (a + 1) * d] = self.u_blocks[ga]
            for b, gb in enumerate(self.groups):
                Z[a * d : (a + 1) * d, b * d : (b + 1) * d] = self.Z_blocks[(ga, gb)]
        return Z, u


@dataclass
class AdjustedEstimate:
    effect: EffectSpec
    method: str
    point: float
    beta: object  # d-vector, map group -> d-vector, or None
    variance_bound: float
    ci_low: float
    ci_high: float
    level: float
    diagnostics: dict = field(default_factory=dict)


def _as_c(effect):
    if isinstance(effect, EffectSpec):
        return np.asarray(effect.c, dtype=float)
    return np.asarray(effect, dtype=float)


def group_mean(Y_obs, part, group):
    """Mean of the observed outcomes in one treatment group's block."""
    bi, sj = part.block(group)
    if len(bi) == 0 or len(sj) == 0:
        raise ValueError(f"group {group!r} has an empty block")
    return float(np.mean(np.asarray(Y_obs, dtype=float)[np.ix_(bi, sj)]))


def tau_unadjusted(Y_obs, part, c):
    """Contrast of group means, sum_g c_g * mean(group g)."""
    c = _as_c(c)
    return float(sum(w * group_mean(Y_obs, part, g) for w, g in zip(c, GROUPS) if w != 0.0))


def tau_imputation(Y_obs, X, part, c, beta):
    """Contrast of group means of the residuals y - X'beta (shared beta)."""
    Y = np.asarray(Y_obs, dtype=float)
    beta = np.asarray(beta, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.shape[:2] != Y.shape or X.shape[2] != beta.shape[0]:
        raise ValueError("shape mismatch between outcomes, covariates, and beta")
    return tau_unadjusted(Y - X @ beta, part, c)


def tau_interacted(Y_obs, X, part, c, beta_by_group):
    """Contrast of per-group adjusted means with a separate beta per group."""
    Y = np.asarray(Y_obs, dtype=float)
    X = np.asarray(X, dtype=float)
    c = _as_c(c)
    total = 0.0
    for w, g in zip(c, GROUPS):
        if w == 0.0:
            continue
        bi, sj = part.block(g)
        b = np.asarray(beta_by_group[g], dtype=float)
        block = Y[np.ix_(bi, sj)] - X[np.ix_(bi, sj)] @ b
        total += w * float(np.mean(block))
    return float(total)


def ancova_beta(Y_obs, X, part):
    """OLS of y on the four group indicators plus shared covariates.

    Returns (beta, group_means) where group_means are the fitted group
    intercepts; for any balanced contrast the implied estimate equals
    tau_imputation at the returned beta.
    """
    Y = np.asarray(Y_obs, dtype=float)
    X = np.asarray(X, dtype=float)
    I, J = Y.shape
    d = X.shape[2]
    rows = []
    targets = []
    for gi, g in enumerate(GROUPS):
        bi, sj = part.block(g)
        n = len(bi) * len(sj)
        dummies = np.zeros((n, 4))
        dummies[:, gi] = 1.0
        rows.append(np.hstack([dummies, X[np.ix_(bi, sj)].reshape(n, d)]))
        targets.append(Y[np.ix_(bi, sj)].reshape(n))
    A = np.vstack(rows)
    b = np.concatenate(targets)
    coef, _, rank, sv = np.linalg.lstsq(A, b, rcond=None)
    if rank < 4 + d:
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
        raise SingularSystem(cond, "collinear covariates in the ANCOVA design")
    return coef[4:], coef[:4]


# ---------------------------------------------------------------------------
# optimal non-interacted adjustment
# ---------------------------------------------------------------------------


def noninteracted_coefficients(effect, spec: DesignSpec) -> EffectCoefficients:
    """Closed-form weights defining the shared-beta optimality system."""
    name = effect.name if isinstance(effect, EffectSpec) else effect
    I, J = spec.I, spec.J
    I_T, I_C, J_T, J_C = spec.I_T, spec.I_C, spec.J_T, spec.J_C
    a = {}
    if name == "direct":
        for g in GROUPS:
            I_g, J_g = spec.group_sizes(g)
            a[(g, "BS")] = 1.0 / (I_g * J_g)
    elif name == "total":
        a[("tr", "B")] = 1.0 / I_T
        a[("tr", "S")] = 1.0 / J_T
        a[("tr", "BS")] = (I_C * J_C / (I_T * J_T) - 1.0) / (I * J)
        a[("cc", "B")] = 1.0 / I_C
        a[("cc", "S")] = 1.0 / J_C
        a[("cc", "BS")] = (I_T * J_T / (I_C * J_C) - 1.0) / (I * J)
    elif name == "buyer_spillover":
        a[("ib", "B")] = 1.0 / I_T
        a[("cc", "B")] = 1.0 / I_C
        a[("ib", "BS")] = J_T / (I_T * J_C * J)
        a[("cc", "BS")] = J_T / (I_C * J_C * J)
    elif name == "seller_spillover":
        a[("is", "S")] = 1.0 / J_T
        a[("cc", "S")] = 1.0 / J_C
        a[("is", "BS")] = I_T / (J_T * I_C * I)
        a[("cc", "BS")] = I_T / (J_C * I_C * I)
    else:
        raise ValueError(
            f"no closed-form coefficient table for effect {name!r}; supply coefficients"
        )
    return EffectCoefficients(effect=name, a=a)


def _partition_spec(part) -> DesignSpec:
    I_T = len(part.buyers["tr"])
    I_C = len(part.buyers["cc"])
    J_T = len(part.sellers["tr"])
    J_C = len(part.sellers["ib"])
    return DesignSpec(I=I_T + I_C, J=J_T + J_C, I_T=I_T, J_T=J_T)


def plugin_system(effect, X, Y_obs, part) -> AdjustmentSystem:
    """Estimated normal equations from observed within-group moments."""
    spec = _partition_spec(part)
    coefs = noninteracted_coefficients(effect, spec)
    active = sorted({g for g, _ in coefs.a})
    d = np.asarray(X).shape[2]
    Z = np.zeros((d, d))
    u = np.zeros(d)
    Zg = {g: group_Z_hat(X, part, g) for g in active}
    ug = {g: group_u_hat(X, Y_obs, part, g) for g in active}
    for (g, theta), w in coefs.a.items():
        Z += w * Zg[g][theta]
        u += w * ug[g][theta]
    warning = None
    min_dof = min(
        (len(part.block(g)[0]) - 1) * (len(part.block(g)[1]) - 1) for g in active
    )
    if d > min_dof:
        warning = (
            f"{d} covariates exceed the smallest usable block ({min_dof} degrees of "
            "freedom); the plug-in adjustment may be unstable"
        )
        warnings.warn(warning)
    name = effect.name if isinstance(effect, EffectSpec) else effect
    return AdjustmentSystem(effect=name, Z=Z, u=u, warning=warning)


def population_system(effect, X, potentials, spec: DesignSpec) -> AdjustmentSystem:
    """Exact normal equations from the full potential-outcome tables."""
    coefs = noninteracted_coefficients(effect, spec)
    Zt = population_Z(X)
    ut = {g: population_u(X, potentials[g]) for g in {g for g, _ in coefs.a}}
    d = np.asarray(X).shape[2]
    Z = np.zeros((d, d))
    u = np.zeros(d)
    for (g, theta), w in coefs.a.items():
        Z += w * Zt[theta]
        u += w * ut[g][theta]
    name = effect.name if isinstance(effect, EffectSpec) else effect
    return AdjustmentSystem(effect=name, Z=Z, u=u)


def _solve_checked(Z, u, what="adjustment system", require_pd=True):
    Z = np.asarray(Z, dtype=float)
    u = np.asarray(u, dtype=float)
    cond = float(np.linalg.cond(Z))
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularSystem(cond, what)
    try:
        if require_pd:
            np.linalg.cholesky(Z)
        beta = np.linalg.solve(Z, u)
    except np.linalg.LinAlgError:
        raise SingularSystem(cond, f"{what} is not positive definite")
    resid = float(np.linalg.norm(Z @ beta - u))
    budget = 1e-8 * (np.linalg.norm(Z) * np.linalg.norm(beta) + np.linalg.norm(u))
    if resid > budget:
        raise SingularSystem(cond, f"{what} solve residual {resid:.3e} exceeds tolerance")
    return beta


def solve_beta(system: AdjustmentSystem):
    """Solve Z beta = u with a condition check and residual verification."""
    return _solve_checked(system.Z, system.u, f"{system.effect} system")


# ---------------------------------------------------------------------------
# optimal interacted adjustment
# ---------------------------------------------------------------------------


def _interacted_tables(name, spec: DesignSpec):
    """Block coefficient tables for the per-group quadratic objective.

    Returns (groups, Zcoef, ucoef): Zcoef[(g, g')] maps moment name to a
    scalar weight on Z^theta (upper triangle, g <= g' in group order);
    ucoef[g] is a list of (weight, source group, moment name) triples.
    """
    I, J = spec.I, spec.J
    IT, IC, JT, JC = spec.I_T, spec.I_C, spec.J_T, spec.J_C
    if name == "direct":
        groups = ("tr", "ib", "is", "cc")
        Zc = {
            ("tr", "tr"): {"B": IC / (IT * I), "S": JC / (JT * J), "BS": IC * JC / (IT * JT * I * J)},
            ("tr", "ib"): {"B": -IC / (IT * I), "S": 1 / J, "BS": IC / (IT * I * J)},
            ("tr", "is"): {"B": 1 / I, "S": -JC / (JT * J), "BS": JC / (JT * I * J)},
            ("tr", "cc"): {"B": -1 / I, "S": -1 / J, "BS": 1 / (I * J)},
            ("ib", "ib"): {"B": IC / (IT * I), "S": JT / (JC * J), "BS": IC * JT / (IT * JC * I * J)},
            ("ib", "is"): {"B": -1 / I, "S": -1 / J, "BS": 1 / (I * J)},
            ("ib", "cc"): {"B": 1 / I, "S": -JT / (JC * J), "BS": JT / (JC * I * J)},
            ("is", "is"): {"B": IT / (IC * I), "S": JC / (JT * J), "BS": IT * JC / (IC * JT * I * J)},
            ("is", "cc"): {"B": -IT / (IC * I), "S": 1 / J, "BS": IT / (IC * I * J)},
            ("cc", "cc"): {"B": IT / (IC * I), "S": JT / (JC * J), "BS": IT * JT / (IC * JC * I * J)},
        }
        uc = {
            "tr": [
                (IC * JC / (IT * JT * I * J), "tr", "BS"),
                (IC / (IT * I * J), "ib", "BS"),
                (JC / (JT * I * J), "is", "BS"),
                (1 / (I * J), "cc", "BS"),
                (IC / (IT * I), "tr", "B"),
                (-IC / (IT * I), "ib", "B"),
                (1 / I, "is", "B"),
                (-1 / I, "cc", "B"),
                (JC / (JT * J), "tr", "S"),
                (1 / J, "ib", "S"),
                (-JC / (JT * J), "is", "S"),
                (-1 / J, "cc", "S"),
            ],
            "ib": [
                (IC * JT / (IT * JC * I * J), "ib", "BS"),
                (IC / (IT * I * J), "tr", "BS"),
                (1 / (I * J), "is", "BS"),
                (JT / (JC * I * J), "cc", "BS"),
                (IC / (IT * I), "ib", "B"),
                (-IC / (IT * I), "tr", "B"),
                (-1 / I, "is", "B"),
                (1 / I, "cc", "B"),
                (JT / (JC * J), "ib", "S"),
                (1 / J, "tr", "S"),
                (-1 / J, "is", "S"),
                (-JT / (JC * J), "cc", "S"),
            ],
            "is": [
                (IT * JC / (IC * JT * I * J), "is", "BS"),
                (JC / (JT * I * J), "tr", "BS"),
                (1 / (I * J), "ib", "BS"),
                (IT / (IC * I * J), "cc", "BS"),
                (IT / (IC * I), "is", "B"),
                (1 / I, "tr", "B"),
                (-1 / I, "ib", "B"),
                (-IT / (IC * I), "cc", "B"),
                (JC / (JT * J), "is", "S"),
                (-JC / (JT * J), "tr", "S"),
                (-1 / J, "ib", "S"),
                (1 / J, "cc", "S"),
            ],
            "cc": [
                (IT * JT / (IC * JC * I * J), "cc", "BS"),
                (1 / (I * J), "tr", "BS"),
                (JT / (JC * I * J), "ib", "BS"),
                (IT / (IC * I * J), "is", "BS"),
                (IT / (IC * I), "cc", "B"),
                (-1 / I, "tr", "B"),
                (1 / I, "ib", "B"),
                (-IT / (IC * I), "is", "B"),
                (JT / (JC * J), "cc", "S"),
                (-1 / J, "tr", "S"),
                (-JT / (JC * J), "ib", "S"),
                (1 / J, "is", "S"),
            ],
        }
        return groups, Zc, uc
    if name == "total":
        groups = ("tr", "cc")
        Zc = {
            ("tr", "tr"): {"B": IC / (IT * I), "S": JC / (JT * J), "BS": IC * JC / (IT * JT * I * J)},
            ("tr", "cc"): {"B": 1 / I, "S": 1 / J, "BS": -1 / (I * J)},
            ("cc", "cc"): {"B": IT / (IC * I), "S": JT / (JC * J), "BS": IT * JT / (IC * JC * I * J)},
        }
        uc = {
            "tr": [
                (IC / (IT * I), "tr", "B"),
                (1 / I, "cc", "B"),
                (JC / (JT * J), "tr", "S"),
                (1 / J, "cc", "S"),
                (IC * JC / (IT * JT * I * J), "tr", "BS"),
                (-1 / (I * J), "cc", "BS"),
            ],
            "cc": [
                (IT / (IC * I), "cc", "B"),
                (1 / I, "tr", "B"),
                (JT / (JC * J), "cc", "S"),
                (1 / J, "tr", "S"),
                (IT * JT / (IC * JC * I * J), "cc", "BS"),
                (-1 / (I * J), "tr", "BS"),
            ],
        }
        return groups, Zc, uc
    if name == "buyer_spillover":
        groups = ("ib", "cc")
        Zc = {
            ("ib", "ib"): {"B": IC / (IT * I), "S": JT / (JC * J), "BS": JT * IC / (IT * JC * I * J)},
            ("ib", "cc"): {"B": 1 / I, "S": -JT / (JC * J), "BS": JT / (JC * I * J)},
            ("cc", "cc"): {"B": IT / (IC * I), "S": JT / (JC * J), "BS": JT * IT / (IC * JC * I * J)},
        }
        uc = {
            "ib": [
                (IC / (IT * I), "ib", "B"),
                (1 / I, "cc", "B"),
                (JT / (JC * J), "ib", "S"),
                (-JT / (JC * J), "cc", "S"),
                (JT * IC / (IT * JC * I * J), "ib", "BS"),
                (JT / (JC * I * J), "cc", "BS"),
            ],
            "cc": [
                (IT / (IC * I), "cc", "B"),
                (1 / I, "ib", "B"),
                (JT / (JC * J), "cc", "S"),
                (-JT / (JC * J), "ib", "S"),
                (JT * IT / (IC * JC * I * J), "cc", "BS"),
                (JT / (JC * I * J), "ib", "BS"),
            ],
        }
        return groups, Zc, uc
    if name == "seller_spillover":
        groups = ("is", "cc")
        Zc = {
            ("is", "is"): {"B": IT / (IC * I), "S": JC / (JT * J), "BS": IT * JC / (JT * IC * I * J)},
            ("is", "cc"): {"B": -IT / (IC * I), "S": 1 / J, "BS": IT / (IC * I * J)},
            ("cc", "cc"): {"B": IT / (IC * I), "S": JT / (JC * J), "BS": IT * JT / (JC * IC * I * J)},
        }
        uc = {
            "is": [
                (IT / (IC * I), "is", "B"),
                (-IT / (IC * I), "cc", "B"),
                (JC / (JT * J), "is", "S"),
                (1 / J, "cc", "S"),
                (IT * JC / (JT * IC * I * J), "is", "BS"),
                (IT / (IC * I * J), "cc", "BS"),
            ],
            "cc": [
                (IT / (IC * I), "cc", "B"),
                (-IT / (IC * I), "is", "B"),
                (JT / (JC * J), "cc", "S"),
                (1 / J, "is", "S"),
                (IT * JT / (JC * IC * I * J), "cc", "BS"),
                (IT / (IC * I * J), "is", "BS"),
            ],
        }
        return groups, Zc, uc
    raise ValueError(f"no interacted system for effect {name!r}")


def _assemble_interacted(name, groups, Zc, uc, Ztheta_of, utheta_of, d):
    """Build symmetric block matrices from per-(pair, group) moment lookups."""
    Z_blocks = {}
    for a, ga in enumerate(groups):
        for gb in groups[a:]:
            table = Zc[(ga, gb)]
            blk = np.zeros((d, d))
            for theta, w in table.items():
                blk += w * Ztheta_of(ga, gb, theta)
            Z_blocks[(ga, gb)] = blk
            Z_blocks[(gb, ga)] = blk.T
    u_blocks = {}
    for g in groups:
        vec = np.zeros(d)
        for w, src, theta in uc[g]:
            vec += w * utheta_of(src, theta)
        u_blocks[g] = vec
    return InteractedSystem(effect=name, groups=groups, Z_blocks=Z_blocks, u_blocks=u_blocks)


def interacted_system(effect, X, Y_obs, part) -> InteractedSystem:
    """Estimated block system for per-group adjustments.

    Diagonal blocks use that group's covariate moments; off-diagonal
    blocks average the two groups' moment estimates so the assembled
    matrix stays exactly symmetric.
    """
    name = effect.name if isinstance(effect, EffectSpec) else effect
    spec = _partition_spec(part)
    groups, Zc, uc = _interacted_tables(name, spec)
    d = np.asarray(X).shape[2]
    Zg = {g: group_Z_hat(X, part, g) for g in groups}
    ug = {g: group_u_hat(X, Y_obs, part, g) for g in groups}

    def Ztheta_of(ga, gb, theta):
        if ga == gb:
            return Zg[ga][theta]
        return 0.5 * (Zg[ga][theta] + Zg[gb][theta])

    return _assemble_interacted(name, groups, Zc, uc, Ztheta_of, lambda g, t: ug[g][t], d)


def interacted_population_system(effect, X, potentials, spec: DesignSpec) -> InteractedSystem:
    """Exact block system from full potential-outcome tables."""
    name = effect.name if isinstance(effect, EffectSpec) else effect
    groups, Zc, uc = _interacted_tables(name, spec)
    d = np.asarray(X).shape[2]
    Zt = population_Z(X)
    ut = {g: population_u(X, potentials[g]) for g in groups}
    return _assemble_interacted(
        name, groups, Zc, uc, lambda ga, gb, t: Zt[t], lambda g, t: ut[g][t], d
    )


def solve_interacted(system: InteractedSystem) -> dict:
    """Solve the assembled block system; returns a map group -> beta."""
    Z, u = system.assemble()
    # The assembled estimate need not be positive definite in small samples
    # even when the underlying population objective is; a symmetric solve
    # with a condition check is the right gate here.
    beta = _solve_checked(Z, u, f"interacted {system.effect} system", require_pd=False)
    d = len(beta) // len(system.groups)
    return {g: beta[a * d : (a + 1) * d] for a, g in enumerate(system.groups)}


# ---------------------------------------------------------------------------
# weighted two-way fixed effects (direct effect)
# ---------------------------------------------------------------------------


def wls_twfe_direct(Y_obs, X, part):
    """Weighted interacted two-way-FE regression for the direct effect.

    Each group gets its own intercept and within-group buyer/seller fixed
    effects constrained to sum to zero; the covariate coefficient beta is
    shared and each cell in group g carries weight 1/(I_g^2 J_g^2).  The
    returned tau is the fully-interacted intercept contrast, which equals
    the plug-in direct-effect estimate at the fitted beta.
    """
    Y = np.asarray(Y_obs, dtype=float)
    X = np.asarray(X, dtype=float)
    d = X.shape[2] if X.ndim == 3 else 0

    layouts = []
    n_params = d
    for g in GROUPS:
        bi, sj = part.block(g)
        n, m = len(bi), len(sj)
        layouts.append((g, bi, sj, n_params, n_params + 1, n_params + n))
        # intercept, n-1 free buyer effects, m-1 free seller effects
        n_params += 1 + (n - 1) + (m - 1)

    rows = []
    targets = []
    for g, bi, sj, p0, prow, pcol in layouts:
        n, m = len(bi), len(sj)
        w = 1.0 / (n * m)  # sqrt of the cell weight 1/(n^2 m^2)
        blockA = np.zeros((n * m, n_params))
        blockA[:, p0] = 1.0
        for a in range(n):
            cols = slice(a * m, (a + 1) * m)
            if a < n - 1:
                blockA[cols, prow + a] = 1.0
            else:  # last row effect is minus the sum of the others
                blockA[cols, prow : prow + n - 1] = -1.0
        for b in range(m):
            idx = np.arange(b, n * m, m)
            if b < m - 1:
                blockA[idx, pcol + b] = 1.0
            else:
                blockA[np.ix_(idx, range(pcol, pcol + m - 1))] = -1.0
        if d:
            blockA[:, :d] = X[np.ix_(bi, sj)].reshape(n * m, d)
        rows.append(w * blockA)
        targets.append(w * Y[np.ix_(bi, sj)].reshape(n * m))

    A = np.vstack(rows)
    b = np.concatenate(targets)
    coef, _, rank, sv = np.linalg.lstsq(A, b, rcond=None)
    if rank < n_params:
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
        raise SingularSystem(cond, "rank-deficient fixed-effects design")
    intercepts = {g: coef[p0] for g, _, _, p0, _, _ in layouts}
    tau = intercepts["tr"] - intercepts["ib"] - intercepts["is"] + intercepts["cc"]
    return float(tau), coef[:d]


# ---------------------------------------------------------------------------
# facade
# ---------------------------------------------------------------------------


def estimate(effect, Y_obs, X, part, spec, method="unadjusted", level=0.95) -> AdjustedEstimate:
    """Point estimate with a conservative variance bound and interval."""
    from .variance import confidence_interval, conservative_variance, sigma_hat_gamma

    if isinstance(effect, str):
        effect = EffectSpec.preset(effect)
    c = np.asarray(effect.c, dtype=float)
    Y = np.asarray(Y_obs, dtype=float)
    if method != "unadjusted" and not effect.balanced:
        raise ValueError(
            "adjustment-based inference requires the contrast coefficients to sum to zero"
        )

    beta = None
    if method == "unadjusted":
        point = tau_unadjusted(Y, part, c)
        resid = Y
    elif method == "ancova":
        beta, _ = ancova_beta(Y, X, part)
        point = tau_imputation(Y, X, part, c, beta)
        resid = Y - np.asarray(X, dtype=float) @ beta
    elif method == "opt_noninteracted":
        system = plugin_system(effect, X, Y, part)
        beta = solve_beta(system)
        point = tau_imputation(Y, X, part, c, beta)
        resid = Y - np.asarray(X, dtype=float) @ beta
    elif method == "opt_interacted":
        system = interacted_system(effect, X, Y, part)
        beta = solve_interacted(system)
        point = tau_interacted(Y, X, part, c, beta)
        resid = Y.copy()
        Xf = np.asarray(X, dtype=float)
        for g in system.groups:
            bi, sj = part.block(g)
            resid[np.ix_(bi, sj)] -= Xf[np.ix_(bi, sj)] @ beta[g]
    else:
        raise ValueError(f"unknown method {method!r}")

    v_hat = conservative_variance(resid, part, c)
    lo, hi = confidence_interval(point, v_hat, level)
    diag = {
        g: sigma_hat_gamma(resid, part, g)
        for g, w in zip(GROUPS, c)
        if w != 0.0
    }
    return AdjustedEstimate(
        effect=effect,
        method=method,
        point=point,
        beta=beta,
        variance_bound=v_hat,
        ci_low=lo,
        ci_high=hi,
        level=level,
        diagnostics={"sigma_components": diag, "z": z_quantile(level)},
    )
