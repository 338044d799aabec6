"""Checkable diagnostics for the normal approximation and variance regime.

The quantitative CLT bound for a doubly-randomized mean is a sum of five
computable terms; their magnitudes (and the transposed variant, which can
be sharper for imbalanced matrices) are reported as-is.  None of these
gate estimation — asymptotic conditions cannot be verified from a single
instance, so the reports annotate rather than refuse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import GROUPS, DesignSpec
from .moments import double_decenter, grand_mean, row_means, col_means
from .variance import exact_estimator_variance, exact_group_variance


@dataclass
class CltBoundReport:
    term_sqrtI: float
    term_rowmax: float
    term_colmax: float
    term_entrymax: float
    term_opnorm: float
    sigma_tot: float
    transposed: "CltBoundReport | None" = None

    def to_dict(self):
        out = {
            "term_sqrtI": self.term_sqrtI,
            "term_rowmax": self.term_rowmax,
            "term_colmax": self.term_colmax,
            "term_entrymax": self.term_entrymax,
            "term_opnorm": self.term_opnorm,
            "sigma_tot": self.sigma_tot,
        }
        if self.transposed is not None:
            out["transposed"] = self.transposed.to_dict()
        return out


def power_iteration(M, tol=1e-8, max_iter=10000):
    """Spectral norm (largest singular value) of a dense matrix.

    Iterates v <- M'Mv from a deterministic start until the Rayleigh
    estimate is stable to ``tol`` relative, or ``max_iter`` sweeps.
    """
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    n = M.shape[1]
    v = np.ones(n) / math.sqrt(n)
    sigma = 0.0
    for _ in range(max_iter):
        w = M.T @ (M @ v)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        new_sigma = math.sqrt(float(v @ (M.T @ (M @ v))))
        if abs(new_sigma - sigma) <= tol * max(new_sigma, 1e-300):
            return new_sigma
        sigma = new_sigma
    return sigma


def _bound_terms_oneside(M, spec):
    I, J = M.shape
    gm = grand_mean(M)
    rm = row_means(M)
    cm = col_means(M)
    var = exact_group_variance(M, spec, "tr")  # sizes (I_T, J_T)
    if var <= 0:
        raise ValueError("the doubly-randomized mean has zero variance")
    sigma = math.sqrt(var)
    return CltBoundReport(
        term_sqrtI=1.0 / math.sqrt(I),
        term_rowmax=float(np.max(np.abs(rm - gm))) / (I * sigma),
        term_colmax=float(np.max(np.abs(cm - gm))) / (J * sigma),
        term_entrymax=math.sqrt(math.log(I))
        / I**1.5
        * float(np.max(np.abs(M - rm[:, None])))
        / sigma,
        term_opnorm=math.sqrt(power_iteration(M - gm) / (I**2 * sigma)),
        sigma_tot=sigma,
    )


def clt_bound_terms(M, spec: DesignSpec) -> CltBoundReport:
    """The five terms bounding the distance to normality, both orientations.

    The transposed variant conditions on the buyer side first and can be
    sharper when I and J are very different.
    """
    M = np.asarray(M, dtype=float)
    rep = _bound_terms_oneside(M, spec)
    tspec = DesignSpec(I=spec.J, J=spec.I, I_T=spec.J_T, J_T=spec.I_T)
    rep.transposed = _bound_terms_oneside(M.T, tspec)
    return rep


def pseudo_outcomes(potentials, spec: DesignSpec):
    """Linear transforms z(g) whose treated-cell mean reproduces each group mean.

    For every group g, averaging z_ij(g) over the treated-by-treated cells
    equals the observed block mean of y(g); this reduces each group-mean
    estimator to a doubly-randomized mean of a single fixed matrix, which
    is what the normality bound applies to.
    """
    I, J = spec.I, spec.J
    I_T, I_C, J_T, J_C = spec.I_T, spec.I_C, spec.J_T, spec.J_C
    z = {"tr": np.asarray(potentials["tr"], dtype=float)}

    Y = np.asarray(potentials["ib"], dtype=float)
    z["ib"] = (J / J_C) * row_means(Y)[:, None] - (J_T / J_C) * Y

    Y = np.asarray(potentials["is"], dtype=float)
    z["is"] = (I / I_C) * col_means(Y)[None, :] - (I_T / I_C) * Y

    Y = np.asarray(potentials["cc"], dtype=float)
    z["cc"] = (I_T * J_T / (I_C * J_C)) * (
        (I * J / (I_T * J_T)) * grand_mean(Y)
        - (J / J_T) * row_means(Y)[:, None]
        - (I / I_T) * col_means(Y)[None, :]
        + Y
    )
    return z


def clt_condition_check(potentials, spec: DesignSpec, c) -> dict:
    """Magnitudes of the per-group max-deviation statistics.

    Each statistic is reported relative to Var(tau_hat)^(1/2).  These are
    magnitudes from one instance; they cannot verify an asymptotic
    vanishing claim, only flag obviously dominant terms.
    """
    c = np.asarray(c, dtype=float)
    var = exact_estimator_variance(potentials, spec, c).total_variance
    if var <= 0:
        raise ValueError("the contrast estimator has zero variance")
    scale = math.sqrt(var)
    I, J = spec.I, spec.J
    report = {}
    for w, g in zip(c, GROUPS):
        if w == 0.0:
            continue
        M = np.asarray(potentials[g], dtype=float)
        gm = grand_mean(M)
        rm = row_means(M)
        cm = col_means(M)
        report[g] = {
            "rowmax": float(np.max(np.abs(rm - gm))) / (I * scale),
            "colmax": float(np.max(np.abs(cm - gm))) / (J * scale),
            "entrymax": math.sqrt(math.log(I))
            / I**1.5
            * float(np.max(np.abs(M - cm[None, :])))
            / scale,
            "opnorm": power_iteration(M - gm) / (I**2 * scale),
        }
    report["note"] = (
        "magnitudes relative to the estimator standard deviation; "
        "asymptotic vanishing cannot be verified from a single instance"
    )
    return report


def variance_regime(potentials, spec: DesignSpec, c, threshold=0.9) -> dict:
    """Classify which moment scale drives the contrast variance.

    Row/column-mean variation contributes at the 1/I (1/J) scale while the
    doubly-decentered interaction contributes at 1/(IJ); the classification
    reports which bucket holds at least ``threshold`` of the total.
    """
    c = np.asarray(c, dtype=float)
    rep = exact_estimator_variance(potentials, spec, c)
    total = rep.total_variance
    if total <= 0:
        raise ValueError("the contrast estimator has zero variance")
    total = float(total)
    shares = {k: float(v) / total for k, v in rep.components.items()}
    bs_share = shares["B"] + shares["S"]
    if shares["BS"] >= threshold:
        label = "interaction_dominated"
    elif bs_share >= threshold:
        label = "buyer_seller_dominated"
    else:
        label = "mixed"
    return {
        "classification": label,
        "shares": shares,
        "total_variance": total,
        "threshold": threshold,
    }
