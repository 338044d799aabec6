"""Exact design-based variances and the conservative variance estimator.

The exact formulas require all four potential-outcome matrices and are
therefore oracle/simulation-grade.  The conservative estimator only needs
the observed matrix and the realized partition, and upper-bounds the
variance of any group-mean contrast via Cauchy-Schwarz.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._norm import z_quantile
from .design import GROUPS, DesignSpec
from .moments import double_decenter, omega, xi

#: Unordered group pairs in canonical order.
PAIRS = (("tr", "ib"), ("tr", "is"), ("tr", "cc"), ("ib", "is"), ("ib", "cc"), ("is", "cc"))

_SAME_ROWS = {"tr": 0, "ib": 0, "is": 1, "cc": 1}  # buyer side partition cell
_SAME_COLS = {"tr": 0, "ib": 1, "is": 0, "cc": 1}  # seller side partition cell


@dataclass
class VarianceReport:
    """Exact variance of a group-mean contrast with its decomposition."""

    c: dict
    group_variances: dict
    pair_covariances: dict
    total_variance: float
    components: dict  # contributions from B / S / BS moment terms

    def to_json(self) -> str:
        payload = {
            "schema_version": 1,
            "c": {g: self.c[g] for g in GROUPS},
            "group_variances": {g: self.group_variances[g] for g in GROUPS},
            "pair_covariances": {f"{a},{b}": self.pair_covariances[(a, b)] for a, b in PAIRS},
            "total_variance": self.total_variance,
            "components": {k: self.components[k] for k in ("B", "S", "BS")},
        }
        return json.dumps(payload, indent=2)


@dataclass
class ConservativeComponents:
    """Per-group pieces of the conservative variance estimator.

    ``sigma`` may be negative in finite samples; it is reported as-is and
    only clipped to its positive part inside the final bound.
    """

    group: str
    sigma_B: float
    sigma_S: float
    sigma_BS: float
    alpha_B: float
    alpha_S: float
    sigma: float

    @property
    def sigma_plus(self) -> float:
        return max(self.sigma, 0.0)


def exact_group_variance(M: np.ndarray, spec: DesignSpec, group: str) -> float:
    """Exact randomization variance of one group's observed mean.

    ``M`` is the full potential matrix for the group.  The formula is

        Var = (I-I_g)/(I_g I) * omega_B + (J-J_g)/(J_g J) * omega_S
              + (I-I_g)/(I_g I) * (J-J_g)/(J_g J) * omega_BS.
    """
    I_g, J_g = spec.group_sizes(group)
    om = omega(M)
    fb = (spec.I - I_g) / (I_g * spec.I)
    fs = (spec.J - J_g) / (J_g * spec.J)
    return fb * om["B"] + fs * om["S"] + fb * fs * om["BS"]


def exact_group_covariance(
    M1: np.ndarray, M2: np.ndarray, spec: DesignSpec, group1: str, group2: str
) -> float:
    """Exact randomization covariance between two group means.

    The sign of each term flips depending on whether the two groups share
    the same buyers (rows) and/or the same sellers (columns).
    """
    if group1 == group2:
        raise ValueError("use exact_group_variance for a single group")
    I1, J1 = spec.group_sizes(group1)
    I2, J2 = spec.group_sizes(group2)
    eta_b = 1.0 if _SAME_ROWS[group1] == _SAME_ROWS[group2] else -1.0
    eta_s = 1.0 if _SAME_COLS[group1] == _SAME_COLS[group2] else -1.0
    om1, om2 = omega(M1), omega(M2)
    x = xi(M1, M2)
    term_b = eta_b * spec.I_C * spec.I_T / (I1 * I2) / (2 * spec.I) * (om1["B"] + om2["B"] - x["B"])
    term_s = eta_s * spec.J_C * spec.J_T / (J1 * J2) / (2 * spec.J) * (om1["S"] + om2["S"] - x["S"])
    term_bs = (
        eta_b
        * eta_s
        * spec.I_C
        * spec.I_T
        * spec.J_C
        * spec.J_T
        / (I1 * J1 * I2 * J2)
        / (2 * spec.I * spec.J)
        * (om1["BS"] + om2["BS"] - x["BS"])
    )
    return term_b + term_s + term_bs


def _residualized(potentials, X, beta=None, beta_by_group=None):
    if beta is None and beta_by_group is None:
        return {g: np.asarray(potentials[g], dtype=float) for g in GROUPS}
    out = {}
    X = np.asarray(X, dtype=float)
    for g in GROUPS:
        b = beta_by_group[g] if beta_by_group is not None else beta
        out[g] = np.asarray(potentials[g], dtype=float) - X @ np.asarray(b, dtype=float)
    return out


def exact_estimator_variance(
    potentials: dict,
    spec: DesignSpec,
    c,
    beta=None,
    beta_by_group=None,
    X=None,
    check_specialized: bool = True,
) -> VarianceReport:
    """Exact variance of the (optionally adjusted) contrast estimator.

    The generic assembly sums c_g^2 * Var_g plus cross covariance terms.
    For the four preset contrasts the independently coded closed forms are
    also evaluated and must agree to 1e-10 relative; a mismatch raises.
    """
    c = np.asarray(c, dtype=float)
    if (beta is not None or beta_by_group is not None) and X is None:
        raise ValueError("covariates are required to residualize potentials")
    mats = _residualized(potentials, X, beta, beta_by_group)

    om = {g: omega(mats[g]) for g in GROUPS}
    xis = {pair: xi(mats[pair[0]], mats[pair[1]]) for pair in PAIRS}

    cvec = dict(zip(GROUPS, c))
    group_vars = {g: exact_group_variance(mats[g], spec, g) for g in GROUPS}
    pair_covs = {
        (a, b): exact_group_covariance(mats[a], mats[b], spec, a, b) for a, b in PAIRS
    }
    total = sum(cvec[g] ** 2 * group_vars[g] for g in GROUPS)
    total += sum(2.0 * cvec[a] * cvec[b] * pair_covs[(a, b)] for a, b in PAIRS)

    components = _component_shares(spec, cvec, om, xis)

    if check_specialized:
        special = _specialized_variance(spec, c, om, xis)
        if special is not None:
            scale = max(abs(total), abs(special), 1e-300)
            if abs(total - special) > 1e-10 * max(scale, 1.0):
                raise AssertionError(
                    f"generic assembly {total!r} disagrees with the closed form {special!r}"
                )

    return VarianceReport(
        c=cvec,
        group_variances=group_vars,
        pair_covariances=pair_covs,
        total_variance=total,
        components=components,
    )


def _component_shares(spec, cvec, om, xis):
    """Split the total variance into B / S / BS moment contributions."""
    comps = {"B": 0.0, "S": 0.0, "BS": 0.0}
    for g in GROUPS:
        I_g, J_g = spec.group_sizes(g)
        fb = (spec.I - I_g) / (I_g * spec.I)
        fs = (spec.J - J_g) / (J_g * spec.J)
        comps["B"] += cvec[g] ** 2 * fb * om[g]["B"]
        comps["S"] += cvec[g] ** 2 * fs * om[g]["S"]
        comps["BS"] += cvec[g] ** 2 * fb * fs * om[g]["BS"]
    for a, b in PAIRS:
        I1, J1 = spec.group_sizes(a)
        I2, J2 = spec.group_sizes(b)
        eta_b = 1.0 if _SAME_ROWS[a] == _SAME_ROWS[b] else -1.0
        eta_s = 1.0 if _SAME_COLS[a] == _SAME_COLS[b] else -1.0
        w = 2.0 * cvec[a] * cvec[b]
        comps["B"] += (
            w * eta_b * spec.I_C * spec.I_T / (I1 * I2) / (2 * spec.I)
            * (om[a]["B"] + om[b]["B"] - xis[(a, b)]["B"])
        )
        comps["S"] += (
            w * eta_s * spec.J_C * spec.J_T / (J1 * J2) / (2 * spec.J)
            * (om[a]["S"] + om[b]["S"] - xis[(a, b)]["S"])
        )
        comps["BS"] += (
            w * eta_b * eta_s
            * spec.I_C * spec.I_T * spec.J_C * spec.J_T
            / (I1 * J1 * I2 * J2) / (2 * spec.I * spec.J)
            * (om[a]["BS"] + om[b]["BS"] - xis[(a, b)]["BS"])
        )
    return comps


def _specialized_variance(spec, c, om, xis):
    """Closed-form variance for the four preset contrasts, else None."""
    I, J = spec.I, spec.J
    I_T, I_C, J_T, J_C = spec.I_T, spec.I_C, spec.J_T, spec.J_C
    c = tuple(c)
    if c == (1.0, -1.0, -1.0, 1.0):
        # Direct effect: all first-order omega terms cancel.
        v = (
            om["tr"]["BS"] / (I_T * J_T)
            + om["ib"]["BS"] / (I_T * J_C)
            + om["is"]["BS"] / (I_C * J_T)
            + om["cc"]["BS"] / (I_C * J_C)
        )
        v += (
            (I_C / (I_T * I)) * xis[("tr", "ib")]["B"]
            - xis[("tr", "is")]["B"] / I
            + xis[("tr", "cc")]["B"] / I
            + xis[("ib", "is")]["B"] / I
            - xis[("ib", "cc")]["B"] / I
            + (I_T / I_C) * xis[("is", "cc")]["B"] / I
        )
        v += (
            -xis[("tr", "ib")]["S"] / J
            + (J_C / J_T) * xis[("tr", "is")]["S"] / J
            + xis[("tr", "cc")]["S"] / J
            + xis[("ib", "is")]["S"] / J
            + (J_T / J_C) * xis[("ib", "cc")]["S"] / J
            - xis[("is", "cc")]["S"] / J
        )
        v += (
            -(I_C / I_T) * xis[("tr", "ib")]["BS"] / (I * J)
            - (J_C / J_T) * xis[("tr", "is")]["BS"] / (I * J)
            - xis[("tr", "cc")]["BS"] / (I * J)
            - xis[("ib", "is")]["BS"] / (I * J)
            - (J_T / J_C) * xis[("ib", "cc")]["BS"] / (I * J)
            - (I_T / I_C) * xis[("is", "cc")]["BS"] / (I * J)
        )
        return v
    if c == (1.0, 0.0, 0.0, -1.0):
        return (
            om["tr"]["B"] / I_T
            + om["tr"]["S"] / J_T
            + (I_C * J_C / (I_T * J_T) - 1.0) * om["tr"]["BS"] / (I * J)
            + om["cc"]["B"] / I_C
            + om["cc"]["S"] / J_C
            + (I_T * J_T / (I_C * J_C) - 1.0) * om["cc"]["BS"] / (I * J)
            - xis[("tr", "cc")]["B"] / I
            - xis[("tr", "cc")]["S"] / J
            + xis[("tr", "cc")]["BS"] / (I * J)
        )
    if c == (0.0, 1.0, 0.0, -1.0):
        return (
            om["ib"]["B"] / I_T
            + om["cc"]["B"] / I_C
            + J_T * om["ib"]["BS"] / (I_T * J_C * J)
            + J_T * om["cc"]["BS"] / (I_C * J_C * J)
            - xis[("ib", "cc")]["B"] / I
            + J_T * xis[("ib", "cc")]["S"] / (J_C * J)
            - (J_T / J_C) * xis[("ib", "cc")]["BS"] / (I * J)
        )
    if c == (0.0, 0.0, 1.0, -1.0):
        return (
            om["is"]["S"] / J_T
            + om["cc"]["S"] / J_C
            + I_T * om["is"]["BS"] / (J_T * I_C * I)
            + I_T * om["cc"]["BS"] / (J_C * I_C * I)
            + (I_T / I_C) * xis[("is", "cc")]["B"] / I
            - xis[("is", "cc")]["S"] / J
            - (I_T / I_C) * xis[("is", "cc")]["BS"] / (I * J)
        )
    return None


# ---------------------------------------------------------------------------
# observable conservative estimator
# ---------------------------------------------------------------------------


def sigma_hat_gamma(M_obs: np.ndarray, part, group: str) -> ConservativeComponents:
    """Exactly unbiased estimator of Var(group mean) from the observed block.

    With n of I rows and m of J columns sampled uniformly, the within-block
    centered sums have exact expectations

        E[sigma_B]  = ((n-1)/n) * (omega_B + f_S * omega_BS)
        E[sigma_S]  = ((m-1)/m) * (omega_S + f_B * omega_BS)
        E[sigma_BS] = ((n-1)(m-1)/(nm)) * omega_BS

    where f_B = (I-n)/(nI), f_S = (J-m)/(mJ).  Inverting these and plugging
    the unbiased moment estimates into Var = f_B*omega_B + f_S*omega_S +
    f_B*f_S*omega_BS gives an estimator whose expectation over the
    randomization is the exact variance, verified against enumeration.
    """
    bi, sj = part.block(group)
    B = np.asarray(M_obs, dtype=float)[np.ix_(bi, sj)]
    n, m = B.shape
    if n < 2 or m < 2:
        raise ValueError("group block is degenerate (needs >= 2 rows and columns)")
    I = len(part.buyers["tr"]) + len(part.buyers["cc"])
    J = len(part.sellers["tr"]) + len(part.sellers["ib"])

    rmeans = B.mean(axis=1)
    cmeans = B.mean(axis=0)
    g = B.mean()
    sigma_B = float(np.sum((rmeans - g) ** 2) / n)
    sigma_S = float(np.sum((cmeans - g) ** 2) / m)
    dcr = double_decenter(B)
    sigma_BS = float(np.sum(np.sum(dcr**2, axis=0)) / (n * m))

    alpha_B = 0.5 * (I - n) / (I * n)
    alpha_S = 0.5 * (J - m) / (J * m)
    f_B, f_S = 2.0 * alpha_B, 2.0 * alpha_S

    omega_BS_hat = sigma_BS * n * m / ((n - 1) * (m - 1))
    omega_B_hat = sigma_B * n / (n - 1) - f_S * omega_BS_hat
    omega_S_hat = sigma_S * m / (m - 1) - f_B * omega_BS_hat
    sigma = f_B * omega_B_hat + f_S * omega_S_hat + f_B * f_S * omega_BS_hat

    return ConservativeComponents(
        group=group,
        sigma_B=sigma_B,
        sigma_S=sigma_S,
        sigma_BS=sigma_BS,
        alpha_B=alpha_B,
        alpha_S=alpha_S,
        sigma=sigma,
    )


def conservative_variance(residual_obs: np.ndarray, part, c) -> float:
    """Observable upper-bound estimator for the contrast variance.

    V_hat = (sum_g |c_g| sqrt(max(Sigma_hat_g, 0)))^2, with the sum over
    groups that actually enter the contrast.
    """
    c = np.asarray(c, dtype=float)
    acc = 0.0
    for weight, group in zip(c, GROUPS):
        if weight == 0.0:
            continue
        comp = sigma_hat_gamma(residual_obs, part, group)
        acc += abs(weight) * np.sqrt(comp.sigma_plus)
    return float(acc**2)


def confidence_interval(point: float, V_hat: float, level: float) -> tuple[float, float]:
    """Symmetric interval point +/- z * sqrt(V_hat)."""
    if V_hat < 0:
        raise ValueError("variance bound must be nonnegative")
    half = z_quantile(level) * float(np.sqrt(V_hat))
    return point - half, point + half
