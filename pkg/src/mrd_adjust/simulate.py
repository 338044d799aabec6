"""Data-generating processes and the Monte Carlo harness.

Potential outcomes are drawn once and held fixed; the harness randomizes
only over treatment assignments, so the reported spread is pure design
variance.  The replication seed is ``seed ^ r``, which makes any subset of
replications reproducible in isolation, and aggregation is an ordered
reduction over the replication index so the report is identical for one
worker or many.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import (
    CapExceeded,
    DesignSpec,
    GROUPS,
    enumerate_assignments,
    observed_matrix,
    partition,
    sample_assignment,
)
from .estimators import EffectSpec, estimate, tau_imputation, tau_unadjusted
from .moments import grand_mean
from .variance import exact_estimator_variance

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# data-generating processes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalDGP:
    mu: tuple = (5.0, 2.0, 2.0, 1.0)
    sd: float = 1.0
    covariate_noise_sd: float = 1.0

    def __post_init__(self):
        if len(self.mu) != 4:
            raise ValueError("mu must have one entry per treatment group")
        if self.sd < 0 or self.covariate_noise_sd < 0:
            raise ValueError("scales must be nonnegative")


@dataclass(frozen=True)
class MarketplaceDGP:
    I: int
    J: int
    eta: float = 5.0
    m_rate: float = 1.0
    r_max: float = 0.2
    obs_noise_sd: float = 0.1

    def __post_init__(self):
        if self.m_rate <= 0 or self.r_max <= 0 or self.obs_noise_sd < 0:
            raise ValueError("scales must be positive")


@dataclass(frozen=True)
class SparseSubgraphDGP:
    mu: float
    variant: str = "uniform"

    def __post_init__(self):
        if self.variant not in ("uniform", "heavy_tailed"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "uniform" and not 0 < 4 * self.mu <= 1:
            raise ValueError("uniform variant needs 4*mu in (0, 1]")
        if self.variant == "heavy_tailed" and not 0 < math.sqrt(2 * self.mu) <= 1:
            raise ValueError("heavy-tailed variant needs sqrt(2*mu) in (0, 1]")


@dataclass(frozen=True)
class RankOneDGP:
    """Diagnostic-only design: the outcome matrix is an outer product x x'."""

    x: tuple

    def matrix(self):
        x = np.asarray(self.x, dtype=float)
        return np.outer(x, x)


def gen_normal(dgp: NormalDGP, I, J, seed):
    """Independent normal potentials plus four noisy-copy covariates.

    Covariate coordinate k is the potential outcome of group k plus
    independent noise, so adjustment has signal to find in every group.
    """
    rng = np.random.default_rng(np.random.Philox(key=seed))
    potentials = {
        g: rng.normal(m, dgp.sd, size=(I, J)) for g, m in zip(GROUPS, dgp.mu)
    }
    X = np.empty((I, J, 4))
    for k, g in enumerate(GROUPS):
        X[:, :, k] = potentials[g] + rng.normal(
            0.0, dgp.covariate_noise_sd, size=(I, J)
        )
    return potentials, X


@dataclass(frozen=True)
class MarketplaceTables:
    """Fixed primitives (match values and per-unit rates) of one marketplace.

    Revenue is (m_ij + eta * w_ij) * (q_i + q_j), where a transaction is
    subsidized (w_ij = 1) only when both sides are treated, and each unit's
    quality response depends on its own treatment and the opposite side's
    treated fraction — so outcomes satisfy local interference exactly and
    collapse to four potential matrices once (I_T, J_T) is fixed.
    """

    eta: float
    m: np.ndarray
    r_buyer: np.ndarray
    r_seller: np.ndarray

    def potentials(self, spec: DesignSpec):
        eta = self.eta
        mrow = self.m.mean(axis=1)
        mcol = self.m.mean(axis=0)
        fb = spec.I_T / spec.I
        fs = spec.J_T / spec.J
        out = {}
        for g, (wb, ws) in zip(GROUPS, [(1, 1), (1, 0), (0, 1), (0, 0)]):
            q_b = self.r_buyer * (mrow + eta * wb * fs)
            q_s = self.r_seller * (mcol + eta * ws * fb)
            w = float(wb * ws)
            out[g] = (self.m + eta * w) * (q_b[:, None] + q_s[None, :])
        return out


def gen_marketplace(dgp: MarketplaceDGP, seed):
    """Marketplace tables plus the two noisy-compatibility covariates."""
    rng = np.random.default_rng(np.random.Philox(key=seed))
    m = rng.exponential(1.0 / dgp.m_rate, size=(dgp.I, dgp.J))
    r_buyer = rng.uniform(0.0, dgp.r_max, size=dgp.I)
    r_seller = rng.uniform(0.0, dgp.r_max, size=dgp.J)
    m_hat = m * (1.0 + rng.normal(0.0, dgp.obs_noise_sd, size=m.shape))
    X = np.empty((dgp.I, dgp.J, 2))
    X[:, :, 0] = m_hat * r_buyer[:, None]
    X[:, :, 1] = m_hat * r_seller[None, :]
    return MarketplaceTables(dgp.eta, m, r_buyer, r_seller), X


def gen_sparse(dgp: SparseSubgraphDGP, I, J, seed):
    """Bernoulli product outcomes y = X_i * Y_j * Z_ij, one draw per group."""
    rng = np.random.default_rng(np.random.Philox(key=seed))
    if dgp.variant == "uniform":
        p_unit, p_edge = 0.5, 4.0 * dgp.mu
    else:
        p_unit, p_edge = math.sqrt(2.0 * dgp.mu), 0.5
    potentials = {}
    for g in GROUPS:
        xb = rng.binomial(1, p_unit, size=I)
        ys = rng.binomial(1, p_unit, size=J)
        z = rng.binomial(1, p_edge, size=(I, J))
        potentials[g] = (xb[:, None] * ys[None, :] * z).astype(float)
    return potentials


# ---------------------------------------------------------------------------
# Monte Carlo harness
# ---------------------------------------------------------------------------


@dataclass
class MCReport:
    spec: DesignSpec
    replications: int
    seed: int
    level: float
    rows: list
    failures: list = field(default_factory=list)

    def to_json(self):
        payload = {
            "schema_version": SCHEMA_VERSION,
            "design": {
                "I": self.spec.I,
                "J": self.spec.J,
                "I_T": self.spec.I_T,
                "J_T": self.spec.J_T,
            },
            "replications": self.replications,
            "seed": self.seed,
            "level": self.level,
            "rows": self.rows,
            "failures": self.failures,
        }
        return json.dumps(payload, indent=2, sort_keys=False)

    CSV_FIELDS = (
        "effect",
        "method",
        "replications",
        "n_success",
        "mean",
        "sd",
        "bias",
        "true_tau",
        "exact_variance",
        "mean_ci_length",
        "coverage",
        "mean_v_hat",
    )

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_FIELDS)
        for row in self.rows:
            writer.writerow(
                "" if row[k] is None else repr(row[k]) if isinstance(row[k], float) else row[k]
                for k in self.CSV_FIELDS
            )
        return buf.getvalue()


def _resolve_workers(workers):
    env = os.environ.get("MRD_ADJUST_THREADS")
    cap = int(env) if env else None
    if cap is not None and cap < 1:
        raise ValueError("MRD_ADJUST_THREADS must be a positive integer")
    if workers is None:
        workers = cap or 1
    elif cap is not None:
        workers = min(workers, cap)
    return max(1, workers)


def _one_replication(potentials, X, spec, effects, methods, level, rep_seed):
    assignment = sample_assignment(spec, rep_seed)
    part = partition(spec, assignment)
    Y = observed_matrix(potentials, assignment)
    cells = {}
    errors = []
    for eff in effects:
        for method in methods:
            try:
                est = estimate(eff, Y, X, part, spec, method=method, level=level)
                cells[(eff.name, method)] = (
                    est.point,
                    est.ci_low,
                    est.ci_high,
                    est.variance_bound,
                )
            except Exception as exc:  # recorded, not silently dropped
                errors.append((eff.name, method, f"{type(exc).__name__}: {exc}"))
    return cells, errors


def monte_carlo(
    potentials,
    spec: DesignSpec,
    effects,
    methods,
    R,
    seed,
    level=0.95,
    X=None,
    workers=None,
    draw=None,
    redraw_potentials=False,
) -> MCReport:
    """Design distribution of every (effect, method) estimate.

    Potentials are held fixed across replications unless ``draw`` is given
    with ``redraw_potentials=True``, in which case fresh potentials (and
    covariates) are drawn per replication from ``draw(seed ^ r)``.
    """
    if R < 1:
        raise ValueError("need at least one replication")
    effects = [EffectSpec.preset(e) if isinstance(e, str) else e for e in effects]
    methods = list(methods)
    if draw is not None and not redraw_potentials:
        potentials, X = draw(seed)
    if potentials is None and draw is None:
        raise ValueError("either potentials or a draw function is required")
    # reference tables for the reported true effect; under redrawing the
    # per-replication truth varies and the r=0 tables serve as the anchor
    ref_potentials = potentials if potentials is not None else draw(seed)[0]

    def task(r):
        rep_seed = seed ^ r
        if redraw_potentials:
            pots, covs = draw(rep_seed)
        else:
            pots, covs = potentials, X
        return _one_replication(pots, covs, spec, effects, methods, level, rep_seed)

    n_workers = _resolve_workers(workers)
    if n_workers == 1:
        results = [task(r) for r in range(R)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(task, range(R)))

    true_tau = {
        eff.name: float(
            sum(w * grand_mean(ref_potentials[g]) for w, g in zip(eff.c, GROUPS))
        )
        for eff in effects
    }
    rows = []
    failures = []
    for r, (_, errors) in enumerate(results):
        failures.extend(
            {"replication": r, "effect": e, "method": m, "error": msg}
            for e, m, msg in errors
        )
    for eff in effects:
        exact_var = None
        if not redraw_potentials:
            exact_var = float(
                exact_estimator_variance(ref_potentials, spec, eff.c).total_variance
            )
        for method in methods:
            key = (eff.name, method)
            pts, lows, highs, vhats = [], [], [], []
            for cells, _ in results:
                if key in cells:
                    p, lo, hi, v = cells[key]
                    pts.append(p)
                    lows.append(lo)
                    highs.append(hi)
                    vhats.append(v)
            n = len(pts)
            tau = true_tau[eff.name]
            if n == 0:
                rows.append(
                    {
                        "effect": eff.name,
                        "method": method,
                        "replications": R,
                        "n_success": 0,
                        "mean": None,
                        "sd": None,
                        "bias": None,
                        "true_tau": tau,
                        "exact_variance": exact_var if method == "unadjusted" else None,
                        "mean_ci_length": None,
                        "coverage": None,
                        "mean_v_hat": None,
                    }
                )
                continue
            pts = np.asarray(pts)
            mean = float(pts.mean())
            covered = [lo <= tau <= hi for lo, hi in zip(lows, highs)]
            rows.append(
                {
                    "effect": eff.name,
                    "method": method,
                    "replications": R,
                    "n_success": n,
                    "mean": mean,
                    "sd": float(pts.std(ddof=1)) if n > 1 else None,
                    "bias": mean - tau,
                    "true_tau": tau,
                    "exact_variance": exact_var if method == "unadjusted" else None,
                    "mean_ci_length": float(np.mean(np.asarray(highs) - np.asarray(lows))),
                    "coverage": float(np.mean(covered)),
                    "mean_v_hat": float(np.mean(vhats)),
                }
            )
    return MCReport(
        spec=spec,
        replications=R,
        seed=seed,
        level=level,
        rows=rows,
        failures=failures,
    )


def brute_force_distribution(potentials, spec: DesignSpec, c, beta=None, X=None, cap=10000):
    """Exact design distribution of the contrast estimator by enumeration."""
    c = np.asarray(c, dtype=float)
    values = []
    for assignment in enumerate_assignments(spec, cap=cap):
        part = partition(spec, assignment)
        Y = observed_matrix(potentials, assignment)
        if beta is None:
            values.append(tau_unadjusted(Y, part, c))
        else:
            values.append(tau_imputation(Y, X, part, c, beta))
    values = np.asarray(values)
    return {
        "mean": float(values.mean()),
        "variance": float(values.var(ddof=0)),
        "estimates": values,
    }
