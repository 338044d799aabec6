"""Decentering machinery and finite-population moment quantities.

Population quantities are computed over the full I x J matrix with
denominators (I-1), (J-1) and (I-1)(J-1).  Their group-wise estimators
restrict to one exposure-group block, decenter *within* the block, and
divide by the block counts I_g, J_g and I_g * J_g.  Both conventions are
fixed exactly (no asymptotic interchange of 1/I and 1/(I-1)) so that all
oracle tests are bit-reproducible.

All double sums reduce column-major (down each column first, then across
columns) with numpy's pairwise summation, which keeps floating point
results independent of how callers parallelize over matrices.
"""

from __future__ import annotations

import numpy as np


def _sum2(M: np.ndarray) -> np.ndarray:
    """Column-major pairwise sum over the first two axes."""
    return np.sum(np.sum(M, axis=0), axis=0)


def row_means(M: np.ndarray) -> np.ndarray:
    return np.asarray(M, dtype=float).mean(axis=1)


def col_means(M: np.ndarray) -> np.ndarray:
    return np.asarray(M, dtype=float).mean(axis=0)


def grand_mean(M: np.ndarray) -> float:
    return float(np.asarray(M, dtype=float).mean())


def double_decenter(M: np.ndarray) -> np.ndarray:
    """Remove row means and column means, adding back the grand mean.

    The result has (numerically) zero row sums and column sums, and the
    operation is idempotent.
    """
    M = np.asarray(M, dtype=float)
    return M - M.mean(axis=1, keepdims=True) - M.mean(axis=0, keepdims=True) + M.mean()


def omega(M: np.ndarray) -> dict:
    """Finite-population variance components of a matrix.

    Returns ``{"B": ..., "S": ..., "BS": ...}`` where B is the variance of
    the decentered row means (denominator I-1), S the analogue for column
    means (J-1), and BS the mean square of the double-decentered entries
    (denominator (I-1)(J-1)).
    """
    M = np.asarray(M, dtype=float)
    I, J = M.shape
    rm = M.mean(axis=1) - M.mean()
    cm = M.mean(axis=0) - M.mean()
    dcr = double_decenter(M)
    return {
        "B": float(np.sum(rm**2) / (I - 1)),
        "S": float(np.sum(cm**2) / (J - 1)),
        "BS": float(_sum2(dcr**2) / ((I - 1) * (J - 1))),
    }


def xi(M1: np.ndarray, M2: np.ndarray) -> dict:
    """Variance components of the difference between two matrices.

    Same denominators as :func:`omega`, applied to the differences of the
    decentered row means, column means, and double-decentered entries.
    Zero when the two matrices differ by an additive constant.
    """
    M1 = np.asarray(M1, dtype=float)
    M2 = np.asarray(M2, dtype=float)
    if M1.shape != M2.shape:
        raise ValueError("matrices must share a shape")
    I, J = M1.shape
    rm = (M1.mean(axis=1) - M1.mean()) - (M2.mean(axis=1) - M2.mean())
    cm = (M1.mean(axis=0) - M1.mean()) - (M2.mean(axis=0) - M2.mean())
    dcr = double_decenter(M1) - double_decenter(M2)
    return {
        "B": float(np.sum(rm**2) / (I - 1)),
        "S": float(np.sum(cm**2) / (J - 1)),
        "BS": float(_sum2(dcr**2) / ((I - 1) * (J - 1))),
    }


def omega_group(Y_obs: np.ndarray, part, group: str) -> dict:
    """Group-block analogue of :func:`omega` with I_g-style denominators."""
    bi, sj = part.block(group)
    return _block_moments(Y_obs[np.ix_(bi, sj)])


def _block_moments(B: np.ndarray) -> dict:
    n, m = B.shape
    if n < 2 or m < 2:
        raise ValueError("group block is degenerate (needs >= 2 rows and columns)")
    rm = B.mean(axis=1) - B.mean()
    cm = B.mean(axis=0) - B.mean()
    dcr = double_decenter(B)
    return {
        "B": float(np.sum(rm**2) / n),
        "S": float(np.sum(cm**2) / m),
        "BS": float(_sum2(dcr**2) / (n * m)),
    }


# ---------------------------------------------------------------------------
# covariate inner products and gram matrices
# ---------------------------------------------------------------------------


def _decenter_tensor(X: np.ndarray):
    """Row-mean, column-mean (both grand-centred) and double-decentered
    views of an I x J x d covariate tensor."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 3:
        raise ValueError("covariates must be an I x J x d array")
    g = X.mean(axis=(0, 1))
    rm = X.mean(axis=1) - g  # (I, d)
    cm = X.mean(axis=0) - g  # (J, d)
    dcr = X - X.mean(axis=1, keepdims=True) - X.mean(axis=0, keepdims=True) + g
    return rm, cm, dcr


def population_u(X: np.ndarray, Y: np.ndarray) -> dict:
    """Inner products of decentered covariates with decentered outcomes.

    Returns d-vectors ``u^B``, ``u^S`` and ``u^BS`` with population
    denominators (I-1), (J-1), (I-1)(J-1).
    """
    Y = np.asarray(Y, dtype=float)
    I, J = Y.shape
    Xrm, Xcm, Xdcr = _decenter_tensor(X)
    yrm = Y.mean(axis=1) - Y.mean()
    ycm = Y.mean(axis=0) - Y.mean()
    ydcr = double_decenter(Y)
    return {
        "B": np.sum(Xrm * yrm[:, None], axis=0) / (I - 1),
        "S": np.sum(Xcm * ycm[:, None], axis=0) / (J - 1),
        "BS": _sum2(Xdcr * ydcr[:, :, None]) / ((I - 1) * (J - 1)),
    }


def population_Z(X: np.ndarray) -> dict:
    """Gram matrices of the decentered covariates (symmetric PSD)."""
    I, J, _ = np.asarray(X).shape
    Xrm, Xcm, Xdcr = _decenter_tensor(X)
    return {
        "B": np.sum(Xrm[:, :, None] * Xrm[:, None, :], axis=0) / (I - 1),
        "S": np.sum(Xcm[:, :, None] * Xcm[:, None, :], axis=0) / (J - 1),
        "BS": _sum2(Xdcr[:, :, :, None] * Xdcr[:, :, None, :]) / ((I - 1) * (J - 1)),
    }


def group_u_hat(X: np.ndarray, Y_obs: np.ndarray, part, group: str) -> dict:
    """Group-wise estimator of the inner product terms.

    Restricts to the group block, decenters with empirical within-group
    means, and divides by the block counts (I_g, J_g, I_g*J_g).
    """
    bi, sj = part.block(group)
    Xb = np.asarray(X, dtype=float)[np.ix_(bi, sj)]
    Yb = np.asarray(Y_obs, dtype=float)[np.ix_(bi, sj)]
    n, m = Yb.shape
    if n < 2 or m < 2:
        raise ValueError("group block is degenerate (needs >= 2 rows and columns)")
    g = Xb.mean(axis=(0, 1))
    Xrm = Xb.mean(axis=1) - g
    Xcm = Xb.mean(axis=0) - g
    Xdcr = Xb - Xb.mean(axis=1, keepdims=True) - Xb.mean(axis=0, keepdims=True) + g
    yrm = Yb.mean(axis=1) - Yb.mean()
    ycm = Yb.mean(axis=0) - Yb.mean()
    ydcr = double_decenter(Yb)
    return {
        "B": np.sum(Xrm * yrm[:, None], axis=0) / n,
        "S": np.sum(Xcm * ycm[:, None], axis=0) / m,
        "BS": _sum2(Xdcr * ydcr[:, :, None]) / (n * m),
    }


def group_Z_hat(X: np.ndarray, part, group: str) -> dict:
    """Group-wise estimator of the gram matrix terms (see group_u_hat)."""
    bi, sj = part.block(group)
    Xb = np.asarray(X, dtype=float)[np.ix_(bi, sj)]
    n, m, _ = Xb.shape
    if n < 2 or m < 2:
        raise ValueError("group block is degenerate (needs >= 2 rows and columns)")
    g = Xb.mean(axis=(0, 1))
    Xrm = Xb.mean(axis=1) - g
    Xcm = Xb.mean(axis=0) - g
    Xdcr = Xb - Xb.mean(axis=1, keepdims=True) - Xb.mean(axis=0, keepdims=True) + g
    return {
        "B": np.sum(Xrm[:, :, None] * Xrm[:, None, :], axis=0) / n,
        "S": np.sum(Xcm[:, :, None] * Xcm[:, None, :], axis=0) / m,
        "BS": _sum2(Xdcr[:, :, :, None] * Xdcr[:, :, None, :]) / (n * m),
    }
