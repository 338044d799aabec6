"""Checking whether the normal approximation can be trusted.

The five computable bound terms all shrink for well-behaved outcomes as the
marketplace grows.  A rank-one outcome matrix is the classic failure case:
its operator-norm term refuses to vanish.  The variance-regime report shows
which moment scale drives the uncertainty.
"""

import numpy as np

from mrd_adjust import (
    DesignSpec,
    GROUPS,
    NormalDGP,
    clt_bound_terms,
    gen_normal,
    variance_regime,
)

rng = np.random.default_rng(0)
terms = ("term_sqrtI", "term_rowmax", "term_colmax", "term_entrymax", "term_opnorm")

print("iid normal outcomes: every bound term shrinks with size")
print(f"  {'I=J':>5}" + "".join(f" {t.removeprefix('term_'):>10}" for t in terms))
for n in (20, 40, 80):
    spec = DesignSpec(I=n, J=n, I_T=n // 2, J_T=n // 2)
    rep = clt_bound_terms(rng.normal(size=(n, n)), spec)
    print(f"  {n:>5}" + "".join(f" {getattr(rep, t):>10.4f}" for t in terms))

print("\nrank-one outcomes (x x' with centered x): op-norm term persists")
print(f"  {'I=J':>5} {'opnorm':>10} {'entrymax':>10}")
for n in (20, 40, 80):
    spec = DesignSpec(I=n, J=n, I_T=n // 2, J_T=n // 2)
    x = rng.normal(size=n)
    x -= x.mean()
    rep = clt_bound_terms(np.outer(x, x), spec)
    print(f"  {n:>5} {rep.term_opnorm:>10.4f} {rep.term_entrymax:>10.4f}")

print("\nvariance regimes for the total effect:")
spec = DesignSpec(I=40, J=40, I_T=20, J_T=20)
row_structured = rng.normal(size=(40, 1)) @ np.ones((1, 40))
cases = {
    "iid noise": {g: rng.normal(size=(40, 40)) for g in GROUPS},
    "row structured": {g: row_structured + 0.01 * rng.normal(size=(40, 40)) for g in GROUPS},
}
for label, pots in cases.items():
    out = variance_regime(pots, spec, [1, 0, 0, -1])
    shares = ", ".join(f"{k}={v:.2f}" for k, v in out["shares"].items())
    print(f"  {label:<15} -> {out['classification']} ({shares})")
