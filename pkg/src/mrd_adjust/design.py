"""Design specification, assignment sampling and enumeration for MRDs.

A simple multiple randomization design over ``I`` buyers and ``J`` sellers
treats exactly ``I_T`` buyers and ``J_T`` sellers, each side drawn
uniformly without replacement and independently of the other side.  The
two binary vectors partition the buyer x seller grid into four groups:

========  ===========  ============
label     buyer state  seller state
========  ===========  ============
``tr``    treated      treated
``ib``    treated      control
``is``    control      treated
``cc``    control      control
========  ===========  ============

Indices are 0-based everywhere inside the library; reports and CSV files
use 1-based indices.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

#: Group labels in canonical order (also the order of contrast vectors).
GROUPS = ("tr", "ib", "is", "cc")


class CapExceeded(Exception):
    """Raised when exhaustive enumeration would exceed the requested cap."""

    def __init__(self, count: int, cap: int):
        super().__init__(f"design has {count} assignments, exceeding cap {cap}")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class DesignSpec:
    """Marketplace dimensions and treated counts.

    Every group must contain at least two buyers and two sellers, because
    the variance estimators divide by within-group counts minus one.
    """

    I: int
    J: int
    I_T: int
    J_T: int

    def __post_init__(self):
        if not (2 <= self.I_T <= self.I - 2):
            raise ValueError(f"need 2 <= I_T <= I-2, got I_T={self.I_T}, I={self.I}")
        if not (2 <= self.J_T <= self.J - 2):
            raise ValueError(f"need 2 <= J_T <= J-2, got J_T={self.J_T}, J={self.J}")

    @property
    def I_C(self) -> int:
        return self.I - self.I_T

    @property
    def J_C(self) -> int:
        return self.J - self.J_T

    def group_sizes(self, group: str) -> tuple[int, int]:
        """Number of buyers and sellers in ``group`` (forced by the design)."""
        n_buyers = self.I_T if group in ("tr", "ib") else self.I_C
        n_sellers = self.J_T if group in ("tr", "is") else self.J_C
        return n_buyers, n_sellers

    def n_assignments(self) -> int:
        return comb(self.I, self.I_T) * comb(self.J, self.J_T)


@dataclass(frozen=True)
class Assignment:
    """A realized randomization: binary treatment vectors for both sides."""

    w_buyer: np.ndarray
    w_seller: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w_buyer", np.asarray(self.w_buyer, dtype=np.int8))
        object.__setattr__(self, "w_seller", np.asarray(self.w_seller, dtype=np.int8))

    def validate(self, spec: DesignSpec) -> None:
        if self.w_buyer.shape != (spec.I,) or self.w_seller.shape != (spec.J,):
            raise ValueError("assignment dimensions do not match design")
        if int(self.w_buyer.sum()) != spec.I_T:
            raise ValueError("treated buyer count does not match design")
        if int(self.w_seller.sum()) != spec.J_T:
            raise ValueError("treated seller count does not match design")

    def to_csv(self, path) -> None:
        """Write ``side,index,treated`` rows (1-based indices)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["side", "index", "treated"])
            for i, w in enumerate(self.w_buyer):
                writer.writerow(["buyer", i + 1, int(w)])
            for j, w in enumerate(self.w_seller):
                writer.writerow(["seller", j + 1, int(w)])

    @classmethod
    def from_csv(cls, path) -> "Assignment":
        buyers: dict[int, int] = {}
        sellers: dict[int, int] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                idx = int(row["index"]) - 1
                treated = int(row["treated"])
                if treated not in (0, 1):
                    raise ValueError(f"treated must be 0 or 1, got {treated}")
                if row["side"] == "buyer":
                    buyers[idx] = treated
                elif row["side"] == "seller":
                    sellers[idx] = treated
                else:
                    raise ValueError(f"unknown side {row['side']!r}")
        w_buyer = np.array([buyers[i] for i in range(len(buyers))], dtype=np.int8)
        w_seller = np.array([sellers[j] for j in range(len(sellers))], dtype=np.int8)
        return cls(w_buyer, w_seller)


@dataclass(frozen=True)
class GroupPartition:
    """Buyer and seller index sets for each of the four groups (0-based)."""

    buyers: dict = field(repr=False)
    sellers: dict = field(repr=False)

    def block(self, group: str) -> tuple[np.ndarray, np.ndarray]:
        return self.buyers[group], self.sellers[group]


def _draw_without_replacement(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Draw k of n indices uniformly via a partial Fisher-Yates shuffle.

    Only the first k swap steps of the shuffle are performed, so the draw
    costs O(n + k) and its law is exactly uniform over k-subsets.  The
    Philox counter-based generator behind ``rng`` makes the result a pure
    function of the seed on every platform.
    """
    pool = np.arange(n)
    for t in range(k):
        u = t + int(rng.integers(0, n - t))
        pool[t], pool[u] = pool[u], pool[t]
    chosen = pool[:k]
    chosen.sort()
    return chosen


def sample_assignment(spec: DesignSpec, seed: int) -> Assignment:
    """Draw one assignment uniformly at random, deterministically in ``seed``.

    Buyer and seller draws are independent; both come from a single
    Philox4x64 stream keyed by ``seed`` (buyers consumed first).
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    treated_buyers = _draw_without_replacement(rng, spec.I, spec.I_T)
    treated_sellers = _draw_without_replacement(rng, spec.J, spec.J_T)
    w_buyer = np.zeros(spec.I, dtype=np.int8)
    w_buyer[treated_buyers] = 1
    w_seller = np.zeros(spec.J, dtype=np.int8)
    w_seller[treated_sellers] = 1
    return Assignment(w_buyer, w_seller)


def enumerate_assignments(spec: DesignSpec, cap: int = 10_000):
    """Yield every assignment exactly once, in lexicographic order.

    The order is lexicographic in (treated buyer subset, treated seller
    subset).  Raises :class:`CapExceeded` up front if the total count
    exceeds ``cap``.
    """
    count = spec.n_assignments()
    if count > cap:
        raise CapExceeded(count, cap)
    for buyers in itertools.combinations(range(spec.I), spec.I_T):
        w_buyer = np.zeros(spec.I, dtype=np.int8)
        w_buyer[list(buyers)] = 1
        for sellers in itertools.combinations(range(spec.J), spec.J_T):
            w_seller = np.zeros(spec.J, dtype=np.int8)
            w_seller[list(sellers)] = 1
            yield Assignment(w_buyer.copy(), w_seller.copy())


def partition(spec: DesignSpec, assignment: Assignment) -> GroupPartition:
    """Split buyer and seller indices into the four exposure groups."""
    assignment.validate(spec)
    treated_b = np.flatnonzero(assignment.w_buyer == 1)
    control_b = np.flatnonzero(assignment.w_buyer == 0)
    treated_s = np.flatnonzero(assignment.w_seller == 1)
    control_s = np.flatnonzero(assignment.w_seller == 0)
    buyers = {"tr": treated_b, "ib": treated_b, "is": control_b, "cc": control_b}
    sellers = {"tr": treated_s, "ib": control_s, "is": treated_s, "cc": control_s}
    return GroupPartition(buyers=buyers, sellers=sellers)


def assignment_matrix(spec: DesignSpec, assignment: Assignment) -> np.ndarray:
    """I x J matrix of 'T'/'C' labels; 'T' iff both sides are treated."""
    assignment.validate(spec)
    treated = np.outer(assignment.w_buyer, assignment.w_seller) == 1
    return np.where(treated, "T", "C")


def group_of(assignment: Assignment, i: int, j: int) -> str:
    """Group label of the (buyer i, seller j) cell."""
    b = assignment.w_buyer[i]
    s = assignment.w_seller[j]
    return {(1, 1): "tr", (1, 0): "ib", (0, 1): "is", (0, 0): "cc"}[(int(b), int(s))]


def observed_matrix(potentials: dict, assignment: Assignment) -> np.ndarray:
    """Compose the observed outcome matrix from four potential matrices."""
    wb = assignment.w_buyer.astype(bool)
    ws = assignment.w_seller.astype(bool)
    masks = {
        "tr": np.outer(wb, ws),
        "ib": np.outer(wb, ~ws),
        "is": np.outer(~wb, ws),
        "cc": np.outer(~wb, ~ws),
    }
    out = np.empty_like(potentials["cc"], dtype=float)
    for group in GROUPS:
        out[masks[group]] = potentials[group][masks[group]]
    return out
