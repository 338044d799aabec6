"""Long-format CSV ingestion and the study configuration schema."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .design import Assignment


class MissingPair(ValueError):
    """The buyer-by-seller grid is incomplete."""


class NonFinite(ValueError):
    """An outcome or covariate value is NaN or infinite."""


class InconsistentTreatment(ValueError):
    """The same unit appears with two different treatment values."""


def load_long_csv(path):
    """Read `buyer_id,seller_id,outcome,x1..xd[,treated_buyer,treated_seller]`.

    Rows and columns of the returned matrices are ordered lexicographically
    by id string, so the layout is deterministic regardless of file order.

    Returns (Y, X, assignment-or-None, (buyer_ids, seller_ids)).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = list(reader)

    if header[:3] != ["buyer_id", "seller_id", "outcome"]:
        raise ValueError(
            f"{path}: header must start with buyer_id,seller_id,outcome"
        )
    rest = header[3:]
    has_treatment = rest[-2:] == ["treated_buyer", "treated_seller"]
    x_names = rest[:-2] if has_treatment else rest
    expected = [f"x{k + 1}" for k in range(len(x_names))]
    if x_names != expected:
        raise ValueError(f"{path}: covariate columns must be x1..xd, got {x_names}")
    d = len(x_names)
    width = 3 + d + (2 if has_treatment else 0)

    records = {}
    treat_b: dict[str, int] = {}
    treat_s: dict[str, int] = {}
    for lineno, row in enumerate(rows, start=2):
        if len(row) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        bid, sid = row[0], row[1]
        if (bid, sid) in records:
            raise ValueError(f"{path}:{lineno}: duplicate pair ({bid}, {sid})")
        values = [float(v) for v in row[2 : 3 + d]]
        if not all(math.isfinite(v) for v in values):
            raise NonFinite(f"{path}:{lineno}: non-finite value for ({bid}, {sid})")
        records[(bid, sid)] = values
        if has_treatment:
            wb, ws = int(row[3 + d]), int(row[4 + d])
            if wb not in (0, 1) or ws not in (0, 1):
                raise ValueError(f"{path}:{lineno}: treatment flags must be 0 or 1")
            for store, unit, w in ((treat_b, bid, wb), (treat_s, sid, ws)):
                if store.setdefault(unit, w) != w:
                    raise InconsistentTreatment(
                        f"unit {unit!r} appears with treatment values "
                        f"{store[unit]} and {w}"
                    )

    if not records:
        raise ValueError(f"{path}: no data rows")
    buyer_ids = sorted({b for b, _ in records})
    seller_ids = sorted({s for _, s in records})
    for b in buyer_ids:
        for s in seller_ids:
            if (b, s) not in records:
                raise MissingPair(f"pair ({b}, {s}) is missing")

    I, J = len(buyer_ids), len(seller_ids)
    Y = np.empty((I, J))
    X = np.empty((I, J, d))
    for i, b in enumerate(buyer_ids):
        for j, s in enumerate(seller_ids):
            vals = records[(b, s)]
            Y[i, j] = vals[0]
            X[i, j, :] = vals[1:]
    assignment = None
    if has_treatment:
        assignment = Assignment(
            w_buyer=np.array([treat_b[b] for b in buyer_ids], dtype=np.int8),
            w_seller=np.array([treat_s[s] for s in seller_ids], dtype=np.int8),
        )
    return Y, X, assignment, (buyer_ids, seller_ids)


def write_long_csv(path, Y, X, assignment=None, buyer_ids=None, seller_ids=None):
    """Emit the long format accepted by :func:`load_long_csv`.

    Default ids are zero-padded (``b001``) so the lexicographic reload
    order matches the array order bit-exactly.
    """
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    I, J = Y.shape
    d = X.shape[2]
    if buyer_ids is None:
        buyer_ids = [f"b{i + 1:0{len(str(I))}d}" for i in range(I)]
    if seller_ids is None:
        seller_ids = [f"s{j + 1:0{len(str(J))}d}" for j in range(J)]
    header = ["buyer_id", "seller_id", "outcome"] + [f"x{k + 1}" for k in range(d)]
    if assignment is not None:
        header += ["treated_buyer", "treated_seller"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, b in enumerate(buyer_ids):
            for j, s in enumerate(seller_ids):
                row = [b, s, repr(float(Y[i, j]))] + [
                    repr(float(X[i, j, k])) for k in range(d)
                ]
                if assignment is not None:
                    row += [int(assignment.w_buyer[i]), int(assignment.w_seller[j])]
                writer.writerow(row)


_DESIGN_KEYS = {"I", "J", "I_T", "J_T", "treated_fraction_buyers", "treated_fraction_sellers"}
_DGP_KEYS = {
    "variant",
    "mu",
    "sd",
    "covariate_noise_sd",
    "I",
    "J",
    "eta",
    "m_rate",
    "r_max",
    "obs_noise_sd",
    "x",
}
_TOP_KEYS = {
    "design",
    "effects",
    "methods",
    "level",
    "seed",
    "replications",
    "dgp",
    "input",
    "output",
}
_EFFECTS = {"total", "direct", "buyer_spillover", "seller_spillover"}
_METHODS = {"unadjusted", "ancova", "opt_noninteracted", "opt_interacted"}


@dataclass
class StudyConfig:
    design: dict
    effects: list = field(default_factory=lambda: ["direct"])
    methods: list = field(default_factory=lambda: ["unadjusted"])
    level: float = 0.95
    seed: int = 0
    replications: int = 1000
    dgp: dict | None = None
    input: str | None = None
    output: str | None = None

    def __post_init__(self):
        unknown = set(self.design) - _DESIGN_KEYS
        if unknown:
            raise ValueError(f"unknown design keys: {sorted(unknown)}")
        if {"I", "J"} - set(self.design):
            raise ValueError("design requires I and J")
        by_count = {"I_T", "J_T"} <= set(self.design)
        by_frac = {
            "treated_fraction_buyers",
            "treated_fraction_sellers",
        } <= set(self.design)
        if not (by_count or by_frac):
            raise ValueError(
                "design requires I_T and J_T, or both treated fractions"
            )
        bad = [e for e in self.effects if e not in _EFFECTS]
        if bad:
            raise ValueError(f"unknown effects: {bad}")
        bad = [m for m in self.methods if m not in _METHODS]
        if bad:
            raise ValueError(f"unknown methods: {bad}")
        if not 0 < self.level < 1:
            raise ValueError("level must be in (0, 1)")
        if self.replications < 1:
            raise ValueError("replications must be positive")
        if self.dgp is not None:
            unknown = set(self.dgp) - _DGP_KEYS
            if unknown:
                raise ValueError(f"unknown dgp keys: {sorted(unknown)}")
            if "variant" not in self.dgp:
                raise ValueError("dgp requires a variant")

    @classmethod
    def from_json(cls, path) -> "StudyConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ValueError(f"{path}: unknown config keys: {sorted(unknown)}")
        if "design" not in raw:
            raise ValueError(f"{path}: config requires a design section")
        return cls(**raw)

    def resolve_spec(self):
        from .design import DesignSpec

        d = self.design
        I, J = int(d["I"]), int(d["J"])
        if "I_T" in d:
            I_T, J_T = int(d["I_T"]), int(d["J_T"])
        else:
            I_T = round(I * d["treated_fraction_buyers"])
            J_T = round(J * d["treated_fraction_sellers"])
        return DesignSpec(I=I, J=J, I_T=I_T, J_T=J_T)

    def to_dict(self):
        return {
            "design": dict(self.design),
            "effects": list(self.effects),
            "methods": list(self.methods),
            "level": self.level,
            "seed": self.seed,
            "replications": self.replications,
            "dgp": dict(self.dgp) if self.dgp is not None else None,
            "input": self.input,
            "output": self.output,
        }
