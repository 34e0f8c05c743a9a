"""Core data model: datasets, coalitions, QoI selectors, explanation vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

QOI_KINDS = (
    "score",
    "rank",
    "topk",
    "pairwise-score",
    "pairwise-rank",
    "pairwise-topk",
)

RECONSTRUCTION_TOL = 1e-9


def _as_row(values, d: int | None = None) -> np.ndarray:
    row = np.asarray(values, dtype=np.float64)
    if row.ndim != 1:
        raise ValidationError(f"feature row must be 1-D, got shape {row.shape}")
    if d is not None and row.shape[0] != d:
        raise ValidationError(f"feature row has length {row.shape[0]}, expected {d}")
    if not np.all(np.isfinite(row)):
        raise ValidationError("feature row contains non-finite values")
    return row


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of fixed-width numeric feature rows.

    Rows are identified by position; ``ids`` are optional display labels.
    ``values`` is an immutable (n, d) float64 array.
    """

    values: np.ndarray
    feature_names: tuple[str, ...]
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if arr.ndim != 2:
            raise ValidationError("dataset values must be a 2-D table")
        n, d = arr.shape
        if n < 1 or d < 1:
            raise ValidationError("dataset needs at least one row and one feature")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("dataset contains non-finite values")
        names = tuple(str(x) for x in self.feature_names)
        if len(names) != d:
            raise ValidationError(
                f"{len(names)} feature names for {d} feature columns"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "feature_names", names)
        if self.ids is not None:
            ids = tuple(str(x) for x in self.ids)
            if len(ids) != n:
                raise ValidationError(f"{len(ids)} ids for {n} rows")
            if len(set(ids)) != len(ids):
                dup = sorted({x for x in ids if ids.count(x) > 1})
                raise ValidationError(f"duplicate ids: {dup}")
            object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def row(self, index: int) -> np.ndarray:
        if not 0 <= index < self.n:
            raise ValidationError(f"item index {index} out of range 0..{self.n - 1}")
        return self.values[index]

    def id_of(self, index: int) -> str | None:
        return None if self.ids is None else self.ids[index]


def validate_dataset(raw: Sequence[Sequence[str]], has_ids: bool = False) -> Dataset:
    """Parse a header-plus-rows table of text cells into a Dataset.

    The first row is the header; when ``has_ids`` is set the first column is
    treated as the id column.  Row order is preserved (it is the tie-break
    order downstream).
    """
    rows = [list(r) for r in raw]
    if len(rows) < 2:
        raise ValidationError("table needs a header row and at least one data row")
    header = [str(c).strip() for c in rows[0]]
    width = len(header)
    start = 1 if has_ids else 0
    feature_names = header[start:]
    if not feature_names:
        raise ValidationError("no feature columns in header")
    ids: list[str] | None = [] if has_ids else None
    parsed = []
    for r, cells in enumerate(rows[1:], start=2):
        if len(cells) != width:
            raise ValidationError(
                f"row {r} has {len(cells)} cells, expected {width}"
            )
        if has_ids:
            ids.append(str(cells[0]).strip())
        values = []
        for c, cell in enumerate(cells[start:]):
            text = str(cell).strip()
            try:
                v = float(text)
            except ValueError:
                raise ValidationError(
                    f"row {r}, column '{feature_names[c]}': "
                    f"cannot parse {text!r} as a number"
                ) from None
            if not math.isfinite(v):
                raise ValidationError(
                    f"row {r}, column '{feature_names[c]}': non-finite value {text!r}"
                )
            values.append(v)
        parsed.append(values)
    return Dataset(
        values=np.array(parsed, dtype=np.float64),
        feature_names=tuple(feature_names),
        ids=tuple(ids) if ids is not None else None,
    )


def compose_hybrid(v, u, coalition: Iterable[int]) -> np.ndarray:
    """Build the hybrid row taking coalition features from u, the rest from v."""
    v = _as_row(v)
    u = _as_row(u)
    if v.shape[0] != u.shape[0]:
        raise ValidationError(
            f"rows have different lengths: {v.shape[0]} vs {u.shape[0]}"
        )
    d = v.shape[0]
    members = frozenset(coalition)
    if any(not isinstance(j, (int, np.integer)) or not 0 <= j < d for j in members):
        raise ValidationError(f"coalition {sorted(members)} invalid for d={d}")
    out = v.copy()
    for j in members:
        out[j] = u[j]
    return out


@dataclass(frozen=True)
class QoIKind:
    """Which ranked outcome is being explained.

    ``kind`` is one of score, rank, topk, pairwise-score, pairwise-rank,
    pairwise-topk; ``k`` is required for the topk variants and must be absent
    otherwise.
    """

    kind: str
    k: int | None = None

    def __post_init__(self):
        if self.kind not in QOI_KINDS:
            raise ValidationError(
                f"unknown QoI kind {self.kind!r}; expected one of {QOI_KINDS}"
            )
        if self.base_kind == "topk":
            if self.k is None or int(self.k) < 1:
                raise ValidationError("topk QoI requires a positive k")
            object.__setattr__(self, "k", int(self.k))
        elif self.k is not None:
            raise ValidationError(f"QoI kind {self.kind!r} does not take k")

    @property
    def is_pairwise(self) -> bool:
        return self.kind.startswith("pairwise-")

    @property
    def base_kind(self) -> str:
        return self.kind.removeprefix("pairwise-")

    def label(self) -> str:
        return self.kind if self.k is None else f"{self.kind}(k={self.k})"


@dataclass(frozen=True)
class ExplanationVector:
    """Per-feature contributions for one item (or ordered pair) under one QoI."""

    contributions: tuple[float, ...]
    qoi: QoIKind
    subject: int | tuple[int, int]
    baseline: float
    reconstruction: float
    options_fingerprint: str
    id: str | None = field(default=None)

    def __post_init__(self):
        contribs = tuple(float(c) for c in self.contributions)
        object.__setattr__(self, "contributions", contribs)
        if self.qoi.is_pairwise:
            pair = tuple(int(i) for i in self.subject)
            if len(pair) != 2:
                raise ValidationError("pairwise subject must be an ordered pair")
            object.__setattr__(self, "subject", pair)
        else:
            object.__setattr__(self, "subject", int(self.subject))
        gap = abs(self.reconstruction - self.baseline - math.fsum(contribs))
        if gap > RECONSTRUCTION_TOL:
            raise ValidationError(
                f"reconstruction off by {gap:.3e}; must equal baseline + sum(phi)"
            )

    @property
    def total(self) -> float:
        return math.fsum(self.contributions)
