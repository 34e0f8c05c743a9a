"""Aggregation of explanation batches over ranking strata."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .model import ExplanationVector
from .scoring import Ranking


@dataclass(frozen=True)
class StratumSummary:
    """Box-and-whiskers statistics of one feature's contributions in one stratum."""

    stratum: int
    feature: int
    count: int
    q1: float
    median: float
    q3: float
    whisker_lo: float
    whisker_hi: float


def stratum_bounds(n: int, n_strata: int) -> list[tuple[int, int]]:
    """Half-open rank intervals (lo, hi] per stratum; earlier strata absorb
    the remainder."""
    return [
        (math.ceil((s - 1) * n / n_strata), math.ceil(s * n / n_strata))
        for s in range(1, n_strata + 1)
    ]


def stratify_aggregate(
    expls: Sequence[ExplanationVector],
    ranking: Ranking,
    n_strata: int,
) -> list[StratumSummary]:
    """Quartile summaries of per-feature contributions within each rank stratum."""
    n = ranking.n
    if len(expls) != n:
        raise ValidationError(f"{len(expls)} explanations for {n} ranked items")
    if not 1 <= n_strata <= n:
        raise ValidationError(f"n_strata must be in 1..{n}")
    subjects = sorted(e.subject for e in expls)
    if subjects != list(range(n)):
        raise ValidationError("need exactly one explanation per item index")
    by_item = {e.subject: e for e in expls}
    d = len(expls[0].contributions)
    ranks = ranking.rank_of
    out: list[StratumSummary] = []
    for s, (lo, hi) in enumerate(stratum_bounds(n, n_strata), start=1):
        members = [v for v in range(n) if lo < ranks[v] <= hi]
        block = np.asarray([by_item[v].contributions for v in members])
        for f in range(d):
            values = block[:, f]
            q1, med, q3 = np.percentile(values, [25.0, 50.0, 75.0])
            iqr = q3 - q1
            out.append(
                StratumSummary(
                    stratum=s,
                    feature=f,
                    count=len(members),
                    q1=float(q1),
                    median=float(med),
                    q3=float(q3),
                    whisker_lo=float(max(values.min(), q1 - 1.5 * iqr)),
                    whisker_hi=float(min(values.max(), q3 + 1.5 * iqr)),
                )
            )
    return out
