"""Payoff evaluation for the four quantities of interest.

A payoff maps a hybrid row to a real number: its score, its replacement rank
(the rank the hybrid attains when inserted into the dataset in place of the
explained item), or its top-k membership indicator.  ``iota`` is the sampled
difference-of-payoffs kernel the Shapley engine accumulates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import Dataset, QoIKind, compose_hybrid, _as_row
from .scoring import Ranking, ScoringFunction, rank_all


@dataclass(frozen=True)
class PayoffContext:
    """Fixed arguments of a payoff: dataset, scorer, QoI, and explained item.

    Score ties between a hybrid and an incumbent are broken positionally.
    For per-item QoIs the hybrid inherits v's row index, which makes identity
    replacement agree with rank_all exactly.  For pairwise QoIs ties are
    instead resolved so that substituting all of the partner's values lands
    the hybrid exactly at the partner's original rank, which makes pairwise
    contributions telescope to the true rank difference on tie-free data.
    """

    dataset: Dataset
    scorer: ScoringFunction
    qoi: QoIKind
    v_index: int
    base_ranking: Ranking

    def __post_init__(self):
        ds = self.dataset
        if not 0 <= self.v_index < ds.n:
            raise ValidationError(
                f"item index {self.v_index} out of range 0..{ds.n - 1}"
            )
        if self.base_ranking.n != ds.n:
            raise ValidationError("base ranking does not match the dataset")
        if self.qoi.k is not None and self.qoi.k > ds.n:
            raise ValidationError(f"k={self.qoi.k} exceeds dataset size {ds.n}")
        scores = self.scorer.score_rows(ds.values, ds.feature_names)
        keep = np.arange(ds.n) != self.v_index
        inc_scores = scores[keep]
        inc_index = np.arange(ds.n)[keep]
        inc_sorted = np.sort(inc_scores)
        uniq, inverse = np.unique(inc_scores, return_inverse=True)
        if self.qoi.is_pairwise:
            ranks = np.asarray(self.base_ranking.rank_of)
            wins_tie = ranks[keep] > self.base_ranking.rank_of[self.v_index]
        else:
            wins_tie = inc_index < self.v_index
        tie_counts = np.bincount(inverse[wins_tie], minlength=len(uniq))
        object.__setattr__(self, "_scores", scores)
        object.__setattr__(self, "_inc_rows", ds.values[keep])
        object.__setattr__(self, "_inc_sorted", inc_sorted)
        object.__setattr__(self, "_uniq", uniq)
        object.__setattr__(self, "_tie_counts", tie_counts)

    @property
    def v_row(self) -> np.ndarray:
        return self.dataset.row(self.v_index)

    @property
    def incumbent_rows(self) -> np.ndarray:
        """Rows of the dataset without the explained item, in dataset order."""
        return self._inc_rows

    def replacement_ranks(self, hybrid_scores: np.ndarray) -> np.ndarray:
        """Vectorized replacement rank for a batch of hybrid scores."""
        s = np.asarray(hybrid_scores, dtype=np.float64)
        greater = len(self._inc_sorted) - np.searchsorted(
            self._inc_sorted, s, side="right"
        )
        pos = np.searchsorted(self._uniq, s, side="left")
        clipped = np.minimum(pos, len(self._uniq) - 1)
        tied = np.where(self._uniq[clipped] == s, self._tie_counts[clipped], 0)
        return greater + tied + 1

    def payoff_rows(self, rows: np.ndarray) -> np.ndarray:
        """Payoff of each row of a (m, d) matrix under this context's QoI."""
        rows = np.asarray(rows, dtype=np.float64)
        scores = self.scorer.score_rows(rows, self.dataset.feature_names)
        base = self.qoi.base_kind
        if base == "score":
            return scores
        ranks = self.replacement_ranks(scores)
        if base == "rank":
            return ranks.astype(np.float64)
        return (ranks <= self.qoi.k).astype(np.float64)


def payoff_one(ctx: PayoffContext, u) -> float:
    """Payoff of a single row: f(u), its replacement rank, or top-k membership."""
    u = _as_row(u, ctx.dataset.d)
    return float(ctx.payoff_rows(u[None, :])[0])


def iota(ctx: PayoffContext, U1, U2) -> float:
    """Mean difference in QoI between two positionally paired sample vectors.

    Signs follow the per-QoI conventions: score is f(u1) - f(u2); rank is
    rank(u2) - rank(u1), positive meaning u1 sits higher; top-k is +1 when
    only u1 is in the top-k and -1 when only u2 is, averaged over the pairs.
    """
    A = np.atleast_2d(np.asarray(U1, dtype=np.float64))
    B = np.atleast_2d(np.asarray(U2, dtype=np.float64))
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ValidationError("iota requires at least one sample pair")
    if A.shape != B.shape:
        raise ValidationError(f"sample shape mismatch: {A.shape} vs {B.shape}")
    p1 = ctx.payoff_rows(A)
    p2 = ctx.payoff_rows(B)
    if ctx.qoi.base_kind == "rank":
        return float(np.mean(p2 - p1))
    return float(np.mean(p1 - p2))


def canonical_delta(ctx: PayoffContext, U1, U2) -> float:
    """iota in the uniform efficiency orientation: payoff(U1) - payoff(U2).

    Equals iota for score and top-k and -iota for rank, so that contributions
    always reconstruct QoI(v) from the baseline.
    """
    value = iota(ctx, U1, U2)
    return -value if ctx.qoi.base_kind == "rank" else value


def payoff_pair(ctx: PayoffContext, v, u, coalition) -> float:
    """Deterministic single-sample payoff of the (v, u) hybrid for coalition s."""
    if not ctx.qoi.is_pairwise:
        raise ValidationError("payoff_pair requires a pairwise QoI context")
    return payoff_one(ctx, compose_hybrid(v, u, coalition))


def make_context(
    dataset: Dataset,
    scorer: ScoringFunction,
    qoi: QoIKind,
    v_index: int,
    base_ranking: Ranking | None = None,
) -> PayoffContext:
    if base_ranking is None:
        base_ranking = rank_all(scorer, dataset)
    return PayoffContext(
        dataset=dataset,
        scorer=scorer,
        qoi=qoi,
        v_index=v_index,
        base_ranking=base_ranking,
    )
