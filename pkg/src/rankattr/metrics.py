"""Evaluation metrics: fidelity, agreement kernels, and sensitivity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .model import Dataset, ExplanationVector, QoIKind
from .scoring import Ranking, ScoringFunction, rank_all

SIMILARITY_KINDS = ("kendall", "jaccard-top2", "euclid-unit")
NEIGHBOR_KINDS = ("feature-knn", "rank-window")

DEFAULT_NEIGHBORS = 10


@dataclass(frozen=True)
class NeighborSpec:
    """How to pick the similar items used by the sensitivity metric."""

    kind: str = "feature-knn"
    count: int = DEFAULT_NEIGHBORS

    def __post_init__(self):
        if self.kind not in NEIGHBOR_KINDS:
            raise ValidationError(f"neighbor kind must be one of {NEIGHBOR_KINDS}")
        if self.count < 1:
            raise ValidationError("neighbor count must be positive")


@dataclass(frozen=True)
class SensitivityTriple:
    """One (item, neighbor) point of the sensitivity scatter."""

    reference: int
    neighbor: int
    explanation_distance: float
    rank_distance: int
    feature_distance: float


def _importance_order(contributions: np.ndarray) -> list[int]:
    # Features ordered by falling |contribution|; exact ties fall back to the
    # feature index so orderings are always total.
    return sorted(range(len(contributions)), key=lambda j: (-abs(contributions[j]), j))


def _kendall(e1: np.ndarray, e2: np.ndarray) -> float:
    d = len(e1)
    pos1 = np.empty(d, dtype=int)
    pos2 = np.empty(d, dtype=int)
    for p, j in enumerate(_importance_order(e1)):
        pos1[j] = p
    for p, j in enumerate(_importance_order(e2)):
        pos2[j] = p
    discordant = sum(
        (pos1[a] < pos1[b]) != (pos2[a] < pos2[b])
        for a in range(d)
        for b in range(a + 1, d)
    )
    return 1.0 - discordant / math.comb(d, 2)


def _jaccard_top2(e1: np.ndarray, e2: np.ndarray) -> float:
    t1 = set(_importance_order(e1)[:2])
    t2 = set(_importance_order(e2)[:2])
    return len(t1 & t2) / len(t1 | t2)


def _euclid_unit(e1: np.ndarray, e2: np.ndarray) -> float:
    n1 = float(np.linalg.norm(e1))
    n2 = float(np.linalg.norm(e2))
    if n1 == 0.0 and n2 == 0.0:
        return 1.0
    if n1 == 0.0 or n2 == 0.0:
        return 0.0
    return 1.0 - float(np.linalg.norm(e1 / n1 - e2 / n2)) / 2.0


def similarity(e1: Sequence[float], e2: Sequence[float], kind: str) -> float:
    """Agreement in [0, 1] between two contribution vectors; 1 = identical.

    kendall compares the importance orderings of the features, jaccard-top2
    the top-2 feature sets by absolute contribution, euclid-unit the
    unit-normalized vectors.
    """
    a = np.asarray(e1, dtype=np.float64)
    b = np.asarray(e2, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"contribution length mismatch: {a.shape} vs {b.shape}")
    if a.ndim != 1 or a.shape[0] < 2:
        raise ValidationError("similarity needs vectors of at least two features")
    if kind == "kendall":
        return _kendall(a, b)
    if kind == "jaccard-top2":
        return _jaccard_top2(a, b)
    if kind == "euclid-unit":
        return _euclid_unit(a, b)
    raise ValidationError(f"similarity kind must be one of {SIMILARITY_KINDS}")


def fidelity(expl: ExplanationVector, qoi_value: float, z: float) -> float:
    """How well the explanation reconstructs the observed outcome.

    1 - |observed - reconstruction| / z, clamped to [0, 1].  For pairwise
    QoIs ``qoi_value`` is the observed payoff gap payoff(v) - payoff(u) and
    the result is 1 exactly when sign(sum(phi)) predicts it.
    """
    if z <= 0:
        raise ValidationError("fidelity normalizer z must be positive")
    if expl.qoi.is_pairwise:
        total = expl.total
        agree = (
            (total > 0 and qoi_value > 0)
            or (total < 0 and qoi_value < 0)
            or (total == 0 and qoi_value == 0)
        )
        return 1.0 if agree else 0.0
    return min(1.0, max(0.0, 1.0 - abs(qoi_value - expl.reconstruction) / z))


def _observed_values(
    dataset: Dataset,
    qoi: QoIKind,
    scorer: ScoringFunction,
    ranking: Ranking,
) -> np.ndarray:
    scores = scorer.score_rows(dataset.values, dataset.feature_names)
    if qoi.base_kind == "score":
        return scores
    ranks = np.asarray(ranking.rank_of, dtype=np.float64)
    if qoi.base_kind == "rank":
        return ranks
    return (ranks <= qoi.k).astype(np.float64)


def _normalizer(dataset: Dataset, qoi: QoIKind, observed: np.ndarray) -> float:
    if qoi.base_kind == "rank":
        return float(dataset.n)
    if qoi.base_kind == "topk":
        return 1.0
    spread = float(observed.max() - observed.min())
    return spread if spread > 0 else 1.0


def method_fidelity(
    expls: Sequence[ExplanationVector],
    dataset: Dataset,
    qoi: QoIKind,
    scorer: ScoringFunction,
) -> float:
    """Mean per-item fidelity over a batch of explanations (Z picked per QoI)."""
    if not expls:
        raise ValidationError("method_fidelity needs at least one explanation")
    ranking = rank_all(scorer, dataset)
    observed = _observed_values(dataset, qoi, scorer, ranking)
    if qoi.is_pairwise:
        values = []
        for e in expls:
            v, u = e.subject
            values.append(fidelity(e, float(observed[v] - observed[u]), 1.0))
        return float(np.mean(values))
    z = _normalizer(dataset, qoi, observed)
    return float(np.mean([fidelity(e, float(observed[e.subject]), z) for e in expls]))


def method_agreement(
    expls_g: Sequence[ExplanationVector],
    expls_q: Sequence[ExplanationVector],
    kind: str,
) -> float:
    """Mean per-item agreement between two aligned explanation batches."""
    if len(expls_g) != len(expls_q) or not expls_g:
        raise ValidationError("agreement needs two aligned, nonempty lists")
    for a, b in zip(expls_g, expls_q):
        if a.subject != b.subject:
            raise ValidationError(
                f"misaligned explanation lists: {a.subject} vs {b.subject}"
            )
    return float(
        np.mean(
            [
                similarity(a.contributions, b.contributions, kind)
                for a, b in zip(expls_g, expls_q)
            ]
        )
    )


def _zscore_columns(values: np.ndarray) -> np.ndarray:
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    return (values - mean) / std


def neighbor_sets(
    dataset: Dataset, nbr: NeighborSpec, ranking: Ranking
) -> list[list[int]]:
    """Neighbor indices per item: k-nearest in z-scored feature space, or a
    window of nearby ranks."""
    n = dataset.n
    if nbr.count >= n:
        raise ValidationError(f"neighbor count {nbr.count} must be below n={n}")
    out: list[list[int]] = []
    if nbr.kind == "feature-knn":
        z = _zscore_columns(dataset.values)
        for v in range(n):
            dist = np.linalg.norm(z - z[v], axis=1)
            order = sorted((float(dist[u]), u) for u in range(n) if u != v)
            out.append([u for _, u in order[: nbr.count]])
    else:
        ranks = np.asarray(ranking.rank_of)
        for v in range(n):
            out.append(
                [
                    u
                    for u in range(n)
                    if u != v and abs(int(ranks[u]) - int(ranks[v])) <= nbr.count
                ]
            )
    return out


def sensitivity(
    dataset: Dataset,
    expls: Sequence[ExplanationVector],
    nbr: NeighborSpec,
    kind: str,
    ranking: Ranking,
) -> tuple[float, list[SensitivityTriple]]:
    """Mean agreement between each item's explanation and its neighbors'.

    Also returns the scatter triples (explanation distance, rank distance,
    z-scored feature distance) for plot emission.
    """
    if len(expls) != dataset.n:
        raise ValidationError("sensitivity needs one explanation per item")
    contribs = np.asarray([e.contributions for e in expls])
    z = _zscore_columns(dataset.values)
    ranks = np.asarray(ranking.rank_of)
    sims: list[float] = []
    triples: list[SensitivityTriple] = []
    for v, neighbors in enumerate(neighbor_sets(dataset, nbr, ranking)):
        for u in neighbors:
            sims.append(similarity(contribs[v], contribs[u], kind))
            triples.append(
                SensitivityTriple(
                    reference=v,
                    neighbor=u,
                    explanation_distance=float(np.linalg.norm(contribs[v] - contribs[u])),
                    rank_distance=int(abs(int(ranks[v]) - int(ranks[u]))),
                    feature_distance=float(np.linalg.norm(z[v] - z[u])),
                )
            )
    if not sims:
        raise ValidationError("no neighbor pairs to aggregate")
    return float(np.mean(sims)), triples
