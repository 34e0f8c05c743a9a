"""Shapley engine: coalition enumeration, sampling, and explanation drivers.

Contributions are accumulated in the efficiency orientation for every QoI:
baseline + sum(phi) reconstructs QoI(v) exactly in EXACT mode with unbounded
coalitions.  For the rank QoI this means helpful features carry negative
contributions (a lower rank is a better rank).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator

import numpy as np
from joblib import Parallel, delayed

from .errors import ComputationError, ValidationError
from .model import Dataset, ExplanationVector, QoIKind
from .payoffs import PayoffContext, make_context, payoff_one
from .scoring import Ranking, ScoringFunction, rank_all

EXACT = "exact"

SAMPLING_MODES = ("row-joint", "independent-marginal")


@dataclass(frozen=True)
class EngineOptions:
    """Engine knobs: sample count, coalition bound, sampling mode, seed, jobs.

    ``samples_m`` is a positive integer or the EXACT sentinel; EXACT uses all
    n-1 other rows in dataset order.  ``max_coalition`` of None means
    unbounded (d-1).  ``parallelism`` never affects results, only wall time.
    """

    samples_m: int | str = EXACT
    max_coalition: int | None = None
    sampling_mode: str = "row-joint"
    seed: int = 0
    parallelism: int = 1

    def __post_init__(self):
        if self.samples_m != EXACT:
            if not isinstance(self.samples_m, (int, np.integer)) or self.samples_m < 1:
                raise ValidationError(
                    f"samples_m must be a positive integer or {EXACT!r}"
                )
            object.__setattr__(self, "samples_m", int(self.samples_m))
        if self.max_coalition is not None and self.max_coalition < 0:
            raise ValidationError("max_coalition must be >= 0")
        if self.sampling_mode not in SAMPLING_MODES:
            raise ValidationError(
                f"sampling_mode must be one of {SAMPLING_MODES}"
            )
        if self.samples_m == EXACT and self.sampling_mode != "row-joint":
            raise ValidationError(
                "EXACT means all n-1 rows under row-joint sampling; "
                "independent-marginal needs an explicit samples_m"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must fit in 64 unsigned bits")
        if self.parallelism < 1:
            raise ValidationError("parallelism must be a positive integer")

    def fingerprint(self) -> str:
        bound = "unbounded" if self.max_coalition is None else str(self.max_coalition)
        return (
            f"samples={self.samples_m};max_coalition={bound};"
            f"sampling={self.sampling_mode};seed={self.seed}"
        )


@dataclass(frozen=True)
class CoalitionWeight:
    coalition: frozenset[int]
    weight: float


def _size_weight(d: int, size: int, max_size: int) -> float:
    # Alg-1 weight (1/d) / C(d-1, size); bounded enumeration renormalizes the
    # total mass back to 1, which leaves 1 / ((max_size+1) * C(d-1, size)).
    return 1.0 / ((max_size + 1) * math.comb(d - 1, size))


def enumerate_coalitions(
    d: int, i: int, max_size: int | None = None
) -> Iterator[CoalitionWeight]:
    """Yield every coalition of features other than i, with its Shapley weight.

    Weights sum to 1 over the emitted coalitions, both unbounded and bounded.
    """
    if not 0 <= i < d:
        raise ValidationError(f"feature index {i} out of range 0..{d - 1}")
    if max_size is None:
        max_size = d - 1
    if not 0 <= max_size <= d - 1:
        raise ValidationError(f"max coalition size {max_size} out of range 0..{d - 1}")
    others = [j for j in range(d) if j != i]
    for size in range(max_size + 1):
        w = _size_weight(d, size, max_size)
        for combo in combinations(others, size):
            yield CoalitionWeight(coalition=frozenset(combo), weight=w)


def _stream_seed(seed: int, stream_key: str) -> np.random.SeedSequence:
    digest = hashlib.sha256(stream_key.encode("utf-8")).digest()
    words = [int.from_bytes(digest[k : k + 8], "big") for k in (0, 8, 16, 24)]
    return np.random.SeedSequence([int(seed), *words])


def _sample_indices_without_replacement(
    rng: np.random.Generator, n: int, m: int
) -> np.ndarray:
    if m == n:
        return np.arange(n)
    if 2 * m >= n:
        return rng.permutation(n)[:m]
    seen: set[int] = set()
    out: list[int] = []
    while len(out) < m:
        for x in rng.integers(0, n, size=m - len(out)):
            xi = int(x)
            if xi not in seen:
                seen.add(xi)
                out.append(xi)
    return np.asarray(out, dtype=np.int64)


def _draw_rows(
    rng: np.random.Generator,
    incumbents: np.ndarray,
    m: int,
    mode: str,
) -> np.ndarray:
    pool = incumbents.shape[0]
    if mode == "row-joint":
        return incumbents[_sample_indices_without_replacement(rng, pool, m)]
    cols = [incumbents[rng.integers(0, pool, size=m), j] for j in range(incumbents.shape[1])]
    return np.column_stack(cols)


def draw_samples(
    dataset: Dataset,
    v_index: int,
    m: int | str,
    mode: str = "row-joint",
    seed: int = 0,
    stream_key: str = "",
) -> np.ndarray:
    """Draw m rows used to randomize coalition features, deterministically.

    row-joint samples rows of the dataset without the explained item, without
    replacement (EXACT or m = n-1 returns all of them in dataset order);
    independent-marginal draws each feature independently from its column.
    """
    if mode not in SAMPLING_MODES:
        raise ValidationError(f"sampling mode must be one of {SAMPLING_MODES}")
    if not 0 <= v_index < dataset.n:
        raise ValidationError(f"item index {v_index} out of range 0..{dataset.n - 1}")
    if dataset.n == 1:
        raise ValidationError("cannot sample from a single-item dataset")
    incumbents = dataset.values[np.arange(dataset.n) != v_index]
    pool = incumbents.shape[0]
    if m == EXACT:
        m = pool
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValidationError(f"sample count must be a positive integer or {EXACT!r}")
    if mode == "row-joint":
        if m > pool:
            raise ValidationError(f"m={m} exceeds the {pool} available rows")
        if m == pool:
            return incumbents.copy()
    rng = np.random.default_rng(_stream_seed(seed, stream_key))
    return _draw_rows(rng, incumbents, int(m), mode)


def _coalition_plan(d: int, max_size: int):
    """Masks and weights for every (feature, coalition) pair, in a fixed order.

    Returns (feature_of_pair, mask_s, mask_si, weights) where mask_s marks the
    randomized coalition and mask_si additionally randomizes the feature.
    """
    feats: list[int] = []
    weights: list[float] = []
    mask_s: list[np.ndarray] = []
    mask_si: list[np.ndarray] = []
    for i in range(d):
        for cw in enumerate_coalitions(d, i, max_size):
            base = np.zeros(d, dtype=bool)
            for j in cw.coalition:
                base[j] = True
            with_i = base.copy()
            with_i[i] = True
            feats.append(i)
            weights.append(cw.weight)
            mask_s.append(base)
            mask_si.append(with_i)
    return (
        np.asarray(feats),
        np.asarray(mask_s),
        np.asarray(mask_si),
        np.asarray(weights),
    )


def _resolve_m(opts: EngineOptions, n: int) -> int | str:
    if opts.samples_m == EXACT:
        return EXACT
    if opts.sampling_mode == "row-joint":
        return min(opts.samples_m, n - 1)
    return opts.samples_m


def _resolve_max_size(opts: EngineOptions, d: int) -> int:
    if opts.max_coalition is None:
        return d - 1
    if not 0 <= opts.max_coalition <= d - 1:
        raise ValidationError(
            f"max_coalition {opts.max_coalition} out of range 0..{d - 1}"
        )
    return opts.max_coalition


def _item_baseline(ctx: PayoffContext, opts: EngineOptions, m) -> float:
    if opts.sampling_mode == "row-joint":
        return float(np.mean(ctx.payoff_rows(ctx.incumbent_rows)))
    rng = np.random.default_rng(
        np.random.SeedSequence([opts.seed, ctx.v_index, 1])
    )
    rows = _draw_rows(rng, ctx.incumbent_rows, int(m), opts.sampling_mode)
    return float(np.mean(ctx.payoff_rows(rows)))


def explain_item(
    dataset: Dataset,
    v_index: int,
    qoi: QoIKind,
    scorer: ScoringFunction,
    opts: EngineOptions = EngineOptions(),
    *,
    base_ranking: Ranking | None = None,
) -> ExplanationVector:
    """Shapley contributions of each feature of item v to a per-item QoI.

    For each feature i and each weighted coalition S of the other features,
    two hybrid batches are compared: one with S randomized and one with
    S plus i randomized.  The weighted deltas accumulate into phi_i and the
    baseline is the mean payoff of fully randomized rows.
    """
    if qoi.is_pairwise:
        raise ValidationError("explain_item handles non-pairwise QoIs only")
    if dataset.n < 2:
        raise ValidationError("explaining an item requires at least two rows")
    ctx = make_context(dataset, scorer, qoi, v_index, base_ranking)
    d = dataset.d
    m = _resolve_m(opts, dataset.n)
    max_size = _resolve_max_size(opts, d)
    feats, mask_s, mask_si, weights = _coalition_plan(d, max_size)
    P = len(feats)
    v_row = ctx.v_row

    if m == EXACT:
        U = ctx.incumbent_rows[None, :, :]
        m_rows = U.shape[1]
    else:
        m_rows = int(m)
        rng = np.random.default_rng(np.random.SeedSequence([opts.seed, v_index, 0]))
        U = np.empty((P, m_rows, d))
        for p in range(P):
            U[p] = _draw_rows(rng, ctx.incumbent_rows, m_rows, opts.sampling_mode)

    masks = np.concatenate([mask_s, mask_si], axis=0)
    U2 = np.broadcast_to(U, (P, m_rows, d))
    hybrids = np.where(
        masks[:, None, :], np.concatenate([U2, U2], axis=0), v_row[None, None, :]
    )
    payoffs = ctx.payoff_rows(hybrids.reshape(-1, d)).reshape(2 * P, m_rows)
    deltas = (payoffs[:P] - payoffs[P:]).mean(axis=1)

    phi = [
        math.fsum(
            w * delta
            for w, delta, f in zip(weights, deltas, feats)
            if f == i
        )
        for i in range(d)
    ]
    baseline = _item_baseline(ctx, opts, m)
    return ExplanationVector(
        contributions=tuple(phi),
        qoi=qoi,
        subject=v_index,
        baseline=baseline,
        reconstruction=baseline + math.fsum(phi),
        options_fingerprint=opts.fingerprint(),
        id=dataset.id_of(v_index),
    )


def explain_pair(
    dataset: Dataset,
    v_index: int,
    u_index: int,
    qoi: QoIKind,
    scorer: ScoringFunction,
    opts: EngineOptions = EngineOptions(),
    *,
    base_ranking: Ranking | None = None,
) -> ExplanationVector:
    """Shapley contributions of v's features to the outcome gap against u.

    Hybrids substitute u's values into v one coalition at a time; payoffs are
    deterministic, so no sampling happens.  The baseline anchors at v's own
    payoff and, for pairwise-rank on tie-free data, the contributions sum to
    the rank difference between the two items.
    """
    if not qoi.is_pairwise:
        raise ValidationError("explain_pair requires a pairwise QoI")
    if v_index == u_index:
        raise ValidationError("pair members must be distinct items")
    if not 0 <= u_index < dataset.n:
        raise ValidationError(f"item index {u_index} out of range 0..{dataset.n - 1}")
    ctx = make_context(dataset, scorer, qoi, v_index, base_ranking)
    d = dataset.d
    max_size = _resolve_max_size(opts, d)
    v_row = ctx.v_row
    u_row = dataset.row(u_index)

    all_masks = [
        np.array([j in combo for j in range(d)])
        for size in range(d + 1)
        for combo in combinations(range(d), size)
    ]
    mask_bits = [tuple(mask.nonzero()[0]) for mask in all_masks]
    hybrids = np.where(np.asarray(all_masks), u_row, v_row)
    values = ctx.payoff_rows(hybrids)
    val_of = dict(zip(mask_bits, values))

    phi = []
    for i in range(d):
        terms = []
        for cw in enumerate_coalitions(d, i, max_size):
            s = tuple(sorted(cw.coalition))
            si = tuple(sorted(cw.coalition | {i}))
            terms.append(cw.weight * (val_of[s] - val_of[si]))
        phi.append(math.fsum(terms))
    baseline = float(val_of[()])
    return ExplanationVector(
        contributions=tuple(phi),
        qoi=qoi,
        subject=(v_index, u_index),
        baseline=baseline,
        reconstruction=baseline + math.fsum(phi),
        options_fingerprint=opts.fingerprint(),
        id=dataset.id_of(v_index),
    )


def _explain_one_checked(dataset, v_index, qoi, scorer, opts, base_ranking):
    try:
        return explain_item(
            dataset, v_index, qoi, scorer, opts, base_ranking=base_ranking
        )
    except Exception as exc:
        raise ComputationError(f"explanation failed for item {v_index}: {exc}") from exc


def explain_all(
    dataset: Dataset,
    qoi: QoIKind,
    scorer: ScoringFunction,
    opts: EngineOptions = EngineOptions(),
) -> list[ExplanationVector]:
    """Explain every item; output is identical for any parallelism degree."""
    base_ranking = rank_all(scorer, dataset)
    if opts.parallelism == 1:
        return [
            _explain_one_checked(dataset, v, qoi, scorer, opts, base_ranking)
            for v in range(dataset.n)
        ]
    results = Parallel(n_jobs=opts.parallelism, prefer="threads")(
        delayed(_explain_one_checked)(dataset, v, qoi, scorer, opts, base_ranking)
        for v in range(dataset.n)
    )
    return list(results)


def qoi_value(
    dataset: Dataset,
    v_index: int,
    qoi: QoIKind,
    scorer: ScoringFunction,
    *,
    base_ranking: Ranking | None = None,
) -> float:
    """The actual outcome being explained: v's score, rank, or top-k flag."""
    ctx = make_context(dataset, scorer, qoi, v_index, base_ranking)
    return payoff_one(ctx, dataset.row(v_index))
