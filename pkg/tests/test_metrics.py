import numpy as np
import pytest

from rankattr import (
    EngineOptions,
    ExplanationVector,
    NeighborSpec,
    QoIKind,
    ScoringFunction,
    ValidationError,
    builtin_spec,
    explain_all,
    explain_pair,
    fidelity,
    generate_synthetic,
    method_agreement,
    method_fidelity,
    rank_all,
    sensitivity,
    similarity,
)

RANK_STYLE = (-19.52, -20.78, -1.95, -18.71)   # importance: Sys, AI, Inter, Th
SCORE_STYLE = (0.45, 0.38, -0.11, 0.49)        # importance: Inter, AI, Sys, Th


def _manual(contribs, qoi, subject, baseline):
    import math

    return ExplanationVector(
        contributions=tuple(contribs),
        qoi=qoi,
        subject=subject,
        baseline=baseline,
        reconstruction=baseline + math.fsum(contribs),
        options_fingerprint="manual",
    )


def test_fidelity_worked_example():
    expl = _manual([-60.96], QoIKind("rank"), 0, 94.5)
    value = fidelity(expl, expl.reconstruction + 0.16, 189.0)
    assert value == pytest.approx(1 - 0.16 / 189, abs=1e-12)
    assert value == pytest.approx(0.99915, abs=1e-5)


def test_fidelity_perfect_and_worst():
    expl = _manual([1.0], QoIKind("score"), 0, 2.0)
    assert fidelity(expl, 3.0, 5.0) == 1.0
    assert fidelity(expl, 8.0, 5.0) == 0.0


def test_fidelity_rejects_bad_z():
    expl = _manual([1.0], QoIKind("score"), 0, 2.0)
    with pytest.raises(ValidationError):
        fidelity(expl, 3.0, 0.0)


def test_fidelity_monotone_in_error():
    expl = _manual([1.0], QoIKind("score"), 0, 2.0)
    values = [fidelity(expl, 3.0 + err, 10.0) for err in (0.0, 0.5, 1.0, 2.0)]
    assert values == sorted(values, reverse=True)


def test_fidelity_pairwise_sign_prediction(admissions, f1):
    expl = explain_pair(admissions, 6, 0, QoIKind("pairwise-rank"), f1)
    ranking = rank_all(f1, admissions)
    observed = float(ranking.rank_of[6] - ranking.rank_of[0])
    assert fidelity(expl, observed, 1.0) == 1.0
    assert fidelity(expl, -observed, 1.0) == 0.0


def test_method_fidelity_exact_is_one(admissions, f1):
    for qoi in (QoIKind("score"), QoIKind("rank")):
        expls = explain_all(admissions, qoi, f1)
        assert method_fidelity(expls, admissions, qoi, f1) == pytest.approx(1.0, abs=1e-9)


def test_method_fidelity_single_item(admissions, f1):
    qoi = QoIKind("rank")
    expls = explain_all(admissions, qoi, f1)
    one = method_fidelity(expls[:1], admissions, qoi, f1)
    ranking = rank_all(f1, admissions)
    assert one == pytest.approx(
        fidelity(expls[0], float(ranking.rank_of[0]), float(admissions.n))
    )


def test_method_fidelity_half_and_half(admissions, f1):
    qoi = QoIKind("rank")
    ranking = rank_all(f1, admissions)
    exact = _manual([0.0], qoi, 0, float(ranking.rank_of[0]))
    broken = _manual([0.0], qoi, 1, float(ranking.rank_of[1]) + admissions.n)
    assert method_fidelity([exact, broken], admissions, qoi, f1) == pytest.approx(0.5)


def test_method_fidelity_empty_rejected(admissions, f1):
    with pytest.raises(ValidationError):
        method_fidelity([], admissions, QoIKind("rank"), f1)


def test_kendall_worked_orderings():
    assert similarity(RANK_STYLE, SCORE_STYLE, "kendall") == 0.5


def test_jaccard_top2_worked_orderings():
    assert similarity(RANK_STYLE, SCORE_STYLE, "jaccard-top2") == pytest.approx(1 / 3)


def test_similarity_identity():
    for kind in ("kendall", "jaccard-top2", "euclid-unit"):
        assert similarity(RANK_STYLE, RANK_STYLE, kind) == 1.0


def test_similarity_symmetry_and_scale_invariance():
    rng = np.random.default_rng(6)
    for _ in range(20):
        a = rng.normal(size=5)
        b = rng.normal(size=5)
        for kind in ("kendall", "jaccard-top2", "euclid-unit"):
            assert similarity(a, b, kind) == pytest.approx(similarity(b, a, kind))
        for kind in ("kendall", "jaccard-top2"):
            assert similarity(3.7 * a, b, kind) == similarity(a, b, kind)
        assert similarity(2.0 * a, 0.5 * b, "euclid-unit") == pytest.approx(
            similarity(a, b, "euclid-unit"), abs=1e-12
        )


def test_similarity_zero_vector_conventions():
    zero = (0.0, 0.0, 0.0)
    some = (1.0, 0.0, 0.0)
    assert similarity(zero, zero, "euclid-unit") == 1.0
    assert similarity(zero, some, "euclid-unit") == 0.0


def test_similarity_validation():
    with pytest.raises(ValidationError):
        similarity((1.0,), (1.0,), "kendall")
    with pytest.raises(ValidationError):
        similarity((1.0, 2.0), (1.0, 2.0, 3.0), "kendall")
    with pytest.raises(ValidationError):
        similarity((1.0, 2.0), (1.0, 2.0), "manhattan")


def test_method_agreement_identity(admissions, f1):
    expls = explain_all(admissions, QoIKind("rank"), f1)
    for kind in ("kendall", "jaccard-top2", "euclid-unit"):
        assert method_agreement(expls, expls, kind) == 1.0


def test_method_agreement_mean():
    qoi = QoIKind("score")
    a1 = _manual([3.0, 2.0, 1.0], qoi, 0, 0.0)
    b1 = _manual([3.0, 2.0, 1.0], qoi, 0, 0.0)
    a2 = _manual([3.0, 2.0, 1.0], qoi, 1, 0.0)
    b2 = _manual([1.0, 2.0, 3.0], qoi, 1, 0.0)
    assert similarity(a2.contributions, b2.contributions, "kendall") == 0.0
    assert method_agreement([a1, a2], [b1, b2], "kendall") == pytest.approx(0.5)


def test_method_agreement_misaligned():
    qoi = QoIKind("score")
    a = _manual([1.0, 2.0], qoi, 0, 0.0)
    b = _manual([1.0, 2.0], qoi, 1, 0.0)
    with pytest.raises(ValidationError, match="misaligned"):
        method_agreement([a], [b], "kendall")


def test_method_agreement_sampled_vs_exact_high():
    ds = generate_synthetic(builtin_spec("G3-indep", n=120, seed=8))
    f4 = ScoringFunction(kind="linear", weights=(0.33, 0.33, 0.34))
    exact = explain_all(ds, QoIKind("rank"), f4)
    sampled = explain_all(
        ds, QoIKind("rank"), f4, EngineOptions(samples_m=20, seed=1)
    )
    for kind in ("kendall", "jaccard-top2", "euclid-unit"):
        value = method_agreement(exact, sampled, kind)
        assert 0.0 <= value <= 1.0
        assert value > 0.9


def test_sensitivity_identical_explanations(admissions, f1):
    qoi = QoIKind("score")
    expls = [_manual([1.0, 2.0, 3.0], qoi, v, 0.0) for v in range(admissions.n)]
    ranking = rank_all(f1, admissions)
    value, triples = sensitivity(
        admissions, expls, NeighborSpec("feature-knn", 2), "kendall", ranking
    )
    assert value == 1.0
    assert all(t.explanation_distance == 0.0 for t in triples)


def test_sensitivity_all_pairs_when_count_is_n_minus_1(admissions, f1):
    expls = explain_all(admissions, QoIKind("rank"), f1)
    ranking = rank_all(f1, admissions)
    _, triples = sensitivity(
        admissions, expls, NeighborSpec("feature-knn", admissions.n - 1), "kendall", ranking
    )
    assert len(triples) == admissions.n * (admissions.n - 1)


def test_sensitivity_frozen_admissions_value(admissions, f1):
    expls = explain_all(admissions, QoIKind("rank"), f1)
    ranking = rank_all(f1, admissions)
    value, triples = sensitivity(
        admissions, expls, NeighborSpec("feature-knn", 2), "kendall", ranking
    )
    assert value == pytest.approx(0.5833333333333334, abs=1e-12)
    assert len(triples) == 16
    assert all(t.rank_distance >= 0 and t.feature_distance >= 0 for t in triples)


def test_sensitivity_rank_window(admissions, f1):
    expls = explain_all(admissions, QoIKind("rank"), f1)
    ranking = rank_all(f1, admissions)
    _, triples = sensitivity(
        admissions, expls, NeighborSpec("rank-window", 1), "kendall", ranking
    )
    assert all(t.rank_distance <= 1 for t in triples)


def test_sensitivity_count_too_large(admissions, f1):
    expls = explain_all(admissions, QoIKind("rank"), f1)
    ranking = rank_all(f1, admissions)
    with pytest.raises(ValidationError):
        sensitivity(
            admissions, expls, NeighborSpec("feature-knn", 8), "kendall", ranking
        )
