"""Scoring functions, induced rankings, and replacement ranks."""

from __future__ import annotations

import ast
import operator
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ComputationError, ValidationError
from .model import Dataset, _as_row

SCORER_KINDS = ("linear", "csrankings", "atp", "expression")

# CSRankings: geometric mean of adjusted counts, one factor per research area,
# area exponents 5/12/3/7, 27th root.
_CSR_EXPONENTS = {"ai": 5, "systems": 12, "theory": 3, "interdisciplinary": 7}
_CSR_ALIASES = {
    "ai": "ai",
    "systems": "systems",
    "sys": "systems",
    "theory": "theory",
    "th": "theory",
    "interdisciplinary": "interdisciplinary",
    "inter": "interdisciplinary",
    "int": "interdisciplinary",
}

# ATP: five positively weighted serve/ace statistics minus double faults,
# all scaled by 100.
_ATP_TERMS = [
    ("pct_first_serve", 100.0),
    ("pct_first_serve_points_won", 100.0),
    ("pct_second_serve_points_won", 100.0),
    ("pct_service_points_won", 100.0),
    ("avg_aces_per_match", 100.0),
    ("avg_double_faults_per_match", -100.0),
]
_ATP_ALIASES = {
    "pctfirstserve": "pct_first_serve",
    "firstserve": "pct_first_serve",
    "1stserve": "pct_first_serve",
    "pctfirstservepointswon": "pct_first_serve_points_won",
    "firstservepointswon": "pct_first_serve_points_won",
    "1stservepointswon": "pct_first_serve_points_won",
    "pctsecondservepointswon": "pct_second_serve_points_won",
    "secondservepointswon": "pct_second_serve_points_won",
    "2ndservepointswon": "pct_second_serve_points_won",
    "pctservicepointswon": "pct_service_points_won",
    "servicepointswon": "pct_service_points_won",
    "avgacespermatch": "avg_aces_per_match",
    "acespermatch": "avg_aces_per_match",
    "aces": "avg_aces_per_match",
    "avgdoublefaultspermatch": "avg_double_faults_per_match",
    "doublefaultspermatch": "avg_double_faults_per_match",
    "doublefaults": "avg_double_faults_per_match",
}

_BIN_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY_OPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _normalize_name(name: str) -> str:
    return "".join(ch for ch in name.lower() if ch.isalnum())


def _compile_expression(text: str) -> ast.Expression:
    source = text.replace("^", "**")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ValidationError(f"cannot parse expression {text!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if isinstance(node, (ast.Expression, ast.Name, ast.Load)):
            continue
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            continue
        if isinstance(node, ast.BinOp) and type(node.op) in _BIN_OPS:
            continue
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY_OPS:
            continue
        if type(node) in _BIN_OPS or type(node) in _UNARY_OPS:
            continue
        raise ValidationError(
            f"expression {text!r} uses unsupported syntax "
            f"({type(node).__name__}); allowed: + - * / ** and parentheses"
        )
    return tree


def _expression_names(tree: ast.Expression) -> set[str]:
    return {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)}


def _eval_expression(node, env: dict[str, np.ndarray]):
    if isinstance(node, ast.Expression):
        return _eval_expression(node.body, env)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id]
    if isinstance(node, ast.BinOp):
        left = _eval_expression(node.left, env)
        right = _eval_expression(node.right, env)
        return _BIN_OPS[type(node.op)](left, right)
    if isinstance(node, ast.UnaryOp):
        return _UNARY_OPS[type(node.op)](_eval_expression(node.operand, env))
    raise AssertionError(f"unreachable node {node!r}")


@dataclass(frozen=True)
class ScoringFunction:
    """A deterministic map from a feature row to a real score.

    Kinds: ``linear`` (dot product with ``weights``), ``csrankings`` and
    ``atp`` (named builtins binding dataset columns by name), ``expression``
    (arithmetic over feature names).
    """

    kind: str
    weights: tuple[float, ...] | None = None
    expression: str | None = None

    def __post_init__(self):
        if self.kind not in SCORER_KINDS:
            raise ValidationError(f"unknown scorer kind {self.kind!r}")
        if self.kind == "linear":
            if not self.weights:
                raise ValidationError("linear scorer requires weights")
            w = tuple(float(x) for x in self.weights)
            if not all(np.isfinite(w)):
                raise ValidationError("linear weights must be finite")
            object.__setattr__(self, "weights", w)
        elif self.weights is not None:
            raise ValidationError(f"{self.kind} scorer does not take weights")
        if self.kind == "expression":
            if not self.expression:
                raise ValidationError("expression scorer requires an expression")
            object.__setattr__(self, "_tree", _compile_expression(self.expression))
        elif self.expression is not None:
            raise ValidationError(f"{self.kind} scorer does not take an expression")

    def _column_env(
        self, values: np.ndarray, feature_names: tuple[str, ...] | None
    ) -> dict[str, np.ndarray]:
        if feature_names is None:
            raise ValidationError(
                f"{self.kind} scorer needs feature names to bind columns"
            )
        return {name: values[:, j] for j, name in enumerate(feature_names)}

    def _builtin_columns(
        self,
        values: np.ndarray,
        feature_names: tuple[str, ...] | None,
        aliases: Mapping[str, str],
        required: list[str],
    ) -> dict[str, np.ndarray]:
        if feature_names is None:
            raise ValidationError(
                f"{self.kind} scorer needs feature names to bind columns"
            )
        found: dict[str, np.ndarray] = {}
        for j, name in enumerate(feature_names):
            canonical = aliases.get(_normalize_name(name))
            if canonical is not None and canonical not in found:
                found[canonical] = values[:, j]
        missing = [name for name in required if name not in found]
        if missing:
            raise ValidationError(
                f"{self.kind} scorer: dataset is missing columns {missing} "
                f"(have {list(feature_names)})"
            )
        return found

    def score_rows(
        self, values: np.ndarray, feature_names: tuple[str, ...] | None = None
    ) -> np.ndarray:
        """Score a (m, d) matrix of rows, returning a length-m vector."""
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValidationError("score_rows expects a 2-D matrix")
        if self.kind == "linear":
            if values.shape[1] != len(self.weights):
                raise ValidationError(
                    f"weight-count mismatch: {len(self.weights)} weights "
                    f"for {values.shape[1]} features"
                )
            # Columnwise accumulation keeps a row's score bit-identical across
            # batch shapes; matmul may not, and exact-mode tie handling relies
            # on recomputed scores matching exactly.
            out = np.zeros(values.shape[0])
            for j, w in enumerate(self.weights):
                out = out + values[:, j] * w
        elif self.kind == "csrankings":
            cols = self._builtin_columns(
                values, feature_names, _CSR_ALIASES, list(_CSR_EXPONENTS)
            )
            with np.errstate(all="ignore"):
                product = np.ones(values.shape[0])
                for area, exponent in _CSR_EXPONENTS.items():
                    product = product * (cols[area] ** exponent + 1.0)
                out = product ** (1.0 / 27.0)
        elif self.kind == "atp":
            names = [name for name, _ in _ATP_TERMS]
            cols = self._builtin_columns(values, feature_names, _ATP_ALIASES, names)
            out = np.zeros(values.shape[0])
            for name, coeff in _ATP_TERMS:
                out = out + coeff * cols[name]
        else:
            env = self._column_env(values, feature_names)
            missing = sorted(_expression_names(self._tree) - set(env))
            if missing:
                raise ValidationError(
                    f"expression references undeclared features {missing}"
                )
            with np.errstate(all="ignore"):
                out = _eval_expression(self._tree, env)
            out = np.broadcast_to(np.asarray(out, dtype=np.float64), (values.shape[0],))
        out = np.asarray(out, dtype=np.float64)
        if not np.all(np.isfinite(out)):
            bad = int(np.flatnonzero(~np.isfinite(out))[0])
            raise ComputationError(
                f"scorer produced a non-finite result (first bad row {bad})"
            )
        return out

    def score_row(self, row, feature_names: tuple[str, ...] | None = None) -> float:
        row = _as_row(row)
        return float(self.score_rows(row[None, :], feature_names)[0])


def score(
    scorer: ScoringFunction, row, feature_names: tuple[str, ...] | None = None
) -> float:
    """Evaluate a scoring function on one feature row."""
    return scorer.score_row(row, feature_names)


@dataclass(frozen=True)
class Ranking:
    """Best-first permutation of item indices with its inverse rank map."""

    order: tuple[int, ...]
    rank_of: tuple[int, ...]

    def __post_init__(self):
        n = len(self.order)
        if sorted(self.order) != list(range(n)):
            raise ValidationError("order must be a permutation of item indices")
        if len(self.rank_of) != n or any(
            self.rank_of[item] != pos + 1 for pos, item in enumerate(self.order)
        ):
            raise ValidationError("rank_of is not the inverse of order")

    @property
    def n(self) -> int:
        return len(self.order)


def rank_all(scorer: ScoringFunction, dataset: Dataset) -> Ranking:
    """Rank all items: higher score first, ties to the smaller row index."""
    scores = scorer.score_rows(dataset.values, dataset.feature_names)
    order = np.argsort(-scores, kind="stable")
    rank_of = np.empty(dataset.n, dtype=np.int64)
    rank_of[order] = np.arange(1, dataset.n + 1)
    return Ranking(order=tuple(int(i) for i in order), rank_of=tuple(int(r) for r in rank_of))


def rank_of_replacement(
    dataset: Dataset, v_index: int, u, scorer: ScoringFunction
) -> int:
    """1-based rank of row ``u`` inserted into the dataset in place of item v.

    The inserted row inherits v's row index for tie-breaking, so replacing an
    item with its own row reproduces its rank_all rank exactly.
    """
    if not 0 <= v_index < dataset.n:
        raise ValidationError(f"item index {v_index} out of range 0..{dataset.n - 1}")
    u = _as_row(u, dataset.d)
    scores = scorer.score_rows(dataset.values, dataset.feature_names)
    s_u = scorer.score_row(u, dataset.feature_names)
    keep = np.arange(dataset.n) != v_index
    inc_scores = scores[keep]
    inc_index = np.arange(dataset.n)[keep]
    greater = int(np.sum(inc_scores > s_u))
    tied_before = int(np.sum((inc_scores == s_u) & (inc_index < v_index)))
    return 1 + greater + tied_before


def parse_scorer_config(
    doc: Mapping, feature_names: tuple[str, ...] | None = None
) -> ScoringFunction:
    """Build a ScoringFunction from a parsed configuration document."""
    if not isinstance(doc, Mapping):
        raise ValidationError("scorer config must be a mapping")
    unknown = set(doc) - {"kind", "weights", "expression"}
    if unknown:
        raise ValidationError(f"unknown scorer config fields {sorted(unknown)}")
    kind = doc.get("kind")
    if kind not in SCORER_KINDS:
        raise ValidationError(f"unknown scorer kind {kind!r}")
    scorer = ScoringFunction(
        kind=kind,
        weights=tuple(doc["weights"]) if "weights" in doc else None,
        expression=doc.get("expression"),
    )
    if feature_names is not None:
        if scorer.kind == "linear" and len(scorer.weights) != len(feature_names):
            raise ValidationError(
                f"weight-count mismatch: {len(scorer.weights)} weights "
                f"for {len(feature_names)} features"
            )
        if scorer.kind == "expression":
            missing = sorted(_expression_names(scorer._tree) - set(feature_names))
            if missing:
                raise ValidationError(
                    f"expression references undeclared features {missing}"
                )
    return scorer
