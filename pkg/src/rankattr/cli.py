"""Command-line interface.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 computation error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .docio import (
    dataset_fingerprint,
    read_dataset_csv,
    read_explanation_document,
    write_dataset_csv,
    write_explanations,
    write_sensitivity_csv,
    write_strata_csv,
)
from .engine import EXACT, EngineOptions, explain_all, explain_item, explain_pair
from .errors import ComputationError, RankattrError, ValidationError
from .metrics import (
    NeighborSpec,
    SIMILARITY_KINDS,
    method_agreement,
    method_fidelity,
    sensitivity,
)
from .model import Dataset, ExplanationVector, QoIKind
from .scoring import parse_scorer_config, rank_all
from .strata import stratify_aggregate
from .svgplot import write_waterfall_svg
from .synth import SyntheticSpec, builtin_spec, generate_synthetic
from .synth import bernoulli, gaussian, uniform

QOI_CHOICES = ("score", "rank", "topk", "pairwise-score", "pairwise-rank", "pairwise-topk")
SAMPLING_CHOICES = {"row-joint": "row-joint", "independent": "independent-marginal"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); flag errors are validation
        raise ValidationError(message)


def _load_dataset(args) -> Dataset:
    if not args.data:
        raise ValidationError("--data is required for this command")
    return read_dataset_csv(args.data, has_ids=args.ids)


def _load_scorer(args, dataset: Dataset):
    if not args.scorer:
        raise ValidationError("--scorer is required for this command")
    with open(args.scorer, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    return parse_scorer_config(doc, feature_names=dataset.feature_names)


def _resolve_k(text: str | None, n: int) -> int | None:
    if text is None:
        return None
    text = text.strip()
    if text.endswith("%"):
        try:
            pct = float(text[:-1])
        except ValueError:
            raise ValidationError(f"cannot parse --k value {text!r}") from None
        if not 0 < pct <= 100:
            raise ValidationError("--k percentage must be in (0, 100]")
        return max(1, math.ceil(n * pct / 100.0))
    try:
        return int(text)
    except ValueError:
        raise ValidationError(f"cannot parse --k value {text!r}") from None


def _make_qoi(args, n: int) -> QoIKind:
    if not args.qoi:
        raise ValidationError("--qoi is required for this command")
    k = _resolve_k(args.k, n)
    if args.qoi.endswith("topk"):
        if k is None:
            raise ValidationError("topk QoIs require --k")
        return QoIKind(args.qoi, k=k)
    if k is not None:
        raise ValidationError(f"--k is only valid for topk QoIs, not {args.qoi}")
    return QoIKind(args.qoi)


def _resolve_item(dataset: Dataset, selector: str) -> int:
    selector = selector.strip()
    if dataset.ids is not None and selector in dataset.ids:
        return dataset.ids.index(selector)
    try:
        index = int(selector)
    except ValueError:
        raise ValidationError(
            f"cannot resolve item {selector!r} by id or index"
        ) from None
    if not 0 <= index < dataset.n:
        raise ValidationError(f"item index {index} out of range 0..{dataset.n - 1}")
    return index


def _parse_samples(text: str) -> int | str:
    if text.strip().lower() == EXACT:
        return EXACT
    try:
        return int(text)
    except ValueError:
        raise ValidationError(f"--samples must be an integer or '{EXACT}'") from None


def _engine_options(args) -> EngineOptions:
    return EngineOptions(
        samples_m=_parse_samples(args.samples),
        max_coalition=args.max_coalition,
        sampling_mode=SAMPLING_CHOICES[args.sampling],
        seed=args.seed,
        parallelism=args.jobs,
    )


def _require_out(args) -> Path:
    if not args.out:
        raise ValidationError("--out is required for this command")
    return Path(args.out)


def _display_contributions(expls, display_sign: str):
    """Presentation sign flips rank-QoI contributions so helpful is positive."""
    if display_sign != "presentation":
        return list(expls)
    out = []
    for e in expls:
        if e.qoi.base_kind == "rank":
            out.append(
                ExplanationVector(
                    contributions=tuple(-c for c in e.contributions),
                    qoi=e.qoi,
                    subject=e.subject,
                    baseline=e.baseline,
                    reconstruction=e.baseline + math.fsum(-c for c in e.contributions),
                    options_fingerprint=e.options_fingerprint,
                    id=e.id,
                )
            )
        else:
            out.append(e)
    return out


def cmd_explain(args) -> int:
    dataset = _load_dataset(args)
    scorer = _load_scorer(args, dataset)
    qoi = _make_qoi(args, dataset.n)
    opts = _engine_options(args)
    out = _require_out(args)
    if qoi.is_pairwise:
        if not args.pair:
            raise ValidationError("pairwise QoIs need --pair 'PREFERRED,BASE'")
        parts = [p for p in args.pair.split(",") if p.strip()]
        if len(parts) != 2:
            raise ValidationError("--pair takes exactly two comma-separated items")
        u_index = _resolve_item(dataset, parts[0])
        v_index = _resolve_item(dataset, parts[1])
        expl = explain_pair(dataset, v_index, u_index, qoi, scorer, opts)
    else:
        if not args.item:
            raise ValidationError("per-item QoIs need --item")
        v_index = _resolve_item(dataset, args.item)
        expl = explain_item(dataset, v_index, qoi, scorer, opts)
    write_explanations([expl], out, dataset)
    if args.render:
        svg_path = out.with_suffix(".svg")
        write_waterfall_svg(
            expl, svg_path, dataset.feature_names, display_sign=args.display_sign
        )
        print(f"wrote {out} and {svg_path}")
    else:
        print(f"wrote {out}")
    return 0


def cmd_explain_all(args) -> int:
    dataset = _load_dataset(args)
    scorer = _load_scorer(args, dataset)
    qoi = _make_qoi(args, dataset.n)
    if qoi.is_pairwise:
        raise ValidationError("explain-all covers per-item QoIs; use explain --pair")
    opts = _engine_options(args)
    out = _require_out(args)
    expls = explain_all(dataset, qoi, scorer, opts)
    write_explanations(expls, out, dataset)
    print(f"wrote {out} ({len(expls)} explanations)")
    return 0


def cmd_aggregate(args) -> int:
    dataset = _load_dataset(args)
    scorer = _load_scorer(args, dataset)
    out = _require_out(args)
    if args.explanations:
        if len(args.explanations) != 1:
            raise ValidationError("aggregate takes exactly one --explanations document")
        doc = read_explanation_document(args.explanations[0])
        if doc.dataset != dataset_fingerprint(dataset):
            raise ValidationError("explanation document does not match --data")
        expls = list(doc.explanations)
        qoi = doc.qoi
    else:
        qoi = _make_qoi(args, dataset.n)
        expls = explain_all(dataset, qoi, scorer, _engine_options(args))
    if args.strata > dataset.n:
        raise ValidationError(f"--strata {args.strata} exceeds n={dataset.n}")
    ranking = rank_all(scorer, dataset)
    shown = _display_contributions(expls, args.display_sign)
    summaries = stratify_aggregate(shown, ranking, args.strata)
    write_strata_csv(summaries, out)
    plot_path = out.with_suffix(".plot.json")
    payload = {
        "qoi": {"kind": qoi.kind, "k": qoi.k},
        "n_strata": args.strata,
        "display_sign": args.display_sign,
        "feature_names": list(dataset.feature_names),
        "strata": [
            {
                "stratum": s.stratum,
                "feature": dataset.feature_names[s.feature],
                "count": s.count,
                "q1": s.q1,
                "median": s.median,
                "q3": s.q3,
                "whisker_lo": s.whisker_lo,
                "whisker_hi": s.whisker_hi,
            }
            for s in summaries
        ],
    }
    with open(plot_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out} and {plot_path}")
    return 0


def cmd_metrics(args) -> int:
    dataset = _load_dataset(args)
    scorer = _load_scorer(args, dataset)
    out = _require_out(args)
    if not args.explanations:
        raise ValidationError("metrics needs at least one --explanations document")
    docs = [read_explanation_document(p) for p in args.explanations]
    fingerprint = dataset_fingerprint(dataset)
    for path, doc in zip(args.explanations, docs):
        if doc.dataset != fingerprint:
            raise ValidationError(f"{path}: dataset fingerprint mismatch against --data")
    report: dict = {"documents": [str(p) for p in args.explanations]}
    report["method_fidelity"] = [
        method_fidelity(doc.explanations, dataset, doc.qoi, scorer) for doc in docs
    ]
    agreement = {}
    for kind in SIMILARITY_KINDS:
        matrix = []
        for a in docs:
            row = []
            for b in docs:
                try:
                    row.append(
                        method_agreement(a.explanations, b.explanations, kind)
                    )
                except ValidationError:
                    row.append(None)
            matrix.append(row)
        agreement[kind] = matrix
    report["method_agreement"] = agreement
    ranking = rank_all(scorer, dataset)
    nbr = NeighborSpec(kind=args.neighbor_kind, count=args.neighbor_count)
    scores = []
    scatter_paths = []
    for i, doc in enumerate(docs):
        subjects = sorted(
            e.subject for e in doc.explanations if not doc.qoi.is_pairwise
        )
        if doc.qoi.is_pairwise or subjects != list(range(dataset.n)):
            scores.append(None)
            continue
        score_value, triples = sensitivity(
            dataset, list(doc.explanations), nbr, args.similarity, ranking
        )
        scores.append(score_value)
        scatter = out.with_suffix(f".scatter{i}.csv")
        write_sensitivity_csv(triples, scatter)
        scatter_paths.append(scatter.name)
    report["sensitivity"] = {
        "kind": args.similarity,
        "neighbors": {"kind": nbr.kind, "count": nbr.count},
        "scores": scores,
        "scatter_csv": scatter_paths,
    }
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out}")
    return 0


def cmd_synth(args) -> int:
    out = _require_out(args)
    if bool(args.builtin) == bool(args.spec):
        raise ValidationError("synth needs exactly one of --builtin or --spec")
    if args.builtin:
        spec = builtin_spec(args.builtin, n=args.n, seed=args.seed)
    else:
        with open(args.spec, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
        spec = _spec_from_doc(doc, n_override=args.n, seed_override=args.seed)
    dataset = generate_synthetic(spec)
    write_dataset_csv(dataset, out)
    print(f"wrote {out} ({dataset.n} rows, {dataset.d} features)")
    return 0


def _spec_from_doc(doc, n_override=None, seed_override=None) -> SyntheticSpec:
    if not isinstance(doc, dict):
        raise ValidationError("synthetic spec must be a mapping")
    makers = {"uniform": uniform, "gaussian": gaussian, "bernoulli": bernoulli}
    features = []
    for f in doc.get("features", []):
        kind = f.get("kind")
        if kind not in makers:
            raise ValidationError(f"unknown feature kind {kind!r}")
        params = [v for k, v in f.items() if k != "kind"]
        features.append(makers[kind](*params))
    correlation = doc.get("correlation")
    return SyntheticSpec(
        n=n_override or int(doc.get("n", 2000)),
        features=tuple(features),
        correlation=tuple(tuple(r) for r in correlation) if correlation else None,
        seed=seed_override if seed_override is not None else int(doc.get("seed", 0)),
    )


def _parse_sweep(text: str) -> list[int | str]:
    values: list[int | str] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        values.append(EXACT if part.lower() == EXACT else int(part))
    if not values:
        raise ValidationError("empty sweep list")
    return values


def cmd_bench(args) -> int:
    dataset = _load_dataset(args)
    scorer = _load_scorer(args, dataset)
    qoi = _make_qoi(args, dataset.n)
    if qoi.is_pairwise:
        raise ValidationError("bench sweeps per-item QoIs")
    out = _require_out(args)
    m_values = _parse_sweep(args.m_sweep)
    for m in m_values:
        if m != EXACT and not 1 <= m <= dataset.n - 1:
            raise ValidationError(f"sweep sample count {m} out of range 1..{dataset.n - 1}")
    bounds: list[int | None] = [None]
    if args.coalition_sweep:
        bounds = []
        for b in _parse_sweep(args.coalition_sweep):
            if b == EXACT or not 0 <= b <= dataset.d - 1:
                raise ValidationError(
                    f"coalition bound {b} out of range 0..{dataset.d - 1}"
                )
            bounds.append(b)
    count = min(args.bench_items, dataset.n)
    items = sorted(set(np.linspace(0, dataset.n - 1, count).astype(int).tolist()))
    ranking = rank_all(scorer, dataset)

    def run(m, bound):
        opts = EngineOptions(
            samples_m=m,
            max_coalition=bound,
            sampling_mode=SAMPLING_CHOICES[args.sampling],
            seed=args.seed,
        )
        start = time.perf_counter()
        expls = [
            explain_item(dataset, v, qoi, scorer, opts, base_ranking=ranking)
            for v in items
        ]
        elapsed = (time.perf_counter() - start) / len(items)
        return expls, elapsed

    exact_expls, exact_time = run(EXACT, None)
    rows = []
    for bound in bounds:
        for m in m_values:
            if m == EXACT and bound is None:
                expls, elapsed = exact_expls, exact_time
            else:
                expls, elapsed = run(m, bound)
            fid = method_fidelity(expls, dataset, qoi, scorer)
            agreements = [
                method_agreement(expls, exact_expls, kind)
                for kind in SIMILARITY_KINDS
            ]
            rows.append(
                {
                    "qoi": qoi.label(),
                    "samples": m,
                    "max_coalition": "unbounded" if bound is None else bound,
                    "items": len(items),
                    "mean_time_per_item_s": elapsed,
                    "speedup_vs_exact": exact_time / elapsed if elapsed > 0 else float("inf"),
                    "fidelity": fid,
                    "agreement_kendall": agreements[0],
                    "agreement_jaccard_top2": agreements[1],
                    "agreement_euclid_unit": agreements[2],
                }
            )
    import csv as _csv

    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    print(f"wrote {out} ({len(rows)} configurations)")
    return 0


def cmd_render(args) -> int:
    if not args.explanations or len(args.explanations) != 1:
        raise ValidationError("render needs exactly one --explanations document")
    out = _require_out(args)
    doc = read_explanation_document(args.explanations[0])
    if not doc.explanations:
        raise ValidationError("document holds no explanations")
    target = None
    if args.item is None:
        if len(doc.explanations) > 1:
            raise ValidationError("--item is required for multi-item documents")
        target = doc.explanations[0]
    else:
        for e in doc.explanations:
            if doc.qoi.is_pairwise:
                continue
            if str(e.subject) == args.item.strip() or (
                e.id is not None and e.id == args.item.strip()
            ):
                target = e
                break
        if target is None:
            raise ValidationError(f"no explanation for item {args.item!r} in document")
    names = tuple(doc.dataset["feature_names"])
    write_waterfall_svg(target, out, names, display_sign=args.display_sign)
    print(f"wrote {out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="rankattr", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rankattr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--data", help="dataset CSV (header row first)")
        p.add_argument("--ids", action="store_true", help="first column holds item ids")
        p.add_argument("--scorer", help="scorer config (YAML/JSON)")
        p.add_argument("--qoi", choices=QOI_CHOICES)
        p.add_argument("--k", help="top-k size, absolute (10) or relative (10%%)")
        p.add_argument("--samples", default="exact", help="sample count m or 'exact'")
        p.add_argument("--max-coalition", type=int, default=None)
        p.add_argument("--sampling", choices=sorted(SAMPLING_CHOICES), default="row-joint")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", help="output path")
        p.add_argument(
            "--display-sign",
            choices=("efficiency", "presentation"),
            default="efficiency",
        )
        p.add_argument("--explanations", action="append", help="explanation document")

    p = sub.add_parser("explain", help="explain one item or one ordered pair")
    common(p)
    p.add_argument("--item", help="item selector (id or 0-based index)")
    p.add_argument("--pair", help="'PREFERRED,BASE' selectors for pairwise QoIs")
    p.add_argument("--render", choices=("waterfall",), help="also emit an SVG")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("explain-all", help="explain every item")
    common(p)
    p.set_defaults(func=cmd_explain_all)

    p = sub.add_parser("aggregate", help="per-stratum box statistics")
    common(p)
    p.add_argument("--strata", type=int, default=10)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("metrics", help="fidelity, agreement, sensitivity")
    common(p)
    p.add_argument("--similarity", choices=SIMILARITY_KINDS, default="kendall")
    p.add_argument(
        "--neighbor-kind", choices=("feature-knn", "rank-window"), default="feature-knn"
    )
    p.add_argument("--neighbor-count", type=int, default=10)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    common(p)
    p.add_argument("--builtin", help="named design (D1..D5, G3-indep, G3-neg, G3-mixed)")
    p.add_argument("--spec", help="YAML spec with n/features/correlation/seed")
    p.add_argument("--n", type=int, default=None, help="override the item count")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="sweep sample counts and coalition bounds")
    common(p)
    p.add_argument("--m-sweep", default="20,50,100,exact")
    p.add_argument("--coalition-sweep", default=None)
    p.add_argument("--bench-items", type=int, default=25)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="waterfall SVG from a saved document")
    common(p)
    p.add_argument("--item", help="item selector (index or id)")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (ComputationError, RankattrError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
