"""On-disk formats: dataset CSV, explanation documents, and report CSVs.

All writers are deterministic: identical inputs produce identical bytes.
Floats are serialized with their shortest round-trip representation, so
finite doubles survive a write/read cycle bit-for-bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import SchemaError, ValidationError
from .metrics import SensitivityTriple
from .model import Dataset, ExplanationVector, QoIKind, validate_dataset
from .strata import StratumSummary

SCHEMA_VERSION = 1


def read_dataset_csv(path: str | Path, has_ids: bool = False) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return validate_dataset(rows, has_ids=has_ids)


def write_dataset_csv(dataset: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if dataset.ids is not None:
            writer.writerow(["id", *dataset.feature_names])
            for i in range(dataset.n):
                writer.writerow([dataset.ids[i], *(repr(float(v)) for v in dataset.values[i])])
        else:
            writer.writerow(dataset.feature_names)
            for i in range(dataset.n):
                writer.writerow([repr(float(v)) for v in dataset.values[i]])


def dataset_fingerprint(dataset: Dataset) -> dict:
    digest = hashlib.sha256()
    digest.update("\x1f".join(dataset.feature_names).encode("utf-8"))
    if dataset.ids is not None:
        digest.update("\x1f".join(dataset.ids).encode("utf-8"))
    digest.update(np.ascontiguousarray(dataset.values).tobytes())
    return {
        "n": dataset.n,
        "d": dataset.d,
        "feature_names": list(dataset.feature_names),
        "content_hash": digest.hexdigest(),
    }


@dataclass(frozen=True)
class ExplanationDocument:
    """A batch of explanations plus the metadata needed to interpret them."""

    explanations: tuple[ExplanationVector, ...]
    dataset: dict
    qoi: QoIKind
    options_fingerprint: str

    def matches(self, dataset: Dataset) -> bool:
        return self.dataset == dataset_fingerprint(dataset)


def _document_payload(
    expls: Sequence[ExplanationVector], dataset: Dataset
) -> dict:
    if not all(isinstance(e, ExplanationVector) for e in expls):
        raise ValidationError("write_explanations expects ExplanationVector items")
    qois = {e.qoi for e in expls}
    prints = {e.options_fingerprint for e in expls}
    if len(qois) > 1 or len(prints) > 1:
        raise ValidationError("one document holds one QoI and one engine setup")
    qoi = next(iter(qois)) if qois else None
    items = []
    for e in expls:
        record = {
            "subject": list(e.subject) if e.qoi.is_pairwise else e.subject,
            "contributions": list(e.contributions),
            "baseline": e.baseline,
            "reconstruction": e.reconstruction,
        }
        if e.id is not None:
            record["id"] = e.id
        items.append(record)
    return {
        "schema_version": SCHEMA_VERSION,
        "dataset": dataset_fingerprint(dataset),
        "qoi": None if qoi is None else {"kind": qoi.kind, "k": qoi.k},
        "options_fingerprint": next(iter(prints)) if prints else "",
        "items": items,
    }


def write_explanations(
    expls: Sequence[ExplanationVector], path: str | Path, dataset: Dataset
) -> None:
    payload = _document_payload(expls, dataset)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_explanation_document(path: str | Path) -> ExplanationDocument:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not a JSON document ({exc})") from None
    for field in ("schema_version", "dataset", "qoi", "options_fingerprint", "items"):
        if field not in payload:
            raise SchemaError(f"{path}: missing field {field!r}")
    if payload["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: schema version {payload['schema_version']} "
            f"not supported (expected {SCHEMA_VERSION})"
        )
    if payload["qoi"] is None:
        qoi = None
    else:
        qoi = QoIKind(kind=payload["qoi"]["kind"], k=payload["qoi"].get("k"))
    expls = []
    for record in payload["items"]:
        subject = record["subject"]
        expls.append(
            ExplanationVector(
                contributions=tuple(record["contributions"]),
                qoi=qoi,
                subject=tuple(subject) if isinstance(subject, list) else subject,
                baseline=record["baseline"],
                reconstruction=record["reconstruction"],
                options_fingerprint=payload["options_fingerprint"],
                id=record.get("id"),
            )
        )
    return ExplanationDocument(
        explanations=tuple(expls),
        dataset=payload["dataset"],
        qoi=qoi,
        options_fingerprint=payload["options_fingerprint"],
    )


def read_explanations(path: str | Path) -> list[ExplanationVector]:
    return list(read_explanation_document(path).explanations)


def write_strata_csv(summaries: Sequence[StratumSummary], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["stratum", "feature", "count", "q1", "median", "q3", "whisker_lo", "whisker_hi"]
        )
        for s in summaries:
            writer.writerow(
                [
                    s.stratum,
                    s.feature,
                    s.count,
                    repr(s.q1),
                    repr(s.median),
                    repr(s.q3),
                    repr(s.whisker_lo),
                    repr(s.whisker_hi),
                ]
            )


def write_sensitivity_csv(
    triples: Sequence[SensitivityTriple], path: str | Path
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["reference", "neighbor", "expl_dist", "rank_dist", "feat_dist"])
        for t in triples:
            writer.writerow(
                [
                    t.reference,
                    t.neighbor,
                    repr(t.explanation_distance),
                    t.rank_distance,
                    repr(t.feature_distance),
                ]
            )
