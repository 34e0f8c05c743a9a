"""Bundled example data."""

from __future__ import annotations

from importlib import resources

from .docio import read_dataset_csv
from .model import Dataset
from .scoring import ScoringFunction


def admissions_dataset() -> Dataset:
    """The eight-applicant college admissions table (gpa, sat, essay)."""
    path = resources.files("rankattr").joinpath("data/admissions.csv")
    with resources.as_file(path) as p:
        return read_dataset_csv(p, has_ids=True)


def admissions_scorer() -> ScoringFunction:
    """The weighted-sum scorer used with the admissions table."""
    return ScoringFunction(kind="linear", weights=(0.4, 0.4, 0.2))
