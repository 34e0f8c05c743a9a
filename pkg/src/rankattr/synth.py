"""Synthetic dataset generation: per-feature distributions, optional
correlated Gaussian blocks, and the named two- and three-feature designs."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .model import Dataset

DISTRIBUTIONS = ("uniform", "gaussian", "bernoulli")

DEFAULT_N = 2000


@dataclass(frozen=True)
class FeatureSpec:
    kind: str
    a: float = 0.0  # uniform lo / gaussian mean / bernoulli p
    b: float = 0.0  # uniform hi / gaussian sd

    def __post_init__(self):
        if self.kind not in DISTRIBUTIONS:
            raise ValidationError(f"feature kind must be one of {DISTRIBUTIONS}")
        if self.kind == "uniform" and not self.a < self.b:
            raise ValidationError("uniform needs lo < hi")
        if self.kind == "gaussian" and not self.b > 0:
            raise ValidationError("gaussian needs sd > 0")
        if self.kind == "bernoulli" and not 0.0 <= self.a <= 1.0:
            raise ValidationError("bernoulli needs 0 <= p <= 1")


def uniform(lo: float, hi: float) -> FeatureSpec:
    return FeatureSpec("uniform", lo, hi)


def gaussian(mean: float, sd: float) -> FeatureSpec:
    return FeatureSpec("gaussian", mean, sd)


def bernoulli(p: float) -> FeatureSpec:
    return FeatureSpec("bernoulli", p)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic dataset.

    ``correlation``, when present, applies to the gaussian features only (in
    their order of appearance) and must be symmetric with a unit diagonal.
    """

    n: int
    features: tuple[FeatureSpec, ...]
    correlation: tuple[tuple[float, ...], ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("n must be at least 1")
        if not self.features:
            raise ValidationError("at least one feature is required")
        object.__setattr__(self, "features", tuple(self.features))
        if self.correlation is not None:
            Rows = tuple(tuple(float(x) for x in row) for row in self.correlation)
            g = sum(1 for f in self.features if f.kind == "gaussian")
            if len(Rows) != g or any(len(row) != g for row in Rows):
                raise ValidationError(
                    f"correlation must be {g}x{g} to match the gaussian features"
                )
            M = np.asarray(Rows)
            if not np.allclose(M, M.T) or not np.allclose(np.diag(M), 1.0):
                raise ValidationError(
                    "correlation must be symmetric with a unit diagonal"
                )
            object.__setattr__(self, "correlation", Rows)


def _gaussian_factor(corr: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        eigval, eigvec = np.linalg.eigh(corr)
        if eigval.min() < -1e-10:
            raise ValidationError(
                "correlation matrix is not positive semi-definite"
            ) from None
        return eigvec * np.sqrt(np.clip(eigval, 0.0, None))


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Deterministically generate the dataset described by ``spec``.

    Correlated gaussians come from a covariance factorization applied to
    independent standard normals, then scaled and shifted per feature.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed)]))
    n, d = spec.n, len(spec.features)
    columns = np.empty((n, d))
    gaussians = [j for j, f in enumerate(spec.features) if f.kind == "gaussian"]
    for j, f in enumerate(spec.features):
        if f.kind == "uniform":
            columns[:, j] = rng.uniform(f.a, f.b, size=n)
        elif f.kind == "bernoulli":
            columns[:, j] = rng.binomial(1, f.a, size=n).astype(np.float64)
    if gaussians:
        g = len(gaussians)
        z = rng.standard_normal((n, g))
        if spec.correlation is not None:
            z = z @ _gaussian_factor(np.asarray(spec.correlation)).T
        for pos, j in enumerate(gaussians):
            f = spec.features[j]
            columns[:, j] = f.a + f.b * z[:, pos]
    names = tuple(f"x{j + 1}" for j in range(d))
    return Dataset(values=columns, feature_names=names)


_G3_SD = 0.1  # the three-feature designs state N(., .) shapes only; all use N(0.5, 0.1)

_BUILTINS: dict[str, SyntheticSpec] = {
    "D1": SyntheticSpec(DEFAULT_N, (gaussian(0.5, 0.1), bernoulli(0.5))),
    "D2": SyntheticSpec(DEFAULT_N, (uniform(0.0, 1.0), gaussian(0.5, 0.1))),
    "D3": SyntheticSpec(DEFAULT_N, (uniform(0.0, 1.0), uniform(0.0, 1.0))),
    "D4": SyntheticSpec(
        DEFAULT_N,
        (gaussian(0.5, 0.05), gaussian(0.75, 0.016)),
        correlation=((1.0, -0.8), (-0.8, 1.0)),
    ),
    "D5": SyntheticSpec(DEFAULT_N, (gaussian(0.5, 0.1), gaussian(0.5, 0.05))),
    "G3-indep": SyntheticSpec(
        DEFAULT_N,
        (gaussian(0.5, _G3_SD), gaussian(0.5, _G3_SD), gaussian(0.5, _G3_SD)),
    ),
    "G3-neg": SyntheticSpec(
        DEFAULT_N,
        (gaussian(0.5, _G3_SD), gaussian(0.5, _G3_SD), gaussian(0.5, _G3_SD)),
        correlation=((1.0, -0.8, 0.0), (-0.8, 1.0, 0.0), (0.0, 0.0, 1.0)),
    ),
    "G3-mixed": SyntheticSpec(
        DEFAULT_N,
        (gaussian(0.5, _G3_SD), gaussian(0.5, _G3_SD), gaussian(0.5, _G3_SD)),
        correlation=((1.0, -0.8, 0.6), (-0.8, 1.0, -0.2), (0.6, -0.2, 1.0)),
    ),
}


def builtin_names() -> tuple[str, ...]:
    return tuple(_BUILTINS)


def builtin_spec(name: str, *, n: int | None = None, seed: int | None = None) -> SyntheticSpec:
    """The named dataset design, optionally resized or reseeded."""
    try:
        spec = _BUILTINS[name]
    except KeyError:
        raise ValidationError(
            f"unknown builtin dataset {name!r}; expected one of {sorted(_BUILTINS)}"
        ) from None
    if n is not None:
        spec = replace(spec, n=n)
    if seed is not None:
        spec = replace(spec, seed=seed)
    return spec
