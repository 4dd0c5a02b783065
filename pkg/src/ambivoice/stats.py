"""Correlation ratio between embedding features and binary gender labels."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateInput, DimMismatch, InsufficientData, InvalidArgument
from .io import EmbeddingSet, Gender, parse_gender, write_csv
from .pca import PcaModel

__all__ = ["Basis", "EtaProfile", "correlation_ratio", "correlation_ratio_profile", "export_profile"]

# features whose variance falls below this fraction of the set's total variance count as constant
_DEGENERATE_REL = 1e-24


class Basis(str, enum.Enum):
    RAW = "raw"
    PCA = "pca"


@dataclass(frozen=True)
class EtaProfile:
    values: np.ndarray
    basis: Basis
    flags: np.ndarray

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.values))


def _gender_mask(labels):
    return np.array([parse_gender(g) is Gender.FEMALE for g in labels], dtype=bool)


def correlation_ratio(values, labels) -> float:
    """Between-gender variance of the category means over the total variance.

    Both variances are population (divide-by-n) variances, so a feature
    with no within-gender spread scores exactly 1. The quotient is what is
    classically written eta squared; it is returned as-is.
    """
    x = np.asarray(values, dtype=np.float64)
    female = _gender_mask(labels)
    if x.ndim != 1 or x.shape[0] != female.shape[0]:
        raise DimMismatch("values and labels must be equal-length 1D sequences")
    n = x.shape[0]
    if n < 2:
        raise InsufficientData("need at least 2 samples")
    n_f = int(female.sum())
    n_m = n - n_f
    if n_f == 0 or n_m == 0:
        raise InsufficientData("both genders must be present")
    mean = x.mean()
    total = np.mean((x - mean) ** 2)
    if total == 0 or np.ptp(x) == 0:
        raise DegenerateInput("feature has zero variance")
    between = (n_m / n) * (x[~female].mean() - mean) ** 2 + (n_f / n) * (x[female].mean() - mean) ** 2
    return float(min(1.0, max(0.0, between / total)))


def correlation_ratio_profile(eset: EmbeddingSet, basis=Basis.RAW, pca: PcaModel | None = None) -> EtaProfile:
    """Correlation ratio of every raw dimension, or every principal component."""
    basis = Basis(basis)
    if eset.count(Gender.MALE) == 0 or eset.count(Gender.FEMALE) == 0:
        raise InsufficientData("both genders must be present")
    X = eset.X
    if basis is Basis.PCA:
        if pca is None:
            raise InvalidArgument("a fitted PcaModel is required for the PCA basis")
        if pca.n_features_in_ != eset.dim:
            raise DimMismatch(f"model dimension {pca.n_features_in_} != set dimension {eset.dim}")
        X = pca.transform(X, n_components=eset.dim)
    labels = eset.genders
    var = X.var(axis=0)
    floor = _DEGENERATE_REL * max(float(var.sum()), np.finfo(float).tiny)
    values = np.zeros(X.shape[1])
    flags = np.zeros(X.shape[1], dtype=bool)
    for i in range(X.shape[1]):
        if var[i] <= floor:
            flags[i] = True
            continue
        try:
            values[i] = correlation_ratio(X[:, i], labels)
        except DegenerateInput:
            flags[i] = True
    if flags.any():
        warnings.warn(f"{int(flags.sum())} constant feature(s) assigned eta=0", RuntimeWarning, stacklevel=2)
    return EtaProfile(values=values, basis=basis, flags=flags)


def export_profile(profile: EtaProfile, path) -> None:
    write_csv(
        path,
        ("dim", "eta", "flag"),
        ((i, float(v), int(f)) for i, (v, f) in enumerate(zip(profile.values, profile.flags))),
    )
