"""Exact PCA with a full orthonormal basis and truncated (zero-fill) inverse."""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DimMismatch, InsufficientData, ParseError
from .io import EmbeddingSet, atomic_write_text

__all__ = [
    "PcaModel",
    "fit_pca",
    "project",
    "inverse_full",
    "inverse_truncated",
    "save_pca",
    "load_pca",
]


def _apply_sign_convention(components):
    # largest-magnitude entry of every row made positive; argmax picks the lowest index on ties
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


class PcaModel(TransformerMixin, BaseEstimator):
    """Principal component analysis keeping all ``D`` directions.

    Unlike :class:`sklearn.decomposition.PCA`, the fitted basis is always a
    complete ``D x D`` orthonormal matrix (null-space directions are kept
    with zero variance), and every row is sign-normalized so that its
    largest-magnitude entry is positive.

    Parameters
    ----------
    n_components : int, default=2
        Number of leading coordinates returned by :meth:`transform`.

    Attributes
    ----------
    mean_ : ndarray of shape (D,)
    components_ : ndarray of shape (D, D)
        Rows are principal directions, by descending explained variance.
    explained_variance_ : ndarray of shape (D,)
        Population (divide-by-n) variances along each direction.
    """

    def __init__(self, n_components=2):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        n, d = X.shape
        if n < 2:
            raise InsufficientData(f"PCA needs at least 2 samples, got {n}")
        mean = X.mean(axis=0)
        centered = X - mean
        _, s, vt = np.linalg.svd(centered, full_matrices=True)
        var = np.zeros(d)
        var[: s.shape[0]] = s**2 / n
        self.mean_ = mean
        self.components_ = _apply_sign_convention(vt)
        self.explained_variance_ = var
        self.n_features_in_ = d
        return self

    def _check_width(self, X, names=("embedding",)):
        if X.shape[-1] != self.n_features_in_:
            raise DimMismatch(f"{names[0]} has dimension {X.shape[-1]}, model expects {self.n_features_in_}")

    def transform(self, X, n_components=None):
        check_is_fitted(self)
        X = check_array(X, dtype=np.float64)
        self._check_width(X)
        k = self.n_components if n_components is None else n_components
        if not 1 <= k <= self.n_features_in_:
            raise DimMismatch(f"k must lie in [1, {self.n_features_in_}], got {k}")
        return (X - self.mean_) @ self.components_[:k].T

    def inverse_transform(self, Z):
        """Map principal coordinates back, zero-filling any missing trailing ones."""
        check_is_fitted(self)
        Z = check_array(Z, dtype=np.float64)
        k = Z.shape[1]
        if not 1 <= k <= self.n_features_in_:
            raise DimMismatch(f"coordinates have width {k}, model dimension is {self.n_features_in_}")
        return self.mean_ + Z @ self.components_[:k]

    def to_dict(self):
        check_is_fitted(self)
        return {
            "mean": self.mean_.tolist(),
            "components": self.components_.tolist(),
            "explained_variance": self.explained_variance_.tolist(),
        }

    @classmethod
    def from_dict(cls, data, n_components=2):
        model = cls(n_components=n_components)
        try:
            model.mean_ = np.asarray(data["mean"], dtype=np.float64)
            model.components_ = np.asarray(data["components"], dtype=np.float64)
            model.explained_variance_ = np.asarray(data["explained_variance"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed PCA model: {exc}") from None
        d = model.mean_.shape[0]
        if model.components_.shape != (d, d) or model.explained_variance_.shape != (d,):
            raise DimMismatch("PCA model arrays have inconsistent shapes")
        model.n_features_in_ = d
        return model


def fit_pca(eset: EmbeddingSet) -> PcaModel:
    if len(eset) < 2:
        raise InsufficientData(f"PCA needs at least 2 records, got {len(eset)}")
    return PcaModel().fit(eset.X)


def project(model: PcaModel, embedding, k: int) -> np.ndarray:
    """Leading ``k`` principal coordinates of a single embedding."""
    x = np.asarray(embedding, dtype=np.float64)
    if x.ndim != 1:
        raise DimMismatch("project expects a single vector")
    return model.transform(x[None, :], n_components=k)[0]


def inverse_full(model: PcaModel, coords) -> np.ndarray:
    z = np.asarray(coords, dtype=np.float64)
    if z.shape != (model.n_features_in_,):
        raise DimMismatch(f"expected {model.n_features_in_} coordinates, got shape {z.shape}")
    return model.inverse_transform(z[None, :])[0]


def inverse_truncated(model: PcaModel, coords2d) -> np.ndarray:
    """Reconstruct from the first two coordinates; all others are zero."""
    z = np.asarray(coords2d, dtype=np.float64)
    if z.shape != (2,):
        raise DimMismatch(f"expected a 2D point, got shape {z.shape}")
    if model.n_features_in_ < 2:
        raise DimMismatch("model dimension must be at least 2")
    full = np.zeros(model.n_features_in_)
    full[:2] = z
    return inverse_full(model, full)


def save_pca(model: PcaModel, path) -> None:
    atomic_write_text(path, json.dumps(model.to_dict(), separators=(",", ":")) + "\n")


def load_pca(path) -> PcaModel:
    with open(path, encoding="utf-8") as fh:
        return PcaModel.from_dict(json.load(fh))
