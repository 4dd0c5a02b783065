"""Objective evaluation: d-vector distance analytics and a linear gender boundary."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .density import DensityField
from .exceptions import DimMismatch, EmptyInput, InsufficientData, InvalidArgument, MixedVoices, ZeroVector
from .io import EmbeddingSet, Gender, atomic_write_text, format_float, parse_gender
from .pca import PcaModel

__all__ = [
    "DistanceMetric",
    "DistanceSummary",
    "ConsistencyMatrix",
    "VoiceRow",
    "EvalReport",
    "FisherBoundary",
    "distance",
    "voice_dvector",
    "voice_dvectors",
    "pairwise_distance_distribution",
    "consistency_matrix",
    "fit_linear_classifier",
    "ambiguity_report",
    "pca2d_of_dvectors",
]


class DistanceMetric(str, enum.Enum):
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"


def distance(u, v, metric=DistanceMetric.COSINE) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimMismatch(f"vector shapes differ: {u.shape} vs {v.shape}")
    if DistanceMetric(metric) is DistanceMetric.EUCLIDEAN:
        return float(np.linalg.norm(u - v))
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroVector("cosine distance is undefined for a zero vector")
    return float(min(2.0, max(0.0, 1.0 - np.dot(u, v) / (nu * nv))))


def _distance_matrix(V, metric):
    V = np.asarray(V, dtype=np.float64)
    if DistanceMetric(metric) is DistanceMetric.EUCLIDEAN:
        diff = V[:, None, :] - V[None, :, :]
        M = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    else:
        norms = np.linalg.norm(V, axis=1)
        if np.any(norms == 0):
            raise ZeroVector("cosine distance is undefined for a zero vector")
        U = V / norms[:, None]
        M = np.clip(1.0 - U @ U.T, 0.0, 2.0)
    M = np.triu(M, 1)
    return M + M.T


def voice_dvector(utts) -> np.ndarray:
    """Mean d-vector of one voice's utterances."""
    utts = list(utts)
    if not utts:
        raise EmptyInput("no utterances given")
    voices = {u.voice_id for u in utts}
    if len(voices) > 1:
        raise MixedVoices(f"utterances span several voices: {sorted(voices)}")
    return np.mean(np.stack([u.dvector for u in utts]), axis=0)


def voice_dvectors(utts) -> dict[str, np.ndarray]:
    """Mean d-vector per ``voice_id``, keyed in sorted order."""
    groups: dict[str, list] = {}
    for u in utts:
        groups.setdefault(u.voice_id, []).append(u)
    return {vid: voice_dvector(groups[vid]) for vid in sorted(groups)}


@dataclass(frozen=True)
class DistanceSummary:
    group: str
    distances: list[float]
    mean: float
    std: float
    min: float
    max: float

    def to_dict(self):
        return {
            "group": self.group,
            "n_pairs": len(self.distances),
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "max": self.max,
            "distances": self.distances,
        }


def pairwise_distance_distribution(groups, metric=DistanceMetric.COSINE) -> dict[str, DistanceSummary]:
    """All unordered pair distances within each group, with summary statistics."""
    out = {}
    for name, vectors in groups.items():
        vecs = [np.asarray(v, dtype=np.float64) for v in vectors]
        if len(vecs) < 2:
            raise InsufficientData(f"group {name!r} needs at least 2 vectors, has {len(vecs)}")
        M = _distance_matrix(np.stack(vecs), metric)
        d = [float(M[i, j]) for i, j in combinations(range(len(vecs)), 2)]
        arr = np.asarray(d)
        out[name] = DistanceSummary(str(name), d, float(arr.mean()), float(arr.std()), float(arr.min()), float(arr.max()))
    return out


@dataclass(frozen=True, eq=False)
class ConsistencyMatrix:
    labels: list[tuple[str, str]]
    matrix: np.ndarray
    intra_mean: dict[str, float | None]
    inter_mean: dict[str, float | None]

    def to_dict(self):
        return {
            "labels": [f"{v}:{u}" for v, u in self.labels],
            "intra_mean": self.intra_mean,
            "inter_mean": self.inter_mean,
        }

    def to_csv(self, path):
        names = [f"{v}:{u}" for v, u in self.labels]
        lines = [",".join([""] + names)]
        for name, row in zip(names, self.matrix):
            lines.append(",".join([name] + [format_float(x) for x in row]))
        atomic_write_text(path, "\n".join(lines) + "\n")


def consistency_matrix(utts, metric=DistanceMetric.COSINE) -> ConsistencyMatrix:
    """Utterance-by-utterance distances ordered by (voice_id, utterance_id)."""
    utts = sorted(utts, key=lambda u: (u.voice_id, u.utterance_id))
    if len(utts) < 2:
        raise InsufficientData("need at least 2 utterances")
    voices = np.array([u.voice_id for u in utts], dtype=object)
    if len(set(voices)) < 2:
        raise InsufficientData("need at least 2 voices")
    M = _distance_matrix(np.stack([u.dvector for u in utts]), metric)
    intra, inter = {}, {}
    n = len(utts)
    off_diag = ~np.eye(n, dtype=bool)
    for vid in sorted(set(voices)):
        own = voices == vid
        block = M[np.ix_(own, own)][off_diag[np.ix_(own, own)]]
        cross = M[np.ix_(own, ~own)]
        intra[vid] = float(block.mean()) if block.size else None
        inter[vid] = float(cross.mean()) if cross.size else None
    return ConsistencyMatrix([(u.voice_id, u.utterance_id) for u in utts], M, intra, inter)


class FisherBoundary(ClassifierMixin, BaseEstimator):
    """Closed-form Fisher discriminant between male and female points.

    ``decision_function`` returns the signed margin ``w.p + b``; positive
    values fall on the female side. The boundary passes through the
    midpoint of the two class means. ``scale_`` is the pooled
    within-gender standard deviation of the training margins, so that
    ``|margin| / scale_`` reads as distance from the boundary in units of
    typical within-gender spread.

    Parameters
    ----------
    reg : float, default=1e-9
        Ridge added to the within-class scatter, relative to its trace.
    """

    def __init__(self, reg=1e-9):
        self.reg = reg

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        female = np.array([parse_gender(g) is Gender.FEMALE for g in y], dtype=bool)
        if female.shape[0] != X.shape[0]:
            raise InvalidArgument("X and y lengths differ")
        n_f = int(female.sum())
        n_m = female.shape[0] - n_f
        if n_m < 2 or n_f < 2:
            raise InsufficientData(f"need at least 2 speakers per gender, got {n_m} male / {n_f} female")
        mu_m = X[~female].mean(axis=0)
        mu_f = X[female].mean(axis=0)
        cm = X[~female] - mu_m
        cf = X[female] - mu_f
        s_w = cm.T @ cm + cf.T @ cf
        tr = np.trace(s_w)
        # all points coincide with their class mean: fall back to the mean-difference direction
        ridge = self.reg * tr if tr > 0 else 1.0
        w = np.linalg.solve(s_w + ridge * np.eye(X.shape[1]), mu_f - mu_m)
        if not np.any(w):
            raise InsufficientData("class means coincide; no discriminating direction")
        self.coef_ = w
        self.intercept_ = float(-w @ (mu_m + mu_f) / 2)
        margins = X @ w + self.intercept_
        pooled = np.sqrt(
            (np.sum((margins[~female] - margins[~female].mean()) ** 2)
             + np.sum((margins[female] - margins[female].mean()) ** 2)) / X.shape[0]
        )
        scale = pooled if pooled > 0 else float(np.std(margins))
        self.scale_ = float(scale) if scale > 0 else 1.0
        self.classes_ = np.array([Gender.FEMALE.value, Gender.MALE.value])
        self.n_features_in_ = X.shape[1]
        self.training_accuracy_ = float(np.mean((margins > 0) == female))
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DimMismatch(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X @ self.coef_ + self.intercept_

    def predict(self, X):
        return np.where(self.decision_function(X) > 0, Gender.FEMALE.value, Gender.MALE.value)

    def ambiguity_score(self, X):
        """``|margin| / scale_``; smaller is more ambiguous."""
        return np.abs(self.decision_function(X)) / self.scale_


def fit_linear_classifier(eset: EmbeddingSet, pca: PcaModel) -> FisherBoundary:
    return FisherBoundary().fit(pca.transform(eset.X, n_components=2), eset.genders)


@dataclass(frozen=True)
class VoiceRow:
    voice_id: int
    method: str
    x: float
    y: float
    pm: float
    pf: float
    pa: float
    margin: float
    ambiguity_score: float

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class EvalReport:
    rows: list[VoiceRow] = field(default_factory=list)
    distances: dict[str, DistanceSummary] = field(default_factory=dict)
    consistency: ConsistencyMatrix | None = None
    classifier: dict | None = None

    def to_dict(self):
        return {
            "voices": [r.to_dict() for r in self.rows],
            "classifier": self.classifier,
            "distances": {k: v.to_dict() for k, v in self.distances.items()},
            "consistency": None if self.consistency is None else self.consistency.to_dict(),
        }

    def save(self, path):
        atomic_write_text(path, json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n")


def ambiguity_report(voices, field: DensityField, clf: FisherBoundary, pca: PcaModel) -> list[VoiceRow]:
    """Location, densities and classifier margin of every voice in the principal plane."""
    voices = list(voices)
    if not voices:
        return []
    E = np.stack([v.embedding for v in voices])
    if E.shape[1] != pca.n_features_in_:
        raise DimMismatch(f"voice embeddings have dimension {E.shape[1]}, model expects {pca.n_features_in_}")
    pts = pca.transform(E, n_components=2)
    pm, pf, pa = field.densities_at(pts)
    margins = clf.decision_function(pts)
    scores = np.abs(margins) / clf.scale_
    return [
        VoiceRow(int(v.voice_id), v.method.value, float(p[0]), float(p[1]), float(a), float(b), float(c), float(m), float(s))
        for v, p, a, b, c, m, s in zip(voices, pts, pm, pf, pa, margins, scores)
    ]


def pca2d_of_dvectors(vectors) -> np.ndarray:
    """Deterministic 2D PCA layout of voice-level d-vectors for plotting."""
    V = np.asarray(vectors, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] < 3:
        raise InsufficientData("need at least 3 vectors")
    if V.shape[1] < 2:
        raise DimMismatch("vectors need at least 2 dimensions")
    return PcaModel(n_components=2).fit(V).transform(V)
