"""Novel speaker embeddings: the mean baseline, zero-fill inverse PCA, and
inverse-distance interpolation between the nearest male and female speakers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .density import KdeConfig, build_field
from .exceptions import InsufficientData, InvalidArgument, UnknownIndex
from .io import EmbeddingSet, Gender, GeneratedVoice, Method
from .pca import PcaModel, fit_pca, inverse_full, inverse_truncated, project
from .ridge import RidgePath, extract_ridge

__all__ = [
    "DEFAULT_INDICES",
    "NEIGHBOR_OFFSET",
    "baseline_mean",
    "gen_zero_fill",
    "gen_neighbor_interp",
    "interpolate_pair",
    "nearest_speaker",
    "generate_suite",
    "AmbiguousVoiceGenerator",
]

DEFAULT_INDICES = (1, 3, 5, 7, 9)
NEIGHBOR_OFFSET = 10


def baseline_mean(eset: EmbeddingSet) -> GeneratedVoice:
    if len(eset) == 0:
        raise InsufficientData("cannot average an empty set")
    return GeneratedVoice(0, Method.BASELINE, None, eset.X.mean(axis=0))


def gen_zero_fill(pca: PcaModel, sample) -> GeneratedVoice:
    index, point = sample
    return GeneratedVoice(int(index), Method.ZERO_FILL, tuple(point), inverse_truncated(pca, point))


def interpolate_pair(e_m, e_f, d_m: float, d_f: float) -> np.ndarray:
    """Inverse-distance weighted average of two coordinate vectors.

    A zero distance returns that side's vector unchanged (the limit of the
    weighting); the male side wins if both distances are zero.
    """
    e_m = np.asarray(e_m, dtype=np.float64)
    e_f = np.asarray(e_f, dtype=np.float64)
    if d_m < 0 or d_f < 0:
        raise InvalidArgument("distances must be nonnegative")
    if d_m == 0:
        return e_m.copy()
    if d_f == 0:
        return e_f.copy()
    w_m, w_f = 1.0 / d_m, 1.0 / d_f
    return (w_m * e_m + w_f * e_f) / (w_m + w_f)


def nearest_speaker(points2d, speaker_ids, point) -> tuple[int, float]:
    """Row index and Euclidean distance of the closest point; ties go to the smallest id."""
    diff = np.asarray(points2d, dtype=np.float64) - np.asarray(point, dtype=np.float64)
    sq = np.einsum("ij,ij->i", diff, diff)
    best = np.flatnonzero(sq == sq.min())
    row = min(best, key=lambda r: speaker_ids[r])
    return int(row), float(np.sqrt(sq[row]))


class _Neighbors:
    """Per-gender 2D projections and full coordinates, computed once per set."""

    def __init__(self, pca, eset):
        if eset.count(Gender.MALE) == 0 or eset.count(Gender.FEMALE) == 0:
            raise InsufficientData("neighbor interpolation needs at least one male and one female speaker")
        coords = pca.transform(eset.X, n_components=pca.n_features_in_)
        female = eset.genders == Gender.FEMALE.value
        ids = np.array(eset.speaker_ids, dtype=object)
        self.pca = pca
        self.male = (coords[~female], list(ids[~female]))
        self.female = (coords[female], list(ids[female]))

    def voice(self, sample) -> GeneratedVoice:
        index, point = sample
        m_coords, m_ids = self.male
        f_coords, f_ids = self.female
        rm, d_m = nearest_speaker(m_coords[:, :2], m_ids, point)
        rf, d_f = nearest_speaker(f_coords[:, :2], f_ids, point)
        e_a = interpolate_pair(m_coords[rm], f_coords[rf], d_m, d_f)
        extras = {"male": m_ids[rm], "female": f_ids[rf], "d_m": d_m, "d_f": d_f, "coords": e_a}
        return GeneratedVoice(
            int(index) + NEIGHBOR_OFFSET,
            Method.NEIGHBOR_INTERP,
            tuple(point),
            inverse_full(self.pca, e_a),
            extras=extras,
        )


def gen_neighbor_interp(pca: PcaModel, eset: EmbeddingSet, sample) -> GeneratedVoice:
    """Blend the full PCA coordinates of the speakers of each gender nearest to
    ``sample``'s point in the principal plane, then map back to embedding space."""
    return _Neighbors(pca, eset).voice(sample)


def _check_indices(indices):
    indices = [int(i) for i in indices]
    if len(set(indices)) != len(indices):
        raise InvalidArgument(f"duplicate sample indices in {indices}")
    return indices


def generate_suite(eset: EmbeddingSet, pca: PcaModel, path: RidgePath, indices=DEFAULT_INDICES) -> list[GeneratedVoice]:
    """Baseline voice 0, one zero-fill voice per index, one interpolated voice per index + 10."""
    indices = _check_indices(indices)
    by_index = dict(path.samples)
    missing = [i for i in indices if i not in by_index]
    if missing:
        raise UnknownIndex(f"path has no samples with index {missing}")
    voices = [baseline_mean(eset)]
    if indices:
        neighbors = _Neighbors(pca, eset)
        for i in indices:
            voices.append(gen_zero_fill(pca, (i, by_index[i])))
            voices.append(neighbors.voice((i, by_index[i])))
    return sorted(voices, key=lambda v: v.voice_id)


class AmbiguousVoiceGenerator(TransformerMixin, BaseEstimator):
    """End-to-end generator of gender-ambiguous speaker embeddings.

    ``fit`` learns the principal plane, the per-gender densities over it,
    the ambiguity ridge and its equidistant samples; ``generate`` returns
    the voice suite. ``transform`` projects embeddings onto the principal
    plane.

    Parameters
    ----------
    bandwidth : float, default=0.04
    metric : {"euclidean", "haversine"}, default="euclidean"
    coord_scale : float, default=1.0
    nx, ny : int, default=256
        Grid resolution of the density field.
    margin : float, default=0.10
        Fraction of the projected data span added on every side of the grid.
    tau : float, default=0.05
        Ridge stops where ambiguity falls below this fraction of its peak.
    smooth_window : int, default=5
    n_samples : int, default=10
    indices : tuple of int, default=(1, 3, 5, 7, 9)
        Sample indices turned into voices.
    """

    def __init__(
        self,
        bandwidth=0.04,
        metric="euclidean",
        coord_scale=1.0,
        nx=256,
        ny=256,
        margin=0.10,
        tau=0.05,
        smooth_window=5,
        n_samples=10,
        indices=DEFAULT_INDICES,
    ):
        self.bandwidth = bandwidth
        self.metric = metric
        self.coord_scale = coord_scale
        self.nx = nx
        self.ny = ny
        self.margin = margin
        self.tau = tau
        self.smooth_window = smooth_window
        self.n_samples = n_samples
        self.indices = indices

    def fit(self, X, y=None, speaker_ids=None):
        """Fit on an :class:`EmbeddingSet`, or on an array ``X`` with gender labels ``y``."""
        if isinstance(X, EmbeddingSet):
            eset = X
        else:
            if y is None:
                raise InvalidArgument("gender labels y are required with array input")
            eset = EmbeddingSet.from_arrays(X, y, speaker_ids=speaker_ids)
        config = KdeConfig(self.bandwidth, self.metric, self.coord_scale)
        self.embedding_set_ = eset
        self.pca_ = fit_pca(eset)
        self.field_ = build_field(eset, self.pca_, config, (self.nx, self.ny, self.margin))
        self.path_ = extract_ridge(self.field_, self.tau, self.smooth_window).with_samples(self.n_samples)
        self.samples_ = self.path_.samples
        self.n_features_in_ = eset.dim
        return self

    def generate(self):
        check_is_fitted(self)
        return generate_suite(self.embedding_set_, self.pca_, self.path_, self.indices)

    def fit_generate(self, X, y=None, speaker_ids=None):
        return self.fit(X, y, speaker_ids=speaker_ids).generate()

    def transform(self, X):
        check_is_fitted(self)
        if isinstance(X, EmbeddingSet):
            X = X.X
        return self.pca_.transform(X, n_components=2)

    def project(self, embedding):
        check_is_fitted(self)
        return project(self.pca_, embedding, 2)
