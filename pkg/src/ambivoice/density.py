"""Per-gender Gaussian KDE in the principal plane and the ambiguity pseudo-density."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DomainError, EmptyInput, InsufficientData, InvalidArgument, NegativeDensity
from .io import EmbeddingSet, Gender, parse_gender
from .pca import PcaModel

__all__ = [
    "Metric",
    "KdeConfig",
    "DensityField",
    "GenderDensity",
    "pairwise_distance",
    "kde_eval",
    "kde_at",
    "ambiguity",
    "ambiguity_array",
    "build_field",
]

# keeps each (queries x points) distance block near 16 MB
_BLOCK = 2_000_000


class Metric(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    HAVERSINE = "haversine"


@dataclass(frozen=True)
class KdeConfig:
    bandwidth: float = 0.04
    metric: Metric = Metric.EUCLIDEAN
    coord_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise InvalidArgument(f"bandwidth must be positive, got {self.bandwidth}")
        if not (self.coord_scale > 0 and math.isfinite(self.coord_scale)):
            raise InvalidArgument(f"coord_scale must be positive, got {self.coord_scale}")


def _check_domain(scaled):
    lat, lon = scaled[:, 0], scaled[:, 1]
    if np.any(np.abs(lat) > math.pi / 2) or np.any(np.abs(lon) > math.pi):
        raise DomainError(
            "haversine coordinates must lie in [-pi/2, pi/2] x [-pi, pi] after coord_scale; "
            "lower coord_scale or use the euclidean metric"
        )


def pairwise_distance(a, b, config: KdeConfig) -> np.ndarray:
    """Distances between rows of ``a`` (m, 2) and ``b`` (n, 2) as an (m, n) array."""
    a = np.asarray(a, dtype=np.float64) * config.coord_scale
    b = np.asarray(b, dtype=np.float64) * config.coord_scale
    if config.metric is Metric.EUCLIDEAN:
        diff = a[:, None, :] - b[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    _check_domain(a)
    _check_domain(b)
    lat1, lon1 = a[:, None, 0], a[:, None, 1]
    lat2, lon2 = b[None, :, 0], b[None, :, 1]
    h = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2.0 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def kde_eval(points, config: KdeConfig, queries) -> np.ndarray:
    """Gaussian KDE of ``points`` evaluated at every row of ``queries``.

    The planar normalization ``1 / (n 2 pi h^2)`` is used for both metrics,
    so haversine values are a pseudo-density.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    q = np.asarray(queries, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise EmptyInput("KDE needs at least one point")
    if config.metric is Metric.HAVERSINE:
        _check_domain(pts * config.coord_scale)
        _check_domain(q * config.coord_scale)
    h2 = config.bandwidth**2
    norm = 1.0 / (pts.shape[0] * 2.0 * math.pi * h2)
    out = np.empty(q.shape[0])
    step = max(1, _BLOCK // pts.shape[0])
    for start in range(0, q.shape[0], step):
        d = pairwise_distance(q[start : start + step], pts, config)
        out[start : start + step] = np.exp(-(d**2) / (2.0 * h2)).sum(axis=1)
    return out * norm


def kde_at(points, config: KdeConfig, query) -> float:
    return float(kde_eval(points, config, np.asarray(query, dtype=np.float64)[None, :])[0])


def ambiguity(pm: float, pf: float) -> float:
    """``min(pm, pf)**2 / max(pm, pf)``; zero when both densities vanish."""
    if pm < 0 or pf < 0:
        raise NegativeDensity(f"densities must be nonnegative, got ({pm}, {pf})")
    hi = max(pm, pf)
    if hi == 0:
        return 0.0
    lo = min(pm, pf)
    return lo * lo / hi


def ambiguity_array(pm, pf) -> np.ndarray:
    pm = np.asarray(pm, dtype=np.float64)
    pf = np.asarray(pf, dtype=np.float64)
    if np.any(pm < 0) or np.any(pf < 0):
        raise NegativeDensity("densities must be nonnegative")
    hi = np.maximum(pm, pf)
    lo = np.minimum(pm, pf)
    out = np.zeros(np.broadcast(pm, pf).shape)
    np.divide(lo * lo, hi, out=out, where=hi > 0)
    return out


class GenderDensity(BaseEstimator):
    """Male and female KDEs over 2D points plus their ambiguity combination.

    Parameters
    ----------
    bandwidth : float, default=0.04
    metric : {"euclidean", "haversine"}, default="euclidean"
    coord_scale : float, default=1.0
        Multiplier applied to coordinates before any distance is taken.
    """

    def __init__(self, bandwidth=0.04, metric="euclidean", coord_scale=1.0):
        self.bandwidth = bandwidth
        self.metric = metric
        self.coord_scale = coord_scale

    @property
    def config(self) -> KdeConfig:
        return KdeConfig(self.bandwidth, self.metric, self.coord_scale)

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 2:
            raise InvalidArgument("GenderDensity works on 2D points")
        female = np.array([parse_gender(g) is Gender.FEMALE for g in y], dtype=bool)
        if female.shape[0] != X.shape[0]:
            raise InvalidArgument("X and y lengths differ")
        n_f = int(female.sum())
        n_m = female.shape[0] - n_f
        if n_m < 2 or n_f < 2:
            raise InsufficientData(f"need at least 2 speakers per gender, got {n_m} male / {n_f} female")
        cfg = self.config
        if cfg.metric is Metric.HAVERSINE:
            _check_domain(X * cfg.coord_scale)
        self.male_points_ = X[~female]
        self.female_points_ = X[female]
        return self

    def evaluate(self, X):
        """Return ``(pm, pf, pa)`` arrays at the rows of ``X``."""
        check_is_fitted(self)
        X = check_array(X, dtype=np.float64)
        cfg = self.config
        pm = kde_eval(self.male_points_, cfg, X)
        pf = kde_eval(self.female_points_, cfg, X)
        return pm, pf, ambiguity_array(pm, pf)

    def score_samples(self, X):
        """Log ambiguity density at the rows of ``X``."""
        with np.errstate(divide="ignore"):
            return np.log(self.evaluate(X)[2])


@dataclass(frozen=True, eq=False)
class DensityField:
    """Gridded densities; arrays are indexed ``[i, j]`` for node ``(xs[i], ys[j])``."""

    xs: np.ndarray
    ys: np.ndarray
    pm: np.ndarray
    pf: np.ndarray
    pa: np.ndarray
    config: KdeConfig | None
    male_points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    female_points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    @property
    def nx(self) -> int:
        return self.xs.shape[0]

    @property
    def ny(self) -> int:
        return self.ys.shape[0]

    @property
    def x_min(self) -> float:
        return float(self.xs[0])

    @property
    def x_max(self) -> float:
        return float(self.xs[-1])

    @property
    def y_min(self) -> float:
        return float(self.ys[0])

    @property
    def y_max(self) -> float:
        return float(self.ys[-1])

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    def node(self, i: int, j: int) -> tuple[float, float]:
        return float(self.xs[i]), float(self.ys[j])

    def densities_at(self, points):
        """Exact KDE values ``(pm, pf, pa)`` at arbitrary points (not interpolated)."""
        if self.config is None or self.male_points.shape[0] == 0 or self.female_points.shape[0] == 0:
            raise InvalidArgument("field carries no source points; rebuild it with build_field")
        pm = kde_eval(self.male_points, self.config, points)
        pf = kde_eval(self.female_points, self.config, points)
        return pm, pf, ambiguity_array(pm, pf)


def _axis(lo, hi, margin, n):
    span = hi - lo
    if span == 0:
        span = 1.0
    return np.linspace(lo - margin * span, hi + margin * span, n)


def build_field(eset: EmbeddingSet, pca: PcaModel, config: KdeConfig | None = None, grid=(256, 256, 0.10)) -> DensityField:
    """Project every speaker to the principal plane and grid ``pm``, ``pf`` and ``pa``."""
    config = config or KdeConfig()
    nx, ny, margin = grid
    if nx < 2 or ny < 2:
        raise InvalidArgument(f"grid needs at least 2x2 nodes, got {nx}x{ny}")
    if margin < 0:
        raise InvalidArgument("margin must be nonnegative")
    n_m, n_f = eset.count(Gender.MALE), eset.count(Gender.FEMALE)
    if n_m < 2 or n_f < 2:
        raise InsufficientData(f"need at least 2 speakers per gender, got {n_m} male / {n_f} female")
    pts = pca.transform(eset.X, n_components=2)
    est = GenderDensity(config.bandwidth, config.metric, config.coord_scale).fit(pts, eset.genders)
    xs = _axis(pts[:, 0].min(), pts[:, 0].max(), margin, nx)
    ys = _axis(pts[:, 1].min(), pts[:, 1].max(), margin, ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pm, pf, pa = est.evaluate(np.column_stack([gx.ravel(), gy.ravel()]))
    return DensityField(
        xs=xs,
        ys=ys,
        pm=pm.reshape(nx, ny),
        pf=pf.reshape(nx, ny),
        pa=pa.reshape(nx, ny),
        config=config,
        male_points=est.male_points_,
        female_points=est.female_points_,
    )
