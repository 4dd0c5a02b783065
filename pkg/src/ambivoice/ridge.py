"""Ridge tracing along the local maxima of the ambiguity field, and arc-length sampling."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .density import DensityField
from .exceptions import InvalidArgument, NoRidge
from .io import write_csv

__all__ = ["RidgeStep", "RidgePath", "extract_ridge", "sample_equidistant", "export_path", "export_samples"]

# E, N, W, S, NE, NW, SW, SE; ties resolve to the earliest entry
NEIGHBORS = ((1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1))

# a step is admissible when its angle to the current heading is below 60 degrees
_MIN_COS = 0.5
# nodes used to estimate the running heading
_HEADING_SPAN = 4


@dataclass(frozen=True)
class RidgeStep:
    src: tuple[int, int]
    dst: tuple[int, int]
    value: float
    candidates: tuple[tuple[tuple[int, int], float], ...]


@dataclass(frozen=True, eq=False)
class RidgePath:
    points: np.ndarray
    arclen: np.ndarray
    nodes: tuple[tuple[int, int], ...] = ()
    steps: tuple[RidgeStep, ...] = ()
    samples: list = field(default_factory=list)

    @property
    def length(self) -> float:
        return float(self.arclen[-1])

    def with_samples(self, n: int = 10) -> "RidgePath":
        return replace(self, samples=sample_equidistant(self, n))


def _ridge_direction(pa, i, j):
    """Unit vector of least curvature at node (i, j), in index space."""
    p = np.pad(pa, 1, mode="edge")
    c = (i + 1, j + 1)
    v = p[c]
    hxx = p[c[0] + 1, c[1]] - 2 * v + p[c[0] - 1, c[1]]
    hyy = p[c[0], c[1] + 1] - 2 * v + p[c[0], c[1] - 1]
    hxy = (p[c[0] + 1, c[1] + 1] - p[c[0] + 1, c[1] - 1] - p[c[0] - 1, c[1] + 1] + p[c[0] - 1, c[1] - 1]) / 4
    w, vecs = np.linalg.eigh(np.array([[hxx, hxy], [hxy, hyy]]))
    d = vecs[:, int(np.argmax(w))]
    if abs(d[1]) > abs(d[0]) or (abs(d[1]) == abs(d[0]) and d[1] != 0):
        d = d if d[1] > 0 else -d
    else:
        d = d if d[0] > 0 else -d
    return d / np.linalg.norm(d)


def _walk(pa, start, heading, visited, floor):
    nx, ny = pa.shape
    nodes = [start]
    steps = []
    while True:
        ci, cj = nodes[-1]
        if len(nodes) > _HEADING_SPAN:
            back = nodes[-1 - _HEADING_SPAN]
            h = np.array([ci - back[0], cj - back[1]], dtype=float)
            heading = h / np.linalg.norm(h)
        candidates = []
        for di, dj in NEIGHBORS:
            ni, nj = ci + di, cj + dj
            if not (0 <= ni < nx and 0 <= nj < ny) or (ni, nj) in visited:
                continue
            if (di * heading[0] + dj * heading[1]) / np.hypot(di, dj) <= _MIN_COS:
                continue
            candidates.append(((ni, nj), float(pa[ni, nj])))
        if not candidates:
            break
        best_node, best_val = candidates[0]
        for node, val in candidates[1:]:
            if val > best_val:
                best_node, best_val = node, val
        if best_val < floor:
            break
        visited.add(best_node)
        steps.append(RidgeStep((ci, cj), best_node, best_val, tuple(candidates)))
        nodes.append(best_node)
    return nodes, steps


def _smooth(points, window):
    if window <= 1 or points.shape[0] < 3:
        return points.copy()
    half = window // 2
    n = points.shape[0]
    out = np.empty_like(points)
    for k in range(n):
        h = min(half, k, n - 1 - k)
        out[k] = points[k - h : k + h + 1].mean(axis=0)
    return out


def _arclength(points):
    seg = np.hypot(*np.diff(points, axis=0).T)
    return np.concatenate([[0.0], np.cumsum(seg)])


def extract_ridge(field: DensityField, tau: float = 0.05, smooth_window: int = 5) -> RidgePath:
    """Trace the crest of ``field.pa`` through its global maximum.

    From the peak node the walk advances in both directions along the
    least-curvature axis of the peak. Each step moves to the highest-valued
    unvisited 8-neighbor lying within 60 degrees of the current heading
    (the displacement over the last few nodes), and stops once that value
    drops below ``tau * max(pa)`` or no such neighbor exists. The node
    chain is smoothed with a centered moving average whose window shrinks
    at the ends, so both endpoints stay fixed.
    """
    if not 0 < tau <= 1:
        raise InvalidArgument(f"tau must lie in (0, 1], got {tau}")
    if smooth_window < 1 or smooth_window % 2 == 0:
        raise InvalidArgument(f"smooth_window must be a positive odd integer, got {smooth_window}")
    pa = np.asarray(field.pa)
    peak = float(pa.max())
    if not peak > 0:
        raise NoRidge("ambiguity density is zero everywhere")
    start = tuple(int(v) for v in np.unravel_index(int(np.argmax(pa)), pa.shape))
    direction = _ridge_direction(pa, *start)
    floor = tau * peak
    visited = {start}
    fwd, fwd_steps = _walk(pa, start, direction, visited, floor)
    bwd, bwd_steps = _walk(pa, start, -direction, visited, floor)
    nodes = bwd[:0:-1] + fwd

    idx = np.array(nodes, dtype=int)
    coords = np.column_stack([np.asarray(field.xs)[idx[:, 0]], np.asarray(field.ys)[idx[:, 1]]])
    coords = _smooth(coords, smooth_window)
    keep = np.concatenate([[True], np.any(np.diff(coords, axis=0) != 0, axis=1)])
    coords = coords[keep]
    return RidgePath(
        points=coords,
        arclen=_arclength(coords),
        nodes=tuple(nodes),
        steps=tuple(fwd_steps + bwd_steps),
    )


def sample_equidistant(path: RidgePath, n: int = 10) -> list[tuple[int, tuple[float, float]]]:
    """``n`` points evenly spaced in arc length, endpoints included, indexed from 1."""
    if n < 1:
        raise InvalidArgument(f"n must be at least 1, got {n}")
    pts = np.asarray(path.points, dtype=float)
    if pts.shape[0] == 0:
        raise InvalidArgument("path is empty")
    if pts.shape[0] == 1:
        p = (float(pts[0, 0]), float(pts[0, 1]))
        return [(i, p) for i in range(1, n + 1)]
    total = float(path.arclen[-1])
    targets = np.array([total / 2]) if n == 1 else total * np.arange(n) / (n - 1)
    xs = np.interp(targets, path.arclen, pts[:, 0])
    ys = np.interp(targets, path.arclen, pts[:, 1])
    return [(i + 1, (float(x), float(y))) for i, (x, y) in enumerate(zip(xs, ys))]


def export_path(path: RidgePath, dest) -> None:
    write_csv(
        dest,
        ("i", "x", "y", "arclen"),
        ((i, float(p[0]), float(p[1]), float(a)) for i, (p, a) in enumerate(zip(path.points, path.arclen))),
    )


def export_samples(samples, dest) -> None:
    write_csv(dest, ("index", "x", "y"), ((i, float(p[0]), float(p[1])) for i, p in samples))
