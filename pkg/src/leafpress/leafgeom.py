"""Bowen metrics along unstable leaves, cube partitions, itineraries, Hamming counts."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .dynamics import LeafPatch, LinearPHModel, TorusPoint, orbit_points
from .errors import BadCellSide, LengthMismatch, OutOfRange


def leaf_expansion(model: LinearPHModel, n: int) -> float:
    """max over 0 <= k < n of the leaf-length stretch factor of f^k."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return max(1.0, model.lambda_u ** (n - 1))


def du_n(model: LinearPHModel, patch: LeafPatch, i: int, j: int, n: int) -> float:
    """Bowen distance along the leaf: max_{k<n} leaf distance of f^k y_i and f^k y_j."""
    return abs(float(patch.params[i]) - float(patch.params[j])) * leaf_expansion(model, n)


def du_matrix(model: LinearPHModel, patch: LeafPatch, n: int) -> np.ndarray:
    t = patch.params
    return np.abs(t[:, None] - t[None, :]) * leaf_expansion(model, n)


@dataclass(frozen=True)
class BowenBall:
    center_index: int
    n: int
    eps: float


def ball_ranges(model: LinearPHModel, patch: LeafPatch, n: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Half-open index ranges [lo, hi) of the (n, eps) u-Bowen ball around every sample.

    Patch parameters are sorted, so each ball is a contiguous run of samples.
    Boundary membership is settled with the same product used by du_n.
    """
    t = patch.params
    expand = leaf_expansion(model, n)
    r = eps / expand
    k = t.size
    centers = np.arange(k)
    lo = np.minimum(np.searchsorted(t, t - r, side="left"), centers)
    hi = np.maximum(np.searchsorted(t, t + r, side="right"), centers + 1)

    def inside(j):
        return np.abs(t[j] - t) * expand <= eps

    while True:
        grow = (lo > 0) & inside(np.maximum(lo - 1, 0))
        shrink = (lo < centers) & ~inside(lo)
        if not (grow.any() or shrink.any()):
            break
        lo = lo - grow + shrink
    while True:
        grow = (hi < k) & inside(np.minimum(hi, k - 1))
        shrink = (hi > centers + 1) & ~inside(hi - 1)
        if not (grow.any() or shrink.any()):
            break
        hi = hi + grow - shrink
    return lo, hi


def bowen_ball_members(model: LinearPHModel, patch: LeafPatch, center: int, n: int, eps: float) -> set[int]:
    """Indices j with du_n(center, j) <= eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    d = np.abs(patch.params - patch.params[center]) * leaf_expansion(model, n)
    return set(int(j) for j in np.flatnonzero(d <= eps))


@dataclass(frozen=True)
class Partition:
    """Axis-aligned cube grid with half-open cells and row-major ids."""

    cell_side: float
    per_axis: int
    dim: int

    @property
    def n_cells(self) -> int:
        return self.per_axis**self.dim

    def cell_index(self, points) -> np.ndarray:
        pts = points.as_array() if isinstance(points, TorusPoint) else np.asarray(points, dtype=float)
        idx = np.floor(pts / self.cell_side).astype(np.int64)
        idx = np.clip(idx, 0, self.per_axis - 1)
        ids = np.zeros(idx.shape[:-1], dtype=np.int64)
        for k in range(self.dim):
            ids = ids * self.per_axis + idx[..., k]
        return ids

    def boundary_distance(self, points) -> np.ndarray:
        """Distance from each point to the nearest cell face (torus faces included)."""
        pts = np.asarray(points, dtype=float)
        faces = np.append(np.arange(self.per_axis) * self.cell_side, 1.0)
        pos = np.searchsorted(faces, pts, side="right")
        below = faces[np.clip(pos - 1, 0, faces.size - 1)]
        above = faces[np.clip(pos, 0, faces.size - 1)]
        return np.minimum(np.abs(pts - below), np.abs(above - pts)).min(axis=-1)


def build_partition(cell_side: float, dim: int = 2) -> Partition:
    if not (0 < cell_side <= 1):
        raise BadCellSide(f"cell side must lie in (0, 1], got {cell_side}")
    per_axis = math.ceil(1.0 / cell_side - 1e-12)
    return Partition(float(cell_side), per_axis, dim)


@dataclass(frozen=True)
class ItineraryCode:
    word: tuple

    def __len__(self):
        return len(self.word)


def itineraries(model: LinearPHModel, partition: Partition, points, n: int) -> np.ndarray:
    """Cell ids of f^i(points) for 0 <= i < n; shape (n, number of points)."""
    return partition.cell_index(orbit_points(model, points, n))


def itinerary(model: LinearPHModel, partition: Partition, y, n: int) -> ItineraryCode:
    if n < 1:
        raise ValueError("n must be >= 1")
    pt = y.as_array() if isinstance(y, TorusPoint) else np.asarray(y, dtype=float)
    codes = itineraries(model, partition, pt[None, :], n)[:, 0]
    return ItineraryCode(tuple(int(c) for c in codes))


def hamming_distance(w1, w2) -> float:
    a = w1.word if isinstance(w1, ItineraryCode) else tuple(w1)
    b = w2.word if isinstance(w2, ItineraryCode) else tuple(w2)
    if len(a) != len(b):
        raise LengthMismatch(f"words of length {len(a)} and {len(b)}")
    if not a:
        return 0.0
    return sum(x != y for x, y in zip(a, b)) / len(a)


def hamming_ball_log_count(r: float, N: int, n: int) -> float:
    """log B(r, N, n) = log sum_{m=0}^{floor(n r)} (N-1)^m C(n, m), in log domain."""
    if not (0 <= r <= 1) or N < 2 or n < 1:
        raise ValueError("need 0 <= r <= 1, N >= 2, n >= 1")
    top = min(n, math.floor(n * r + 1e-9))
    m = np.arange(top + 1, dtype=float)
    terms = m * math.log(N - 1) + gammaln(n + 1.0) - gammaln(m + 1.0) - gammaln(n - m + 1.0)
    return float(logsumexp(terms))


def hamming_asymptotic_rate(r: float, N: int) -> float:
    """Growth rate of log B(r, N, n) / n for 0 < r <= (N-1)/N.

    At r = (N-1)/N the rate is log N, the continuous endpoint of the formula.
    """
    if N < 2 or not (0 < r <= (N - 1) / N):
        raise OutOfRange(f"r={r} outside (0, {(N - 1) / N}]")
    return r * math.log(N - 1) - r * math.log(r) - (1 - r) * math.log(1 - r)
