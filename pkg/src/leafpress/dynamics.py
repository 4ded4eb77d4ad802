"""Linear partially hyperbolic toral automorphisms.

Orbits are computed in fixed point: a coordinate x in [0, 1) is stored as the
integer X = floor(x * 2**52) and the map acts as X -> A X mod 2**52.  This is an
exact permutation of the dyadic grid, so iterating is bit-deterministic and the
semigroup law f^(m+n) = f^m o f^n holds exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    BadRadius,
    ComplexUnstable,
    NotPartiallyHyperbolic,
    NotUnimodular,
)

FRAC_BITS = 52
_SCALE = 1 << FRAC_BITS
_MODULUS_TOL = 1e-9
_INVARIANCE_TOL = 1e-10


def reduce_mod1(x) -> np.ndarray:
    """Reduce to [0, 1) with floor semantics; never returns 1.0."""
    r = np.mod(np.asarray(x, dtype=float), 1.0)
    return np.where(r >= 1.0, 0.0, r)


@dataclass(frozen=True)
class TorusPoint:
    coords: tuple

    def __post_init__(self):
        c = reduce_mod1(np.asarray(self.coords, dtype=float).ravel())
        object.__setattr__(self, "coords", tuple(float(v) for v in c))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.array(self.coords)


def _as_point_array(x) -> np.ndarray:
    if isinstance(x, TorusPoint):
        return x.as_array()
    return np.asarray(x, dtype=float)


def _integer_det(rows: list[list[int]]) -> int:
    # Bareiss fraction-free elimination
    m = [list(r) for r in rows]
    n = len(m)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(np.abs(v) > 1e-12)
    if idx.size and v[idx[0]] < 0:
        return -v
    return v


def _real_eigvec(a: np.ndarray, lam: float) -> np.ndarray:
    d = a.shape[0]
    _, _, vt = np.linalg.svd(a - lam * np.eye(d))
    v = vt[-1]
    return _canonical_sign(v / np.linalg.norm(v))


def _invariant_basis(a: np.ndarray, eigvals, eigvecs) -> tuple[np.ndarray, list]:
    """Orthonormal real basis (rows) and real eigenpairs for a group of eigenvalues."""
    pairs = []
    cols = []
    for lam, vec in zip(eigvals, eigvecs.T):
        if abs(lam.imag) <= 1e-12:
            v = _real_eigvec(a, lam.real)
            pairs.append((float(lam.real), v))
            cols.append(v)
        elif lam.imag > 0:
            cols.extend([vec.real, vec.imag])
    q, _ = np.linalg.qr(np.array(cols).T)
    return q.T, pairs


@dataclass(frozen=True)
class LinearPHModel:
    matrix: np.ndarray
    stable: np.ndarray
    center: np.ndarray
    unstable: np.ndarray
    lambda_s: float
    lambda_c: tuple
    lambda_u: float
    eigenvalue_u: float
    eigenpairs: tuple = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def direction(self) -> np.ndarray:
        """Unit vector spanning the (one-dimensional) unstable bundle."""
        return self.unstable[0]

    @property
    def log_lambda_u(self) -> float:
        return math.log(self.lambda_u)

    def describe(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "lambda_s": self.lambda_s,
            "lambda_c": list(self.lambda_c),
            "lambda_u": self.lambda_u,
            "log_lambda_u": self.log_lambda_u,
            "E_s": self.stable.tolist(),
            "E_c": self.center.tolist(),
            "E_u": self.unstable.tolist(),
        }


def build_linear_model(matrix: Sequence[Sequence[int]]) -> LinearPHModel:
    """Validate an integer unimodular matrix and compute its s/c/u splitting.

    The unstable bundle is the eigenline of the largest-modulus eigenvalue,
    the stable bundle the eigenspace of the smallest modulus, and any
    eigenvalues with intermediate moduli make up the center.

    Raises NotUnimodular, NotPartiallyHyperbolic or ComplexUnstable.
    """
    raw = np.asarray(matrix)
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1] or raw.shape[0] < 2:
        raise NotUnimodular(f"matrix must be square with d >= 2, got shape {raw.shape}")
    if not np.all(np.asarray(raw, dtype=float) == np.round(np.asarray(raw, dtype=float))):
        raise NotUnimodular("matrix entries must be integers")
    rows = [[int(v) for v in r] for r in np.asarray(raw, dtype=float).round().astype(np.int64)]
    det = _integer_det(rows)
    if abs(det) != 1:
        raise NotUnimodular(f"determinant is {det}, expected +1 or -1")
    a = np.array(rows, dtype=np.int64)
    af = a.astype(float)

    w, v = np.linalg.eig(af)
    mod = np.abs(w)
    order = np.argsort(mod, kind="stable")
    w, v, mod = w[order], v[:, order], mod[order]

    groups: list[list[int]] = []
    for i in range(len(w)):
        if groups and abs(mod[i] - mod[groups[-1][0]]) <= _MODULUS_TOL * max(1.0, mod[i]):
            groups[-1].append(i)
        else:
            groups.append([i])
    if len(groups) < 2:
        raise NotPartiallyHyperbolic("all eigenvalues share one modulus")

    top = groups[-1]
    if any(abs(w[i].imag) > 1e-12 for i in top):
        raise ComplexUnstable("unstable eigenvalue is not real")
    if len(top) > 1:
        raise NotPartiallyHyperbolic("leading modulus is not simple (dim E^u > 1 unsupported)")
    lam_u = float(w[top[0]].real)
    if abs(lam_u) <= 1.0 + _MODULUS_TOL:
        raise NotPartiallyHyperbolic("no expanding direction")
    bottom = groups[0]
    lam_s = float(mod[bottom[0]])
    if lam_s >= 1.0 - _MODULUS_TOL:
        raise NotPartiallyHyperbolic("no contracting direction")

    s_basis, s_pairs = _invariant_basis(af, w[bottom], v[:, bottom])
    u_vec = _real_eigvec(af, lam_u)
    center_idx = [i for g in groups[1:-1] for i in g]
    if center_idx:
        c_basis, c_pairs = _invariant_basis(af, w[center_idx], v[:, center_idx])
    else:
        c_basis, c_pairs = np.zeros((0, af.shape[0])), []
    lam_c = tuple(float(mod[g[0]]) for g in groups[1:-1])

    pairs = tuple(s_pairs + c_pairs + [(lam_u, u_vec)])
    for lam, vec in pairs:
        if np.linalg.norm(af @ vec - lam * vec) > _INVARIANCE_TOL:
            raise NotPartiallyHyperbolic(f"eigenpair for {lam} fails invariance check")
    for basis in (s_basis, c_basis):
        if basis.shape[0]:
            img = af @ basis.T
            resid = img - basis.T @ (basis @ img)
            if np.linalg.norm(resid) > _INVARIANCE_TOL:
                raise NotPartiallyHyperbolic("invariant subspace check failed")
    full = np.vstack([s_basis, c_basis, u_vec[None, :]])
    if np.linalg.matrix_rank(full) != af.shape[0]:
        raise NotPartiallyHyperbolic("splitting does not span R^d")

    for arr in (a, s_basis, c_basis):
        arr.setflags(write=False)
    u_basis = u_vec[None, :].copy()
    u_basis.setflags(write=False)
    return LinearPHModel(
        matrix=a,
        stable=s_basis,
        center=c_basis,
        unstable=u_basis,
        lambda_s=lam_s,
        lambda_c=lam_c,
        lambda_u=abs(lam_u),
        eigenvalue_u=lam_u,
        eigenpairs=pairs,
    )


def _to_fixed(x: np.ndarray) -> np.ndarray:
    r = reduce_mod1(x)
    return np.floor(r * _SCALE).astype(np.int64) % _SCALE


def _from_fixed(xi: np.ndarray) -> np.ndarray:
    return np.asarray(xi, dtype=np.int64).astype(float) / _SCALE


def _step_fixed(a: np.ndarray, xi: np.ndarray) -> np.ndarray:
    # rows of xi are points; int64 is safe while max row-sum * 2**52 < 2**63
    if np.abs(a).sum(axis=1).max() < (1 << 10):
        return (xi @ a.T) % _SCALE
    big = (xi.astype(object) @ a.T.astype(object)) % _SCALE
    return big.astype(np.int64)


def iterate_points(model: LinearPHModel, points, k: int) -> np.ndarray:
    """Apply f^k to an array of points with shape (..., d)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    pts = np.asarray(points, dtype=float)
    if k == 0:
        return reduce_mod1(pts)
    shape = pts.shape
    xi = _to_fixed(pts.reshape(-1, model.dim))
    for _ in range(k):
        xi = _step_fixed(model.matrix, xi)
    return _from_fixed(xi).reshape(shape)


def orbit_points(model: LinearPHModel, points, n: int) -> np.ndarray:
    """Return f^i(points) for 0 <= i < n, stacked along a new leading axis."""
    pts = np.asarray(points, dtype=float)
    xi = _to_fixed(pts.reshape(-1, model.dim))
    out = np.empty((n,) + pts.shape)
    for i in range(n):
        out[i] = _from_fixed(xi).reshape(pts.shape) if i else reduce_mod1(pts)
        xi = _step_fixed(model.matrix, xi)
    return out


def iterate(model: LinearPHModel, x, k: int) -> TorusPoint:
    """f^k(x) = A^k x mod 1."""
    return TorusPoint(tuple(iterate_points(model, _as_point_array(x)[None, :], k)[0]))


def unstable_cocycle_norm(model: LinearPHModel, x, n: int) -> float:
    """log ||D_x f^n restricted to E^u||; equal to n log(lambda_u) for linear maps."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return n * model.log_lambda_u


def exact_orbit(model: LinearPHModel, x: Sequence[Fraction | int], k: int) -> tuple:
    """Rational reference orbit: A^k x mod 1 in exact arithmetic."""
    cur = [Fraction(c) % 1 for c in x]
    rows = model.matrix.tolist()
    for _ in range(k):
        cur = [sum(Fraction(r) * c for r, c in zip(row, cur)) % 1 for row in rows]
    return tuple(cur)


@dataclass(frozen=True)
class LeafPatch:
    """Discretized local unstable leaf: base + t * direction for sampled t."""

    base: TorusPoint
    direction: np.ndarray
    radius: float
    params: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.params.size)

    def points(self) -> np.ndarray:
        return reduce_mod1(self.base.as_array()[None, :] + self.params[:, None] * self.direction[None, :])

    def point(self, i: int) -> TorusPoint:
        return TorusPoint(tuple(self.points()[i]))

    def subset(self, indices) -> "LeafPatch":
        """Sub-patch on the given sample indices with renormalized weights."""
        idx = np.sort(np.asarray(indices, dtype=np.int64))
        w = self.weights[idx]
        return _freeze_patch(self.base, self.direction, self.radius, self.params[idx], w / w.sum())


def _freeze_patch(base, direction, radius, params, weights) -> LeafPatch:
    params = np.array(params, dtype=float)
    weights = np.array(weights, dtype=float)
    direction = np.array(direction, dtype=float)
    for arr in (params, weights, direction):
        arr.setflags(write=False)
    return LeafPatch(base, direction, float(radius), params, weights)


def sample_leaf_patch(
    model: LinearPHModel,
    x,
    delta: float,
    K: int,
    scheme: str = "uniform-grid",
    seed: int | None = None,
) -> LeafPatch:
    """Sample K leaf parameters on [-delta, delta] with uniform weights 1/K.

    Leaf-Lebesgue weights are the conditional measures of Lebesgue measure on
    the affine unstable leaves of a linear automorphism.
    """
    if not delta > 0:
        raise BadRadius(f"leaf radius must be positive, got {delta}")
    if K < 2:
        raise ValueError("K must be >= 2")
    if scheme == "uniform-grid":
        t = np.linspace(-delta, delta, K)
    elif scheme == "stratified-random":
        rng = np.random.default_rng(seed)
        edges = np.linspace(-delta, delta, K + 1)
        t = edges[:-1] + rng.random(K) * (edges[1:] - edges[:-1])
    else:
        raise ValueError(f"unknown sampling scheme {scheme!r}")
    base = x if isinstance(x, TorusPoint) else TorusPoint(tuple(np.asarray(x, dtype=float)))
    return _freeze_patch(base, model.direction, delta, t, np.full(K, 1.0 / K))


def read_model_matrix(text: str) -> list:
    """Read the integer rows from the `matrix = [[...],[...]]` model description format."""
    import ast

    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        if key.strip() == "matrix":
            try:
                rows = ast.literal_eval(value.strip())
            except (SyntaxError, ValueError) as exc:
                raise ValueError(f"line {lineno}: bad matrix literal ({exc})") from None
            if not isinstance(rows, (list, tuple)) or not all(isinstance(r, (list, tuple)) for r in rows):
                raise ValueError(f"line {lineno}: matrix must be a list of rows")
            return [list(r) for r in rows]
    raise ValueError("model description has no 'matrix' entry")


def parse_model_text(text: str) -> LinearPHModel:
    return build_linear_model(read_model_matrix(text))


CAT_MAP = ((2, 1), (1, 1))
CAT_BLOCK3 = ((2, 1, 0), (1, 1, 0), (0, 0, 1))
