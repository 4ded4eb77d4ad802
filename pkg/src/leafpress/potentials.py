"""Sub-additive potential sequences G = {log g_n} and their Lyapunov exponents."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import LinearPHModel, TorusPoint, iterate_points, orbit_points
from .errors import ConfigError, DegenerateSample

LYAPUNOV_FLOOR = -1e6
SUBADDITIVE_TOL = 1e-9

# evaluator(model, points with shape (..., d), n) -> log g_n at each point, shape (...)
Evaluator = Callable[[LinearPHModel, np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class PotentialSeq:
    flavor: str
    evaluator: Evaluator = field(repr=False)
    params: dict = field(default_factory=dict)
    # phi for additive flavors, kept so tables can reuse one orbit
    phi: Callable | None = field(default=None, repr=False)

    def log_g(self, model: LinearPHModel, points, n: int) -> np.ndarray:
        pts = points.as_array() if isinstance(points, TorusPoint) else np.asarray(points, dtype=float)
        return np.asarray(self.evaluator(model, pts, n), dtype=float)

    def table(self, model: LinearPHModel, points, n_max: int) -> np.ndarray:
        """Array T with T[n] = log g_n(points) for 0 <= n <= n_max (T[0] = 0)."""
        pts = np.asarray(points, dtype=float)
        out = np.zeros((n_max + 1,) + pts.shape[:-1])
        if self.phi is not None:
            orbit = orbit_points(model, pts, n_max)
            out[1:] = np.cumsum(self.phi(orbit), axis=0)
            return out
        for n in range(1, n_max + 1):
            out[n] = self.log_g(model, pts, n)
        return out


def _phi_zero(x):
    return np.zeros(np.shape(x)[:-1])


def _phi_cos1(x):
    return np.cos(2.0 * np.pi * np.asarray(x)[..., 0])


def phi_from_name(name: str) -> Callable:
    """Catalog of named observables: `zero`, `const:c`, `cos1`."""
    if name == "zero":
        return _phi_zero
    if name == "cos1":
        return _phi_cos1
    if name.startswith("const:"):
        try:
            c = float(name.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad constant in {name!r}") from None
        return lambda x: np.full(np.shape(x)[:-1], c)
    raise ConfigError(f"unknown phi {name!r}; catalog: zero, const:<c>, cos1")


def birkhoff_potential(phi: Callable | str, name: str | None = None) -> PotentialSeq:
    """Additive potential log g_n = sum_{i<n} phi(f^i x)."""
    label = phi if isinstance(phi, str) else (name or getattr(phi, "__name__", "phi"))
    fn = phi_from_name(phi) if isinstance(phi, str) else phi

    def evaluator(model, pts, n):
        if n == 0:
            return np.zeros(pts.shape[:-1])
        return fn(orbit_points(model, pts, n)).sum(axis=0)

    return PotentialSeq("additive", evaluator, {"phi": label}, phi=fn)


def unstable_norm_potential(model: LinearPHModel, t: float) -> PotentialSeq:
    """log g_n = t * log ||D f^n | E^u||."""
    rate = t * model.log_lambda_u

    def evaluator(m, pts, n):
        return np.full(pts.shape[:-1], n * rate)

    return PotentialSeq("unstable-norm-power", evaluator, {"t": float(t)})


def constant_rate_potential(c: float) -> PotentialSeq:
    def evaluator(model, pts, n):
        return np.full(pts.shape[:-1], n * c)

    return PotentialSeq("constant-rate", evaluator, {"c": float(c)})


def zero_potential() -> PotentialSeq:
    return constant_rate_potential(0.0)


def custom_potential(fn: Evaluator, label: str = "custom") -> PotentialSeq:
    return PotentialSeq("custom", fn, {"label": label})


def add_constant_rate(pot: PotentialSeq, c: float) -> PotentialSeq:
    """log g_n -> log g_n + n c."""

    def evaluator(model, pts, n):
        return pot.evaluator(model, pts, n) + n * c

    phi = None
    if pot.phi is not None:
        base_phi = pot.phi
        phi = lambda x: base_phi(x) + c  # noqa: E731
    params = dict(pot.params, shift=float(c))
    return PotentialSeq(pot.flavor, evaluator, params, phi=phi)


def scale_potential(pot: PotentialSeq, t: float) -> PotentialSeq:
    def evaluator(model, pts, n):
        return t * pot.evaluator(model, pts, n)

    phi = None
    if pot.phi is not None:
        base_phi = pot.phi
        phi = lambda x: t * base_phi(x)  # noqa: E731
    return PotentialSeq(pot.flavor, evaluator, dict(pot.params, scale=float(t)), phi=phi)


def potential_from_descriptor(desc: dict, model: LinearPHModel) -> PotentialSeq:
    """Build a potential from a config descriptor such as
    {flavor = "unstable-norm-power", t = 1.0} or {flavor = "birkhoff", phi = "cos1"}.
    An optional `shift` key adds a constant rate."""
    flavor = desc.get("flavor")
    if flavor == "unstable-norm-power":
        pot = unstable_norm_potential(model, float(desc.get("t", 1.0)))
    elif flavor in ("birkhoff", "additive"):
        pot = birkhoff_potential(str(desc.get("phi", "zero")))
    elif flavor == "constant-rate":
        pot = constant_rate_potential(float(desc.get("c", 0.0)))
    elif flavor == "zero":
        pot = zero_potential()
    else:
        raise ConfigError(
            f"unknown potential flavor {flavor!r}; catalog: unstable-norm-power, birkhoff, constant-rate, zero"
        )
    if "shift" in desc:
        pot = add_constant_rate(pot, float(desc["shift"]))
    return pot


@dataclass(frozen=True)
class Violation:
    x: tuple
    m: int
    n: int
    slack: float


def subadditivity_slack(pot: PotentialSeq, model: LinearPHModel, points, max_n: int) -> dict:
    """Map (m, n) -> array over points of log g_n(x) + log g_m(f^n x) - log g_{m+n}(x)."""
    pts = np.asarray(points, dtype=float)
    table = pot.table(model, pts, max_n)
    out = {}
    for n in range(1, max_n):
        moved = iterate_points(model, pts, n)
        moved_table = pot.table(model, moved, max_n - n)
        for m in range(1, max_n - n + 1):
            out[(m, n)] = table[n] + moved_table[m] - table[m + n]
    return out


def check_subadditive(pot: PotentialSeq, model: LinearPHModel, points, max_n: int) -> list[Violation]:
    """Every (x, m, n) with m + n <= max_n where sub-additivity fails by more than 1e-9."""
    if max_n < 2:
        raise ValueError("max_n must be >= 2")
    pts = np.asarray(points, dtype=float)
    bad = []
    for (m, n), slack in sorted(subadditivity_slack(pot, model, pts, max_n).items()):
        for i in np.flatnonzero(slack < -SUBADDITIVE_TOL):
            bad.append(Violation(tuple(pts[i]), m, n, float(slack[i])))
    return bad


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    n_used: int
    spread: float
    sequence: dict = field(default_factory=dict)
    degenerate: bool = False
    samples: int = 0

    def to_dict(self) -> dict:
        return {
            "kind": "lyapunov",
            "value": self.value,
            "n_used": self.n_used,
            "spread": self.spread,
            "sequence": {str(k): v for k, v in self.sequence.items()},
            "degenerate": self.degenerate,
            "samples": self.samples,
        }


def sample_points(sampler, samples: int, dim: int, seed: int | None) -> np.ndarray:
    """Orbit starts: 'lebesgue' (seeded uniform), 'sobol' (scrambled), or a callable(rng, samples, dim)."""
    if callable(sampler):
        return np.asarray(sampler(np.random.default_rng(seed), samples, dim), dtype=float)
    if sampler == "lebesgue":
        return np.random.default_rng(seed).random((samples, dim))
    if sampler == "sobol":
        from scipy.stats import qmc

        return qmc.Sobol(d=dim, scramble=True, seed=seed).random(samples)
    raise ValueError(f"unknown sampler {sampler!r}")


def lyapunov_exponent(
    pot: PotentialSeq,
    model: LinearPHModel,
    sampler="lebesgue",
    n_max: int = 64,
    samples: int = 64,
    seed: int | None = 0,
) -> LyapunovEstimate:
    """Space-averaged (1/n) log g_n at n = n_max over sampled orbit starts."""
    if samples < 1:
        raise DegenerateSample("need at least one sample")
    if n_max < 8:
        raise ValueError("n_max must be >= 8")
    pts = sample_points(sampler, samples, model.dim, seed)
    table = pot.table(model, pts, n_max)
    seq = {}
    for n in sorted({n_max // 4, n_max // 2, n_max}):
        seq[n] = float(np.mean(table[n] / n))
    per_sample = table[n_max] / n_max
    value = float(np.mean(per_sample))
    degenerate = not math.isfinite(value) or value < LYAPUNOV_FLOOR
    if degenerate:
        value = LYAPUNOV_FLOOR
    return LyapunovEstimate(
        value=value,
        n_used=n_max,
        spread=float(np.std(per_sample)),
        sequence=seq,
        degenerate=degenerate,
        samples=samples,
    )
