"""Pass/fail checks of the pressure identities on linear models.

Each check returns a TheoremReport: named quantities, named absolute
discrepancies, a tolerance and a verdict (pass iff every discrepancy is within
tolerance; `inapplicable` when the input violates the check's hypothesis).
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .dynamics import LeafPatch, LinearPHModel, TorusPoint, build_linear_model, orbit_points, sample_leaf_patch
from .errors import ConfigError, FixtureTooLarge
from .estimators import (
    bowen_metric_pressure,
    bowen_pressure,
    capacity_costs,
    capacity_pressure,
    entropy_brinkatok,
    entropy_partition,
    potential_table,
    spanning_pressure,
)
from .leafgeom import build_partition, leaf_expansion
from .potentials import PotentialSeq, check_subadditive, lyapunov_exponent, potential_from_descriptor, sample_points

FIXTURE_MAX = 12
EXACT_TOL = 1e-9


@dataclass
class TheoremReport:
    check: str
    quantities: dict
    discrepancies: dict
    tolerance: float
    verdict: str = ""
    runtime: float = 0.0
    notes: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.verdict:
            ok = all(v <= self.tolerance for v in self.discrepancies.values())
            self.verdict = "pass" if ok else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self, runtime: bool = False) -> dict:
        d = {
            "check": self.check,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "quantities": self.quantities,
            "discrepancies": self.discrepancies,
            "notes": self.notes,
            "details": self.details,
        }
        if runtime:
            d["runtime"] = self.runtime
        return d

    def text(self) -> str:
        lines = [f"[{self.verdict.upper()}] {self.check} (tolerance {self.tolerance:g})"]
        for k, v in self.quantities.items():
            lines.append(f"  {k:<28} {v: .9f}" if isinstance(v, float) else f"  {k:<28} {v}")
        for k, v in self.discrepancies.items():
            lines.append(f"  gap {k:<24} {v:.3e}")
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        rep = fn(*args, **kwargs)
        rep.runtime = time.perf_counter() - t0
        return rep

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# setup from a config


def model_from_config(cfg: ExperimentConfig) -> LinearPHModel:
    return build_linear_model(cfg.matrix)


def potential_from_config(cfg: ExperimentConfig, model: LinearPHModel) -> PotentialSeq:
    return potential_from_descriptor(cfg.potential, model)


def base_points_from_config(cfg: ExperimentConfig, model: LinearPHModel, count: int = 3) -> list[TorusPoint]:
    if cfg.base_points:
        pts = [TorusPoint(p) for p in cfg.base_points]
    else:
        pts = [TorusPoint(tuple(p)) for p in np.random.default_rng(cfg.seed + 1).random((count, model.dim))]
    if any(p.dim != model.dim for p in pts):
        raise ConfigError(f"base points must have {model.dim} coordinates")
    return pts


def base_from_config(cfg: ExperimentConfig, model: LinearPHModel) -> TorusPoint:
    if cfg.base:
        if len(cfg.base) != model.dim:
            raise ConfigError(f"base must have {model.dim} coordinates")
        return TorusPoint(cfg.base)
    return TorusPoint(tuple(np.random.default_rng(cfg.seed).random(model.dim)))


def patch_from_config(cfg: ExperimentConfig, model: LinearPHModel, base: TorusPoint | None = None) -> LeafPatch:
    base = base_from_config(cfg, model) if base is None else base
    return sample_leaf_patch(model, base, cfg.delta, cfg.K, cfg.scheme, cfg.seed)


def _entropies(model, patch, cfg):
    part = entropy_partition(model, patch, build_partition(cfg.partition_side, model.dim), cfg.n_window)
    bk = entropy_brinkatok(model, patch, cfg.n_window, cfg.eps_ladder)
    return part, bk


# the pressure formula: P = h + G_*


@_timed
def verify_pressure_formula(model: LinearPHModel, pot: PotentialSeq, cfg: ExperimentConfig, patch: LeafPatch | None = None) -> TheoremReport:
    """Spanning pressure against unstable entropy plus the Lyapunov exponent."""
    patch = patch_from_config(cfg, model) if patch is None else patch
    sp = spanning_pressure(model, patch, pot, cfg.n_window, cfg.eps_ladder, cfg.gamma_ladder, cfg.strategy)
    part, bk = _entropies(model, patch, cfg)
    h = 0.5 * (part.value + bk.value)
    ly = lyapunov_exponent(pot, model, cfg.sampler, cfg.lyapunov_n, cfg.lyapunov_samples, cfg.seed)
    q = {
        "spanning": sp.value,
        "entropy_partition": part.value,
        "entropy_brinkatok": bk.value,
        "entropy": h,
        "lyapunov": ly.value,
        "entropy_plus_lyapunov": h + ly.value,
    }
    notes = []
    if part.diagnostics["boundary_flag"]:
        notes.append("many samples near partition faces")
    return TheoremReport(
        "pressure-formula",
        q,
        {"pressure_vs_sum": abs(sp.value - (h + ly.value))},
        cfg.tolerance,
        notes=notes,
        details={"spanning": sp.to_dict(), "entropy_partition": part.to_dict(), "entropy_brinkatok": bk.to_dict(), "lyapunov": ly.to_dict()},
    )


# coincidence of the four metric pressures


def metric_pressures(model, pot, cfg, patch) -> dict:
    eps, gamma = min(cfg.eps_ladder), min(cfg.gamma_ladder)
    ns = sorted(cfg.n_window)
    sp = spanning_pressure(model, patch, pot, ns, cfg.eps_ladder, cfg.gamma_ladder, cfg.strategy)
    bw = bowen_metric_pressure(model, patch, pot, eps, gamma, ns[0], ns[-1], cfg.strategy, cfg.bowen_tol)
    lo, hi = capacity_pressure(model, patch, pot, eps, ns, gamma, cfg.strategy)
    return {"spanning": sp, "bowen": bw, "capacity_lower": lo, "capacity_upper": hi}


@_timed
def verify_pressure_coincidence(model: LinearPHModel, pot: PotentialSeq, cfg: ExperimentConfig, patch: LeafPatch | None = None) -> TheoremReport:
    """Spanning, Bowen, lower and upper capacity metric pressures agree pairwise."""
    patch = patch_from_config(cfg, model) if patch is None else patch
    ests = metric_pressures(model, pot, cfg, patch)
    q = {k: e.value for k, e in ests.items()}
    gaps = {f"{a}-{b}": abs(q[a] - q[b]) for a, b in itertools.combinations(q, 2)}
    return TheoremReport(
        "pressure-coincidence",
        q,
        gaps,
        cfg.tolerance,
        notes=[f"bowen flags: {ests['bowen'].diagnostics['flags']}"] if ests["bowen"].diagnostics["flags"] else [],
        details={k: e.to_dict() for k, e in ests.items()},
    )


# finite-scale properties of the cover pressures


@dataclass(frozen=True)
class CoverFixture:
    """A small patch with two target sets, for exhaustive-cover property checks."""

    name: str
    patch: LeafPatch
    eps: float
    n_min: int
    n_max: int
    z1: np.ndarray
    z2: np.ndarray
    bracket: tuple = (-10.0, 10.0)


def cover_pressures(model, pot, fx: CoverFixture, target, strategy="exhaustive", tol=1e-12) -> dict:
    """Per-n fixed-depth costs, Bowen critical exponent and capacity pair for one target set."""
    ns = list(range(fx.n_min, fx.n_max + 1))
    table = potential_table(model, fx.patch, pot, fx.n_max)
    costs = capacity_costs(model, fx.patch, pot, fx.eps, ns, target, strategy, table)
    bw = bowen_pressure(
        model, fx.patch, pot, fx.eps, fx.n_min, fx.n_max, fx.bracket, target, strategy, tol, table
    )
    rates = [c / n for c, n in zip(costs, ns)]
    return {"costs": costs, "bowen": bw.value, "capacity_lower": min(rates), "capacity_upper": max(rates)}


def _scalar_keys():
    return ("bowen", "capacity_lower", "capacity_upper")


@_timed
def verify_cover_properties(model: LinearPHModel, pot: PotentialSeq, fixtures: list[CoverFixture]) -> TheoremReport:
    """Monotonicity in the target set, union against max of parts, and the ordering chain.

    All covers are exhaustive over one shared candidate family per fixture.
    The union check is reported twice: the literal equality with the max of the
    parts, and the finite-scale sandwich max <= P(union) <= max + log 2 / n.
    """
    q, gaps, details = {}, {}, {}
    for fx in fixtures:
        if fx.patch.size > FIXTURE_MAX:
            raise FixtureTooLarge(f"fixture {fx.name} has {fx.patch.size} > {FIXTURE_MAX} samples")
        z1, z2 = np.asarray(fx.z1, bool), np.asarray(fx.z2, bool)
        p1 = cover_pressures(model, pot, fx, z1)
        p2 = cover_pressures(model, pot, fx, z2)
        pu = cover_pressures(model, pot, fx, z1 | z2)
        pf = cover_pressures(model, pot, fx, np.ones(fx.patch.size, bool))
        tag = fx.name
        # monotonicity: each part inside the union, the union inside the full patch
        mono = 0.0
        for small, big in ((p1, pu), (p2, pu), (pu, pf)):
            mono = max(mono, max(s - b for s, b in zip(small["costs"], big["costs"])))
            mono = max(mono, max(small[k] - big[k] for k in _scalar_keys()))
        gaps[f"{tag}:monotonicity"] = max(mono, 0.0)
        literal, sandwich = 0.0, 0.0
        for k, slack in (("bowen", math.log(2) / fx.n_min), ("capacity_lower", math.log(2) / fx.n_min), ("capacity_upper", math.log(2) / fx.n_min)):
            top = max(p1[k], p2[k])
            literal = max(literal, abs(pu[k] - top))
            sandwich = max(sandwich, top - pu[k], pu[k] - top - slack)
        gaps[f"{tag}:union_max"] = literal
        gaps[f"{tag}:union_sandwich"] = max(sandwich, 0.0)
        chain = 0.0
        for p in (p1, p2, pu, pf):
            chain = max(chain, p["bowen"] - p["capacity_lower"], p["capacity_lower"] - p["capacity_upper"])
        gaps[f"{tag}:ordering"] = max(chain, 0.0)
        for label, p in (("z1", p1), ("z2", p2), ("union", pu), ("full", pf)):
            for k in _scalar_keys():
                q[f"{tag}:{label}:{k}"] = p[k]
        details[tag] = {"z1": p1, "z2": p2, "union": pu, "full": pf}
    return TheoremReport("cover-properties", q, gaps, EXACT_TOL, details=details)


def verify_cover_properties_sandwich(report: TheoremReport) -> TheoremReport:
    """The same report judged without the literal union equality."""
    gaps = {k: v for k, v in report.discrepancies.items() if not k.endswith(":union_max")}
    return TheoremReport("cover-properties-sandwich", report.quantities, gaps, report.tolerance, runtime=report.runtime)


def default_cover_fixtures(model: LinearPHModel, K: int = 12) -> list[CoverFixture]:
    """Small uniform patches split into two contiguous halves, plus an interleaved split."""
    base = TorusPoint((0.1234, 0.5678) + (0.5,) * (model.dim - 2))
    out = []
    for delta, eps, n_min, n_max in ((0.25, 0.1, 1, 3), (0.5, 0.2, 2, 4)):
        patch = sample_leaf_patch(model, base, delta, K)
        half = np.arange(K) < K // 2
        out.append(CoverFixture(f"halves-d{delta}", patch, eps, n_min, n_max, half, ~half))
        odd = np.arange(K) % 2 == 1
        out.append(CoverFixture(f"interleaved-d{delta}", patch, eps, n_min, n_max, ~odd, odd))
    return out


# the sup-over-Bowen-ball bound by l-block averages


def _ball_offsets(m: int) -> np.ndarray:
    return np.linspace(-1.0, 1.0, 2 * m + 1)


@_timed
def verify_sup_bound(
    model: LinearPHModel,
    pot: PotentialSeq,
    l: int,
    rho: float,
    eps_ladder,
    samples: int = 1000,
    n_max: int = 16,
    seed: int = 0,
    ball_points: int = 8,
) -> TheoremReport:
    """Minimal C with sup_{B_n(y, eps)} log g_n <= sum_{i<n} (1/l) log g_l(f^i y) + n rho + C.

    Balls are discretized by a fixed grid of leaf offsets scaled to the largest
    eps; smaller eps keep the subset of offsets inside, so balls are nested and C
    can only fall along a decreasing ladder.  Pass iff C is finite and
    non-increasing as eps shrinks.
    """
    if l < 1 or not rho > 0:
        raise ValueError("need l >= 1 and rho > 0")
    eps_ladder = sorted((float(e) for e in eps_ladder), reverse=True)
    ys = sample_points("lebesgue", samples, model.dim, seed)
    violations = check_subadditive(pot, model, ys[: min(samples, 64)], min(n_max, 8))
    if violations:
        return TheoremReport(
            "sup-bound",
            {"l": l, "rho": rho},
            {},
            0.0,
            verdict="inapplicable",
            notes=[f"potential is not sub-additive on the sample ({len(violations)} violations)"],
        )
    orbit = orbit_points(model, ys, n_max)
    block = pot.log_g(model, orbit, l) / l
    rhs = np.cumsum(block, axis=0) + rho * np.arange(1, n_max + 1)[:, None]
    u = _ball_offsets(ball_points)
    direction = model.direction
    cs = []
    for eps in eps_ladder:
        c = -np.inf
        keep = np.abs(u) * eps_ladder[0] <= eps + 1e-15
        for n in range(1, n_max + 1):
            r = eps_ladder[0] / leaf_expansion(model, n)
            pts = ys[:, None, :] + (u[keep] * r)[None, :, None] * direction[None, None, :]
            lhs = pot.log_g(model, pts % 1.0, n).max(axis=1)
            c = max(c, float(np.max(lhs - rhs[n - 1])))
        cs.append(c)
    q = {f"C@eps={e:g}": c for e, c in zip(eps_ladder, cs)}
    q.update({"l": l, "rho": rho, "C": cs[-1]})
    increase = max([0.0] + [b - a for a, b in zip(cs, cs[1:])])
    finite = all(math.isfinite(c) for c in cs)
    gaps = {"C_increase_along_ladder": increase if finite else math.inf}
    return TheoremReport("sup-bound", q, gaps, 0.0)


# gamma and base point insensitivity


@_timed
def verify_gamma_eta_insensitivity(
    model: LinearPHModel,
    pot: PotentialSeq,
    gamma_ladder,
    base_points,
    cfg: ExperimentConfig,
    tolerance: float | None = None,
) -> TheoremReport:
    """Spanning pressure across gamma values and across leaf patches at distinct base points."""
    if len(gamma_ladder) < 2 or len(base_points) < 2:
        raise ValueError("need at least two gamma values and two base points")
    tol = cfg.insensitivity_tolerance if tolerance is None else tolerance
    eps = min(cfg.eps_ladder)
    vals = {}
    for b, base in enumerate(base_points):
        patch = sample_leaf_patch(model, base, cfg.delta, cfg.K, cfg.scheme, cfg.seed)
        est = spanning_pressure(model, patch, pot, cfg.n_window, [eps], sorted(set(gamma_ladder), reverse=True), cfg.strategy)
        by_gamma = {f["gamma"]: f["slope"] for f in est.diagnostics["fits"]}
        for g in gamma_ladder:
            vals[f"base{b}:gamma={g:g}"] = by_gamma[float(g)]
    v = np.array(list(vals.values()))
    return TheoremReport(
        "gamma-eta-insensitivity",
        vals,
        {"max_pairwise": float(v.max() - v.min())},
        tol,
        notes=["base points are sampled; a failing base point cannot be told apart from a null-set exception"],
    )


CHECKS = ("formula", "coincidence", "cover-properties", "sup-bound", "insensitivity")


def run_checks(names, cfg: ExperimentConfig) -> list[TheoremReport]:
    """Run the named checks on one config, sharing the model, potential and patch."""
    model = model_from_config(cfg)
    pot = potential_from_config(cfg, model)
    patch = None
    out = []
    for name in names:
        if name not in CHECKS:
            raise ConfigError(f"unknown check {name!r}; available: {', '.join(CHECKS)}")
        if name in ("formula", "coincidence") and patch is None:
            patch = patch_from_config(cfg, model)
        if name == "formula":
            out.append(verify_pressure_formula(model, pot, cfg, patch))
        elif name == "coincidence":
            out.append(verify_pressure_coincidence(model, pot, cfg, patch))
        elif name == "cover-properties":
            out.append(verify_cover_properties(model, pot, default_cover_fixtures(model)))
        elif name == "sup-bound":
            for l in (1, 2, 4):
                out.append(verify_sup_bound(model, pot, l, 0.01, cfg.eps_ladder, seed=cfg.seed))
        elif name == "insensitivity":
            gammas = cfg.gamma_ladder if len(cfg.gamma_ladder) >= 2 else (0.2, 0.1, 0.05)
            out.append(verify_gamma_eta_insensitivity(model, pot, gammas, base_points_from_config(cfg, model), cfg))
    return out
