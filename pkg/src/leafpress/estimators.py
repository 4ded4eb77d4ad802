"""Finite-scale estimators of unstable metric pressure and unstable entropy.

Every estimator works on a LeafPatch: the sorted sample parameters of a local
unstable leaf with weights standing in for the conditional measure.  Limits in
n become least-squares slopes (or window min/max for the capacity pair), and
limits in eps and gamma become ladders whose smallest rung gives the value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cover import Candidates, CoverPick, solve_cover
from .dynamics import LeafPatch, LinearPHModel, orbit_points
from .errors import BracketFailure, EmptySurvivors, Infeasible
from .leafgeom import BowenBall, Partition, ball_ranges, itineraries, leaf_expansion
from .potentials import PotentialSeq

BOUNDARY_FLAG_FRACTION = 0.2
BOUNDARY_MARGIN = 1e-9
MAX_WIDENINGS = 40


@dataclass(frozen=True)
class CoverSolution:
    balls: list
    total_cost: float
    covered_mass: float
    strategy: str


@dataclass(frozen=True)
class PressureEstimate:
    value: float
    kind: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self) -> list:
        return self.diagnostics.get("grid", [])

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "value": self.value, "grid": self.grid}
        fits = self.diagnostics.get("fits")
        if fits:
            sel = self.diagnostics.get("selected_fit", fits[0])
            d["fit"] = {k: sel[k] for k in ("slope", "intercept", "residual")}
        d["diagnostics"] = {k: v for k, v in self.diagnostics.items() if k != "grid"}
        return d


def fit_slope(ns, values) -> dict:
    """Least-squares line through (n, value); residual is the RMS misfit."""
    x = np.asarray(ns, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    xm, ym = x.mean(), y.mean()
    slope = float(((x - xm) * (y - ym)).sum() / ((x - xm) ** 2).sum())
    intercept = float(ym - slope * xm)
    resid = float(np.sqrt(np.mean((y - (intercept + slope * x)) ** 2)))
    return {"slope": slope, "intercept": intercept, "residual": resid}


def range_max(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """max(values[lo[i]:hi[i]]) for every i via a sparse table."""
    v = np.asarray(values, dtype=float)
    if v.size and np.all(v == v[0]):
        return np.full(lo.shape, v[0])
    table = [v]
    j = 1
    while (1 << j) <= v.size:
        prev, half = table[-1], 1 << (j - 1)
        table.append(np.maximum(prev[:-half], prev[half:]))
        j += 1
    length = hi - lo
    level = np.floor(np.log2(length)).astype(np.int64)
    out = np.empty(lo.shape)
    for k in np.unique(level):
        sel = level == k
        tk = table[k]
        out[sel] = np.maximum(tk[lo[sel]], tk[hi[sel] - (1 << k)])
    return out


def potential_table(model: LinearPHModel, patch: LeafPatch, pot: PotentialSeq, n_max: int) -> np.ndarray:
    return pot.table(model, patch.points(), n_max)


def depth_candidates(model, patch, table, n, eps) -> Candidates:
    """All balls of depth n centered at patch samples, cost = sup over members of log g_n."""
    lo, hi = ball_ranges(model, patch, n, eps)
    k = patch.size
    return Candidates(lo, hi, np.arange(k), np.full(k, n), range_max(table[n], lo, hi))


def _solution(cands: Candidates, pick: CoverPick, eps: float, strategy: str) -> CoverSolution:
    balls = [BowenBall(int(cands.center[c]), int(cands.depth[c]), float(eps)) for c in pick.chosen]
    return CoverSolution(balls, pick.total_cost, pick.union_mass, strategy)


def spanning_cost(
    model: LinearPHModel,
    patch: LeafPatch,
    pot: PotentialSeq,
    n: int,
    eps: float,
    gamma: float,
    strategy: str = "greedy",
    table: np.ndarray | None = None,
) -> CoverSolution:
    """Cheapest found (n, eps, gamma) u-spanning set: its balls cover mass >= 1 - gamma.

    total_cost = log sum_{y in F} exp(sup_{ball(y)} log g_n).
    """
    if not (0 <= gamma < 1):
        raise ValueError("gamma must lie in [0, 1)")
    if not eps > 0 or n < 1:
        raise ValueError("need eps > 0 and n >= 1")
    if table is None:
        table = potential_table(model, patch, pot, n)
    cands = depth_candidates(model, patch, table, n, eps)
    pick = solve_cover(cands, patch.weights, None, 1.0 - gamma, strategy)
    return _solution(cands, pick, eps, strategy)


def _check_ladders(n_window, *ladders):
    ns = sorted(int(n) for n in n_window)
    if len(ns) < 3:
        raise ValueError("n_window needs at least 3 points")
    for lad in ladders:
        if len(lad) == 0:
            raise ValueError("ladders must be nonempty")
    return ns


def spanning_pressure(
    model: LinearPHModel,
    patch: LeafPatch,
    pot: PotentialSeq,
    n_window,
    eps_ladder,
    gamma_ladder,
    strategy: str = "greedy",
) -> PressureEstimate:
    """Slope in n of the log spanning cost, read at the smallest eps and gamma."""
    ns = _check_ladders(n_window, eps_ladder, gamma_ladder)
    table = potential_table(model, patch, pot, ns[-1])
    grid, fits = [], []
    for eps in eps_ladder:
        for gamma in gamma_ladder:
            raws = []
            for n in ns:
                sol = spanning_cost(model, patch, pot, n, eps, gamma, strategy, table)
                raws.append(sol.total_cost)
                grid.append({"n": n, "eps": float(eps), "gamma": float(gamma), "raw": sol.total_cost, "balls": len(sol.balls)})
            fits.append({"eps": float(eps), "gamma": float(gamma), **fit_slope(ns, raws)})
    e0, g0 = min(eps_ladder), min(gamma_ladder)
    sel = next(f for f in fits if f["eps"] == e0 and f["gamma"] == g0)
    diag = {
        "grid": grid,
        "fits": fits,
        "selected_fit": sel,
        "n_window": ns,
        "eps_ladder": [float(e) for e in eps_ladder],
        "gamma_ladder": [float(g) for g in gamma_ladder],
        "rule": "least-squares slope of raw vs n at smallest eps and smallest gamma",
        "strategy": strategy,
    }
    return PressureEstimate(sel["slope"], "spanning", diag)


def partition_entropies(model: LinearPHModel, patch: LeafPatch, partition: Partition, n_max: int) -> tuple[np.ndarray, float]:
    """H_n for 1 <= n <= n_max (index n-1) and the fraction of orbit points near a cell face."""
    pts = patch.points()
    codes = itineraries(model, partition, pts, n_max)
    w = patch.weights
    label = np.zeros(patch.size, dtype=np.int64)
    hs = np.empty(n_max)
    for n in range(n_max):
        _, label = np.unique(label * partition.n_cells + codes[n], return_inverse=True)
        label = label.ravel()
        mass = np.bincount(label, weights=w)
        hs[n] = -float(np.sum(w * np.log(mass[label])))
    near = partition.boundary_distance(orbit_points(model, pts, n_max)) < BOUNDARY_MARGIN
    return hs, float(near.mean())


def entropy_partition(model: LinearPHModel, patch: LeafPatch, partition: Partition, n_window) -> PressureEstimate:
    """Slope in n of the conditional information H(alpha_0^{n-1} | leaf) on the patch."""
    ns = _check_ladders(n_window)
    hs, near = partition_entropies(model, patch, partition, ns[-1])
    raws = [float(hs[n - 1]) for n in ns]
    fit = fit_slope(ns, raws)
    diag = {
        "grid": [{"n": n, "eps": partition.cell_side, "gamma": None, "raw": r} for n, r in zip(ns, raws)],
        "fits": [{"eps": partition.cell_side, "gamma": None, **fit}],
        "n_window": ns,
        "rule": "least-squares slope of H_n vs n",
        "degenerate_partition": partition.n_cells < 2,
        "boundary_fraction": near,
        "boundary_flag": near > BOUNDARY_FLAG_FRACTION,
    }
    value = 0.0 if partition.n_cells < 2 else fit["slope"]
    return PressureEstimate(value, "entropy-partition", diag)


def ball_masses(model, patch, n, eps) -> np.ndarray:
    lo, hi = ball_ranges(model, patch, n, eps)
    prefix = np.concatenate([[0.0], np.cumsum(patch.weights)])
    return prefix[hi] - prefix[lo]


def entropy_brinkatok(model: LinearPHModel, patch: LeafPatch, n_window, eps_ladder) -> PressureEstimate:
    """Slope in n of the mean of -log(mass of the (n, eps) u-Bowen ball) over sample centers."""
    ns = _check_ladders(n_window, eps_ladder)
    grid, fits = [], []
    for eps in eps_ladder:
        raws = []
        for n in ns:
            raw = float(np.sum(patch.weights * -np.log(ball_masses(model, patch, n, eps))))
            raws.append(raw)
            grid.append({"n": n, "eps": float(eps), "gamma": None, "raw": raw})
        fits.append({"eps": float(eps), "gamma": None, **fit_slope(ns, raws)})
    sel = next(f for f in fits if f["eps"] == min(eps_ladder))
    diag = {
        "grid": grid,
        "fits": fits,
        "selected_fit": sel,
        "n_window": ns,
        "eps_ladder": [float(e) for e in eps_ladder],
        "rule": "least-squares slope of mean -log ball mass vs n at smallest eps",
    }
    return PressureEstimate(sel["slope"], "entropy-brinkatok", diag)


def local_exponents(model, patch, table, n, eps) -> np.ndarray:
    """Per-sample finite-n critical exponent (-log ball mass + log g_n) / n."""
    return (-np.log(ball_masses(model, patch, n, eps)) + table[n]) / n


def trim_target(model, patch, table, n, eps, gamma) -> np.ndarray:
    """Boolean target mask after dropping up to gamma mass, largest local exponents first."""
    keep = np.ones(patch.size, dtype=bool)
    if gamma <= 0:
        return keep
    e = local_exponents(model, patch, table, n, eps)
    order = np.lexsort((np.arange(patch.size), -e))
    dropped = np.cumsum(patch.weights[order])
    keep[order[dropped <= gamma + 1e-12]] = False
    if not keep.any():
        keep[order[-1]] = True
    return keep


def _variable_depth_candidates(model, patch, table, depths, eps) -> Candidates:
    return Candidates.concat([depth_candidates(model, patch, table, n, eps) for n in depths])


def bowen_pressure(
    model: LinearPHModel,
    patch: LeafPatch,
    pot: PotentialSeq,
    eps: float,
    n_min: int,
    n_max: int,
    s_bracket=None,
    target=None,
    strategy: str = "greedy",
    tol: float = 1e-3,
    table: np.ndarray | None = None,
) -> PressureEstimate:
    """Critical exponent s* where the cheapest variable-depth cover cost crosses 1.

    Balls (center, n) with n_min <= n <= n_max cost exp(-s n + sup log g_n);
    the target samples must be covered completely.  s* is located by bisection.
    """
    if n_min >= n_max:
        raise ValueError("need n_min < n_max")
    if table is None:
        table = potential_table(model, patch, pot, n_max)
    target = np.ones(patch.size, dtype=bool) if target is None else np.asarray(target, dtype=bool)
    depths = list(range(n_min, n_max + 1))
    cands = _variable_depth_candidates(model, patch, table, depths, eps)
    base_cost = cands.cost
    trace = []

    def log_cost(s):
        pick = solve_cover(cands.with_cost(base_cost - s * cands.depth), patch.weights, target, None, strategy)
        trace.append((float(s), pick.total_cost))
        return pick.total_cost, pick

    if s_bracket is None:
        s0 = float(np.median(table[n_max][target])) / n_max
        s_lo, s_hi = s0 - 1.0, s0 + math.log(max(int(target.sum()), 2)) / n_min + 1.0
    else:
        s_lo, s_hi = map(float, s_bracket)
    flags = []
    width = max(s_hi - s_lo, 1.0)
    for _ in range(MAX_WIDENINGS):
        if log_cost(s_hi)[0] < 0:
            break
        s_hi += width
        width *= 2
    else:
        raise BracketFailure("cover cost stays >= 1 on the upper side")
    width = max(s_hi - s_lo, 1.0)
    at_edge = False
    for _ in range(MAX_WIDENINGS):
        if log_cost(s_lo)[0] > 0:
            break
        s_lo -= width
        width *= 2
    else:
        at_edge = True
        flags.append("AtBracketEdge")
    if at_edge:
        value = s_lo
    else:
        while s_hi - s_lo > tol:
            mid = 0.5 * (s_lo + s_hi)
            if log_cost(mid)[0] > 0:
                s_lo = mid
            else:
                s_hi = mid
        value = 0.5 * (s_lo + s_hi)
    _, pick = log_cost(value)
    depth_counts = {int(n): int(np.sum(cands.depth[pick.chosen] == n)) for n in depths}
    diag = {
        "grid": [{"n": None, "eps": float(eps), "gamma": None, "s": s, "raw": c} for s, c in trace],
        "eps": float(eps),
        "n_min": n_min,
        "n_max": n_max,
        "bracket": [s_lo, s_hi],
        "tol": tol,
        "flags": flags,
        "final_depth_counts": depth_counts,
        "target_mass": float(patch.weights[target].sum()),
        "rule": "bisection on log(min cover cost) = 0",
        "strategy": strategy,
    }
    return PressureEstimate(float(value), "bowen", diag)


def bowen_metric_pressure(
    model: LinearPHModel,
    patch: LeafPatch,
    pot: PotentialSeq,
    eps: float,
    gamma: float,
    n_min: int,
    n_max: int,
    strategy: str = "greedy",
    tol: float = 1e-3,
) -> PressureEstimate:
    """Bowen pressure of the patch after trimming gamma mass of the highest local exponents."""
    table = potential_table(model, patch, pot, n_max)
    target = trim_target(model, patch, table, n_max, eps, gamma)
    est = bowen_pressure(model, patch, pot, eps, n_min, n_max, target=target, strategy=strategy, tol=tol, table=table)
    est.diagnostics["gamma"] = float(gamma)
    est.diagnostics["metric"] = True
    return est


def capacity_costs(model, patch, pot, eps, ns, target, strategy="greedy", table=None) -> list[float]:
    """log Lambda_n: cheapest fixed-depth-n cover of the target samples, per n."""
    if table is None:
        table = potential_table(model, patch, pot, max(ns))
    out = []
    for n in ns:
        cands = depth_candidates(model, patch, table, n, eps)
        out.append(solve_cover(cands, patch.weights, target, None, strategy).total_cost)
    return out


def capacity_pressure(
    model: LinearPHModel,
    patch: LeafPatch,
    pot: PotentialSeq,
    eps: float,
    n_window,
    gamma: float,
    strategy: str = "greedy",
    target=None,
) -> tuple[PressureEstimate, PressureEstimate]:
    """Lower/upper capacity pressure: min/max over the window of (1/n) log Lambda_n."""
    ns = _check_ladders(n_window)
    table = potential_table(model, patch, pot, ns[-1])
    if target is None:
        target = trim_target(model, patch, table, ns[-1], eps, gamma)
    raws = capacity_costs(model, patch, pot, eps, ns, target, strategy, table)
    rates = [r / n for r, n in zip(raws, ns)]
    grid = [{"n": n, "eps": float(eps), "gamma": float(gamma), "raw": r, "rate": q} for n, r, q in zip(ns, raws, rates)]
    base = {
        "grid": grid,
        "n_window": ns,
        "eps": float(eps),
        "gamma": float(gamma),
        "target_mass": float(patch.weights[target].sum()),
        "strategy": strategy,
        "fits": [{"eps": float(eps), "gamma": float(gamma), **fit_slope(ns, raws)}],
    }
    lower = PressureEstimate(min(rates), "capacity-lower", dict(base, rule="min over window of raw / n"))
    upper = PressureEstimate(max(rates), "capacity-upper", dict(base, rule="max over window of raw / n"))
    return lower, upper


@dataclass(frozen=True)
class RegularSet:
    patch: LeafPatch
    fraction: float
    kept: np.ndarray


def restrict_to_regular_set(
    model: LinearPHModel,
    patch: LeafPatch,
    pot: PotentialSeq,
    n0: int,
    eps: float,
    tol: float,
    rate: str = "leaf",
) -> RegularSet:
    """Keep samples whose finite-n0 local entropy and potential rates sit within tol of the medians.

    With rate="leaf" the local entropy rate uses the leaf length of the
    (n0, eps) u-Bowen ball against the leaf-Lebesgue density of the patch, so it
    is not truncated by the patch ends.  rate="patch" uses the sampled ball
    mass instead, which is smaller near the ends.
    """
    if n0 < 4:
        raise ValueError("n0 must be >= 4")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if rate == "leaf":
        ball_len = 2.0 * eps / leaf_expansion(model, n0)
        density = 1.0 / (2.0 * patch.radius)
        entropy_rate = np.full(patch.size, -math.log(ball_len * density) / n0)
    elif rate == "patch":
        entropy_rate = -np.log(ball_masses(model, patch, n0, eps)) / n0
    else:
        raise ValueError(f"unknown rate mode {rate!r}")
    pot_rate = pot.table(model, patch.points(), n0)[n0] / n0

    def near_median(v):
        med = np.sort(v)[(v.size - 1) // 2]
        return np.abs(v - med) <= tol

    keep = near_median(entropy_rate) & near_median(pot_rate)
    if not keep.any():
        raise EmptySurvivors("no sample is regular at this tolerance")
    kept = np.flatnonzero(keep)
    return RegularSet(patch.subset(kept), float(patch.weights[kept].sum()), kept)


__all__ = [
    "CoverSolution",
    "PressureEstimate",
    "Infeasible",
    "spanning_cost",
    "spanning_pressure",
    "entropy_partition",
    "entropy_brinkatok",
    "bowen_pressure",
    "bowen_metric_pressure",
    "capacity_pressure",
    "restrict_to_regular_set",
]
