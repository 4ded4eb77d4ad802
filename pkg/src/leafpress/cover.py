"""Weighted set cover over u-Bowen balls on a one-dimensional leaf patch.

Candidate balls are contiguous index ranges [lo, hi) of the sorted patch.  A
ball costs exp(cost) (costs are stored in log domain).  The greedy solver picks,
at each step, the ball maximizing newly covered target mass / exp(cost), ties
going to the lowest candidate index.  The exhaustive solver is a subset DP over
the target samples and is only legal for at most 16 of them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import logsumexp

from .errors import FixtureTooLarge, Infeasible

EXHAUSTIVE_MAX = 16
MASS_TOL = 1e-12


@dataclass(frozen=True)
class Candidates:
    lo: np.ndarray
    hi: np.ndarray
    center: np.ndarray
    depth: np.ndarray
    cost: np.ndarray

    def __len__(self):
        return int(self.lo.size)

    @staticmethod
    def concat(parts: list["Candidates"]) -> "Candidates":
        return Candidates(*(np.concatenate([getattr(p, f) for p in parts]) for f in ("lo", "hi", "center", "depth", "cost")))

    def with_cost(self, cost: np.ndarray) -> "Candidates":
        return Candidates(self.lo, self.hi, self.center, self.depth, np.asarray(cost, dtype=float))


@dataclass(frozen=True)
class CoverPick:
    chosen: np.ndarray  # candidate indices in pick order
    total_cost: float  # log of the summed linear cost
    target_mass: float  # covered mass of the target set
    union_mass: float  # covered mass of the whole patch


@numba.njit(cache=True)
def _heap_less(ka, ia, kb, ib):
    return ka < kb or (ka == kb and ia < ib)


@numba.njit(cache=True)
def _heap_push(keys, idx, size, k, i):
    pos = size
    keys[pos] = k
    idx[pos] = i
    while pos > 0:
        parent = (pos - 1) >> 1
        if _heap_less(keys[pos], idx[pos], keys[parent], idx[parent]):
            keys[pos], keys[parent] = keys[parent], keys[pos]
            idx[pos], idx[parent] = idx[parent], idx[pos]
            pos = parent
        else:
            break
    return size + 1


@numba.njit(cache=True)
def _heap_pop(keys, idx, size):
    k0 = keys[0]
    i0 = idx[0]
    size -= 1
    keys[0] = keys[size]
    idx[0] = idx[size]
    pos = 0
    while True:
        left = 2 * pos + 1
        if left >= size:
            break
        best = left
        right = left + 1
        if right < size and _heap_less(keys[right], idx[right], keys[left], idx[left]):
            best = right
        if _heap_less(keys[best], idx[best], keys[pos], idx[pos]):
            keys[pos], keys[best] = keys[best], keys[pos]
            idx[pos], idx[best] = idx[best], idx[pos]
            pos = best
        else:
            break
    return k0, i0, size


@numba.njit(cache=True)
def _greedy_kernel(lo, hi, cost, units, log_unit, required):
    m = lo.size
    remaining = units.copy()
    prefix = np.zeros(units.size + 1)
    for j in range(units.size):
        prefix[j + 1] = prefix[j] + units[j]
    keys = np.empty(m)
    idx = np.empty(m, dtype=np.int64)
    size = 0
    for c in range(m):
        # gains are capped at the mass still required (partial-cover greedy)
        g = min(prefix[hi[c]] - prefix[lo[c]], required)
        if g > 0:
            size = _heap_push(keys, idx, size, -(np.log(g) + log_unit - cost[c]), c)
    chosen = np.empty(m, dtype=np.int64)
    n_chosen = 0
    covered = 0.0
    while covered < required and size > 0:
        _, c, size = _heap_pop(keys, idx, size)
        g = 0.0
        for j in range(lo[c], hi[c]):
            g += remaining[j]
        if g <= 0:
            continue
        k = -(np.log(min(g, required - covered)) + log_unit - cost[c])
        if size > 0 and _heap_less(keys[0], idx[0], k, c):
            size = _heap_push(keys, idx, size, k, c)
            continue
        chosen[n_chosen] = c
        n_chosen += 1
        covered += g
        for j in range(lo[c], hi[c]):
            remaining[j] = 0.0
    return chosen[:n_chosen], covered


@numba.njit(cache=True)
def _logadd(a, b):
    if a == -np.inf:
        return b
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + np.log1p(np.exp(lo - hi))


@numba.njit(cache=True)
def _subset_dp(masks, cost, size):
    """dp[mask] = log of the cheapest summed cost of a family covering exactly mask."""
    dp = np.full(size, np.inf)
    parent = np.full(size, -1, dtype=np.int64)
    via = np.full(size, -1, dtype=np.int64)
    dp[0] = -np.inf
    for m in range(size):
        if dp[m] == np.inf:
            continue
        for c in range(masks.size):
            nm = m | masks[c]
            val = _logadd(dp[m], cost[c])
            # strict improvement keeps the lowest candidate index among ties
            if val < dp[nm]:
                dp[nm] = val
                parent[nm] = m
                via[nm] = c
    return dp, parent, via


def _units(weights: np.ndarray, target: np.ndarray):
    """(units, unit mass, integral?) with mass = units * unit."""
    tw = weights[target]
    if tw.size and np.all(tw == tw[0]):
        # integer units keep gain ties exact
        return target.astype(float), float(tw[0]), True
    return np.where(target, weights, 0.0), 1.0, False


def union_mass(cands: Candidates, chosen, weights: np.ndarray) -> float:
    covered = np.zeros(weights.size, dtype=bool)
    for c in chosen:
        covered[cands.lo[c] : cands.hi[c]] = True
    return float(weights[covered].sum())


def greedy_cover(cands: Candidates, weights: np.ndarray, target=None, required: float | None = None) -> CoverPick:
    """Greedy cover of at least `required` target mass (default: all of it)."""
    weights = np.asarray(weights, dtype=float)
    target = np.ones(weights.size, dtype=bool) if target is None else np.asarray(target, dtype=bool)
    units, unit, integral = _units(weights, target)
    target_total = float(weights[target].sum())
    req = target_total if required is None else min(required, target_total)
    req_units = np.ceil(req / unit - 1e-9) if integral else req - MASS_TOL
    chosen, covered = _greedy_kernel(
        cands.lo.astype(np.int64), cands.hi.astype(np.int64), cands.cost.astype(float), units, np.log(unit), float(req_units)
    )
    if covered < req_units:
        raise Infeasible(f"candidates cover only {covered * unit:.6g} of required {req:.6g}")
    total = float(logsumexp(cands.cost[chosen])) if chosen.size else -np.inf
    return CoverPick(chosen, total, float(covered * unit), union_mass(cands, chosen, weights))


def exhaustive_cover(cands: Candidates, weights: np.ndarray, target=None, required: float | None = None) -> CoverPick:
    """Exact minimum-cost cover by dynamic programming over target subsets."""
    weights = np.asarray(weights, dtype=float)
    target = np.ones(weights.size, dtype=bool) if target is None else np.asarray(target, dtype=bool)
    tidx = np.flatnonzero(target)
    if tidx.size > EXHAUSTIVE_MAX:
        raise FixtureTooLarge(f"exhaustive cover needs <= {EXHAUSTIVE_MAX} target samples, got {tidx.size}")
    nbits = tidx.size
    req = float(weights[tidx].sum()) if required is None else required
    pos = np.searchsorted(tidx, np.arange(weights.size))
    masks = np.zeros(len(cands), dtype=np.int64)
    for c in range(len(cands)):
        a, b = pos[cands.lo[c]], pos[cands.hi[c]] if cands.hi[c] < weights.size else nbits
        masks[c] = ((1 << b) - 1) ^ ((1 << a) - 1)
    size = 1 << nbits
    dp, parent, via = _subset_dp(masks, cands.cost.astype(float), size)
    bits = ((np.arange(size)[:, None] >> np.arange(nbits)[None, :]) & 1).astype(bool)
    mass = bits @ weights[tidx] if nbits else np.zeros(1)
    ok = mass >= req - MASS_TOL
    if not np.any(ok & (dp < np.inf)):
        raise Infeasible("no candidate subset reaches the required mass")
    best = int(np.flatnonzero(ok)[np.argmin(dp[ok])])
    chosen = []
    m = best
    while m != 0:
        chosen.append(int(via[m]))
        m = int(parent[m])
    chosen = np.array(chosen[::-1], dtype=np.int64)
    total = float(dp[best])
    return CoverPick(chosen, total, float(mass[best]), union_mass(cands, chosen, weights))


def solve_cover(cands: Candidates, weights, target=None, required=None, strategy: str = "greedy") -> CoverPick:
    if strategy == "greedy":
        return greedy_cover(cands, weights, target, required)
    if strategy == "exhaustive":
        return exhaustive_cover(cands, weights, target, required)
    raise ValueError(f"unknown cover strategy {strategy!r}")
