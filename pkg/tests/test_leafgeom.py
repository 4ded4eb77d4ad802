import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from leafpress.dynamics import CAT_MAP, TorusPoint, build_linear_model, sample_leaf_patch
from leafpress.errors import BadCellSide, LengthMismatch, OutOfRange
from leafpress.leafgeom import (
    ItineraryCode,
    ball_ranges,
    bowen_ball_members,
    build_partition,
    du_matrix,
    du_n,
    hamming_asymptotic_rate,
    hamming_ball_log_count,
    hamming_distance,
    itineraries,
    itinerary,
)

LAM = (3 + math.sqrt(5)) / 2
BASE = TorusPoint((0.1234, 0.5678))


def brute_ball_count(r, N, n):
    # enumerate every word and count those within Hamming radius r of the zero word
    limit = math.floor(n * r + 1e-9)
    return sum(1 for w in itertools.product(range(N), repeat=n) if sum(c != 0 for c in w) <= limit)


# Bowen metric


def test_du_examples(cat):
    p = sample_leaf_patch(cat, BASE, 0.5, 101)  # spacing 0.01
    assert du_n(cat, p, 4, 4, 3) == 0
    assert du_n(cat, p, 4, 5, 1) == pytest.approx(0.01, abs=1e-12)
    assert du_n(cat, p, 4, 5, 3) == pytest.approx(0.01 * LAM**2, abs=1e-9)
    assert du_n(cat, p, 4, 5, 3) == pytest.approx(0.0685410, abs=1e-7)


def test_du_metric_properties(cat):
    p = sample_leaf_patch(cat, BASE, 0.3, 15, "stratified-random", seed=2)
    for n in (1, 3, 6):
        d = du_matrix(cat, p, n)
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) == 0)
        tri = d[:, None, :] - (d[:, :, None] + d[None, :, :])
        assert tri.max() <= 1e-12
        assert np.all(du_matrix(cat, p, n + 1) >= d)


def test_ball_swallows_patch(cat):
    p = sample_leaf_patch(cat, BASE, 0.25, 11)
    assert bowen_ball_members(cat, p, 3, 1, 0.5) == set(range(11))


def test_tiny_ball_is_center(cat):
    p = sample_leaf_patch(cat, BASE, 0.25, 11)
    assert bowen_ball_members(cat, p, 3, 2, 1e-12) == {3}


def test_ball_closed_form_k101(cat):
    p = sample_leaf_patch(cat, BASE, 0.5, 101)
    c = 50
    radius = 0.05 / LAM**3
    assert radius == pytest.approx(0.0027864, abs=1e-7)
    expected = {j for j in range(101) if abs(p.params[j] - p.params[c]) <= radius}
    assert bowen_ball_members(cat, p, c, 4, 0.05) == expected == {50}
    lo, hi = ball_ranges(cat, p, 4, 0.05)
    assert (lo[c], hi[c]) == (50, 51)


@given(
    st.integers(2, 60),
    st.floats(0.01, 1.0),
    st.integers(1, 8),
    st.floats(1e-4, 1.0),
    st.sampled_from(["uniform-grid", "stratified-random"]),
    st.integers(0, 10),
)
def test_ball_ranges_match_brute_force(K, delta, n, eps, scheme, seed):
    m = build_linear_model(CAT_MAP)
    p = sample_leaf_patch(m, BASE, delta, K, scheme, seed)
    lo, hi = ball_ranges(m, p, n, eps)
    for c in range(K):
        members = bowen_ball_members(m, p, c, n, eps)
        assert members == set(range(lo[c], hi[c]))


def test_balls_are_nested_in_n(cat):
    p = sample_leaf_patch(cat, BASE, 0.5, 301)
    for n in range(1, 7):
        lo0, hi0 = ball_ranges(cat, p, n, 0.1)
        lo1, hi1 = ball_ranges(cat, p, n + 1, 0.1)
        assert np.all(lo1 >= lo0) and np.all(hi1 <= hi0)


# partitions and itineraries


def test_partition_sizes():
    assert build_partition(0.5, 2).n_cells == 4
    assert build_partition(0.1, 3).n_cells == 1000
    assert build_partition(1.0, 2).n_cells == 1


def test_bad_cell_side():
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(BadCellSide):
            build_partition(bad)


def test_row_major_reference():
    part = build_partition(0.5, 2)
    assert part.cell_index(TorusPoint((0.99, 0.01))) == 2
    assert part.cell_index(TorusPoint((0.5, 0.5))) == 3
    assert part.cell_index(TorusPoint((0.5, 0.0))) == 2
    assert part.cell_index(TorusPoint((0.0, 0.7))) == 1


def test_itinerary_two_steps(cat):
    # row-major ids: (0.5, 0.5) -> 3, f(0.5, 0.5) = (0.5, 0.0) -> 2
    assert itinerary(cat, build_partition(0.5), TorusPoint((0.5, 0.5)), 2).word == (3, 2)


def test_itinerary_fixed_point(cat):
    w = itinerary(cat, build_partition(0.25), TorusPoint((0.0, 0.0)), 9)
    assert len(w) == 9 and set(w.word) == {0}


def test_itinerary_length_one(cat):
    part = build_partition(0.25)
    y = TorusPoint((0.3, 0.8))
    assert itinerary(cat, part, y, 1).word == (int(part.cell_index(y)),)


def test_cell_diameter_bound():
    part = build_partition(0.3, 2)
    pts = np.random.default_rng(0).random((2000, 2))
    ids = part.cell_index(pts)
    for cid in np.unique(ids):
        sel = pts[ids == cid]
        span = sel.max(axis=0) - sel.min(axis=0)
        assert np.linalg.norm(span) <= 0.3 * math.sqrt(2) + 1e-12


def test_close_points_share_itinerary_away_from_faces(cat):
    # with no orbit point within eps of a face, du_n <= eps forces equal codes
    part = build_partition(0.25)
    p = sample_leaf_patch(cat, BASE, 0.2, 4001)
    n, eps = 5, 1e-3
    codes = itineraries(cat, part, p.points(), n)
    from leafpress.dynamics import orbit_points

    clear = (part.boundary_distance(orbit_points(cat, p.points(), n)) > eps).all(axis=0)
    lo, hi = ball_ranges(cat, p, n, eps)
    checked = 0
    for c in np.flatnonzero(clear)[::37]:
        for j in range(lo[c], hi[c]):
            if clear[j]:
                assert np.array_equal(codes[:, c], codes[:, j])
                checked += 1
    assert checked > 50


# Hamming combinatorics


def test_hamming_distance():
    assert hamming_distance((1, 2, 3, 4), (1, 2, 3, 4)) == 0
    assert hamming_distance((1, 2, 3, 4), (0, 0, 0, 0)) == 1
    assert hamming_distance(ItineraryCode((1, 2, 3, 4)), ItineraryCode((1, 2, 3, 0))) == 0.25
    with pytest.raises(LengthMismatch):
        hamming_distance((1, 2), (1, 2, 3))


def test_ball_count_examples():
    assert math.exp(hamming_ball_log_count(0.5, 2, 4)) == pytest.approx(11, abs=1e-9)
    assert hamming_ball_log_count(0.5, 2, 4) == pytest.approx(math.log(11), abs=1e-12)
    assert hamming_ball_log_count(0.05, 3, 10) == 0.0
    for n in (1, 7, 50):
        assert hamming_ball_log_count(1.0, 2, n) == pytest.approx(n * math.log(2), abs=1e-9)


@pytest.mark.parametrize("N,n", [(N, n) for N in (2, 3, 4) for n in range(1, 13) if N**n <= 5 * 10**4])
def test_ball_count_brute_force(N, n):
    for r in (0.0, 0.1, 0.25, 1 / 3, 0.5, 0.75, 1.0):
        assert hamming_ball_log_count(r, N, n) == pytest.approx(math.log(brute_ball_count(r, N, n)), abs=1e-9)


def test_ball_count_large_n_finite():
    v = hamming_ball_log_count(0.3, 5, 10**6)
    assert math.isfinite(v) and v > 0


def test_asymptotic_rate():
    assert hamming_asymptotic_rate(0.5, 2) == pytest.approx(math.log(2), abs=1e-12)
    assert hamming_asymptotic_rate(1e-12, 3) == pytest.approx(0, abs=1e-9)
    assert abs(hamming_ball_log_count(0.25, 3, 10**4) / 10**4 - hamming_asymptotic_rate(0.25, 3)) <= 0.01
    assert hamming_asymptotic_rate(2 / 3, 3) == pytest.approx(math.log(3), abs=1e-12)
    for bad in (0.0, 0.51, 0.9, -0.1):
        with pytest.raises(OutOfRange):
            hamming_asymptotic_rate(bad, 2)
