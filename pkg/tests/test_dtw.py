import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvdtw import Band, DistanceMatrix, dtw, dtw_path, distance_matrix, lb_keogh
from pvdtw.signals import Fleet, PanelSeries

from conftest import mini_fleet
from oracles import check_path_invariants, dtw_brute, path_cost

finite = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)
short_seq = st.lists(finite, min_size=1, max_size=16)


def test_known_values_match_brute_force():
    # Frozen expected values, confirmed against exhaustive path enumeration.
    assert dtw_brute([1, 2, 3], [1, 2, 2, 3]) == 0.0
    assert dtw([1, 2, 3], [1, 2, 2, 3]) == 0.0
    assert dtw_brute([0, 0, 0], [1, 1, 1]) == pytest.approx(math.sqrt(3), abs=1e-12)
    assert dtw([0, 0, 0], [1, 1, 1]) == pytest.approx(math.sqrt(3), abs=1e-12)


def test_matches_brute_force_on_random_short_pairs():
    rng = np.random.default_rng(42)
    for _ in range(60):
        n, m = rng.integers(1, 9, size=2)
        x = rng.normal(size=n)
        y = rng.normal(size=m)
        assert dtw(x, y) == pytest.approx(dtw_brute(x, y), abs=1e-9)
        radius = int(rng.integers(abs(n - m), 9))
        assert dtw(x, y, Band(radius)) == pytest.approx(
            dtw_brute(x, y, radius), abs=1e-9
        )


@given(short_seq)
def test_self_distance_is_zero(xs):
    assert dtw(xs, xs) == 0.0


@given(short_seq, short_seq)
def test_symmetry_and_nonnegativity(xs, ys):
    d = dtw(xs, ys)
    assert d >= 0.0
    assert d == dtw(ys, xs)


@given(st.lists(finite, min_size=2, max_size=12), st.data())
def test_band_monotonicity(xs, data):
    ys = data.draw(st.lists(finite, min_size=len(xs), max_size=len(xs)))
    r1 = data.draw(st.integers(min_value=0, max_value=12))
    r2 = data.draw(st.integers(min_value=r1, max_value=13))
    assert dtw(xs, ys, Band(r1)) >= dtw(xs, ys, Band(r2))


@given(short_seq, short_seq)
def test_radius_covering_everything_equals_unconstrained(xs, ys):
    radius = max(len(xs), len(ys))
    assert dtw(xs, ys, Band(radius + 3)) == dtw(xs, ys)


@given(st.lists(finite, min_size=1, max_size=16), st.data())
def test_radius_zero_is_euclidean(xs, data):
    ys = data.draw(st.lists(finite, min_size=len(xs), max_size=len(xs)))
    expected = math.sqrt(math.fsum((a - b) ** 2 for a, b in zip(xs, ys)))
    assert dtw(xs, ys, Band(0)) == pytest.approx(expected, abs=1e-12)


def test_input_validation():
    with pytest.raises(ValueError):
        dtw([], [1.0])
    with pytest.raises(ValueError):
        dtw([1.0, np.nan], [1.0])
    with pytest.raises(ValueError):
        dtw([1.0], [np.inf])
    with pytest.raises(ValueError):
        dtw([1, 2, 3, 4, 5], [1.0], Band(2))  # radius < length difference
    with pytest.raises(ValueError):
        Band(-1)
    with pytest.raises(ValueError):
        lb_keogh([1, 2], [1, 2, 3], 1)


def test_path_on_identical_inputs_is_the_diagonal():
    x = [3.0, 1.0, 4.0, 1.0]
    d, path = dtw_path(x, x)
    assert d == 0.0
    assert [tuple(p) for p in path] == [(0, 0), (1, 1), (2, 2), (3, 3)]


def test_path_aligns_repeated_sample():
    # x index 1 must absorb both middle samples of y; verified by hand
    # against the zero-cost alignments and the deterministic tie-break.
    d, path = dtw_path([1, 2, 3], [1, 2, 2, 3])
    assert d == 0.0
    assert [tuple(p) for p in path] == [(0, 0), (1, 1), (1, 2), (2, 3)]


@given(short_seq, short_seq)
def test_path_invariants_and_cost_consistency(xs, ys):
    d, path = dtw_path(xs, ys)
    check_path_invariants(path, len(xs), len(ys))
    assert path_cost(xs, ys, path) == pytest.approx(d, abs=1e-9)
    assert d == dtw(xs, ys)  # both dynamic programs agree bitwise


@given(st.lists(finite, min_size=2, max_size=12), st.data())
def test_banded_path_respects_band(xs, data):
    ys = data.draw(st.lists(finite, min_size=len(xs), max_size=len(xs)))
    radius = data.draw(st.integers(min_value=0, max_value=6))
    d, path = dtw_path(xs, ys, Band(radius))
    check_path_invariants(path, len(xs), len(ys), radius=radius)
    assert path_cost(xs, ys, path) == pytest.approx(d, abs=1e-9)


@given(st.lists(finite, min_size=1, max_size=16), st.data())
def test_lb_keogh_never_exceeds_dtw(xs, data):
    ys = data.draw(st.lists(finite, min_size=len(xs), max_size=len(xs)))
    radius = data.draw(st.integers(min_value=0, max_value=8))
    assert lb_keogh(xs, ys, radius) <= dtw(xs, ys, Band(radius)) + 1e-9


def test_lb_keogh_known_values():
    x = np.arange(6.0)
    assert lb_keogh(x, x, 2) == 0.0
    assert lb_keogh([0, 0, 0], [5, 5, 5], 0) == pytest.approx(math.sqrt(75), abs=1e-12)


def _fleet_of(arrays, period=60.0):
    return Fleet.build(
        PanelSeries(f"P{i:02d}", 0.0, values, period) for i, values in enumerate(arrays)
    )


def test_distance_matrix_identical_series_is_zero():
    fleet = _fleet_of([np.ones(5)] * 3)
    m = distance_matrix(fleet)
    assert np.array_equal(m.entries, np.zeros((3, 3)))


def test_distance_matrix_two_series():
    x = np.array([0.0, 1.0, 2.0])
    y = np.array([2.0, 2.0, 2.0])
    m = distance_matrix(_fleet_of([x, y]))
    d = dtw(x, y)
    assert np.array_equal(m.entries, np.array([[0.0, d], [d, 0.0]]))


def test_distance_matrix_separates_fault_groups():
    fleet, labels = mini_fleet(n_healthy=8, n_broken=4, seed=5)
    m = distance_matrix(fleet)
    healthy = [i for i, pid in enumerate(fleet.panel_ids) if labels[pid] == "healthy"]
    broken = [i for i, pid in enumerate(fleet.panel_ids) if labels[pid] == "abnormal"]
    cross = min(m.entries[i, j] for i in healthy for j in broken)
    within = max(m.entries[i, j] for i in healthy for j in healthy if i != j)
    assert cross > within


def test_distance_matrix_is_thread_invariant():
    fleet, _ = mini_fleet(n_healthy=3, n_broken=2, seed=9)
    serial = distance_matrix(fleet, threads=1)
    threaded = distance_matrix(fleet, threads=4)
    assert np.array_equal(serial.entries, threaded.entries)


def test_distance_matrix_preconditions():
    with pytest.raises(ValueError):
        distance_matrix(_fleet_of([np.ones(4)]))
    ragged = Fleet.build(
        [PanelSeries("a", 0.0, np.ones(4)), PanelSeries("b", 0.0, np.ones(5))]
    )
    with pytest.raises(ValueError):
        distance_matrix(ragged)


def test_distance_matrix_roundtrips_losslessly(tmp_path):
    fleet, _ = mini_fleet(n_healthy=3, n_broken=2, seed=2)
    m = distance_matrix(fleet)
    csv_path = tmp_path / "m.csv"
    m.to_csv(csv_path)
    back = DistanceMatrix.from_csv(csv_path)
    assert back.panel_ids == m.panel_ids
    assert np.array_equal(back.entries, m.entries)
    again = DistanceMatrix.from_json(m.to_json())
    assert again.panel_ids == m.panel_ids
    assert np.array_equal(again.entries, m.entries)


def test_distance_matrix_validation():
    with pytest.raises(ValueError):
        DistanceMatrix(("a", "b"), np.array([[0.0, 1.0], [2.0, 0.0]]))  # asymmetric
    with pytest.raises(ValueError):
        DistanceMatrix(("a", "b"), np.array([[0.5, 1.0], [1.0, 0.0]]))  # diagonal
    with pytest.raises(ValueError):
        DistanceMatrix(("a", "b"), np.array([[0.0, -1.0], [-1.0, 0.0]]))  # negative
