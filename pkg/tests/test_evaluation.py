"""Metric, R^2, and regional aggregation oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stocast.errors import ContractError, InputError
from stocast.evaluation import (
    MetricReport,
    affected_residents,
    aggregate_regions,
    metrics,
    r_squared,
    write_metric_csv,
)
from stocast.grid import Grid, GridSpec


def _square_grid(n_rows=2, n_cols=2):
    spec = GridSpec(origin_lat=0.0, origin_lon=0.0, cell_km=111.1949,
                    n_rows=n_rows, n_cols=n_cols, ref_lat=0.0)
    return Grid(spec)


# -- metrics ------------------------------------------------------------------------

def test_metrics_perfect():
    pred = np.array([[1.0, 2.0], [3.0, 0.0]])
    rep = metrics(pred, pred, split="train")
    assert rep.as_dict() == {"MAE": 0.0, "MSE": 0.0, "WHL": 0.0}
    assert rep.split == "train"
    assert rep.n_samples == 2


def test_metrics_single_element():
    # y=2, f=0: |e|=2 within delta -> quadratic branch; y <= 5 -> weight 1
    rep = metrics(np.array([0.0]), np.array([2.0]))
    assert rep.mae == 2.0
    assert rep.mse == 4.0
    assert rep.whl == 2.0


def test_metrics_weighted_branch():
    # y=6 > t=5 -> weight 1000; e=1 quadratic -> 0.5 * 1000
    rep = metrics(np.array([5.0]), np.array([6.0]))
    assert rep.whl == 500.0


@given(st.integers(1, 50), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_metrics_mae_le_rmse(n, seed):
    rng = np.random.default_rng(seed)
    pred = rng.normal(size=n) * 10
    obs = rng.normal(size=n) * 10
    rep = metrics(pred, obs)
    assert rep.mae <= np.sqrt(rep.mse) + 1e-12


def test_metrics_permutation_invariant():
    rng = np.random.default_rng(5)
    pred = rng.normal(size=40)
    obs = rng.normal(size=40)
    perm = rng.permutation(40)
    a = metrics(pred, obs)
    b = metrics(pred[perm], obs[perm])
    assert a.mae == pytest.approx(b.mae, abs=1e-12)
    assert a.mse == pytest.approx(b.mse, abs=1e-12)
    assert a.whl == pytest.approx(b.whl, abs=1e-12)


def test_metrics_rejects_empty_and_mismatched():
    with pytest.raises(ContractError):
        metrics(np.empty(0), np.empty(0))
    with pytest.raises(ContractError):
        metrics(np.zeros(3), np.zeros(4))


# -- r_squared ----------------------------------------------------------------------

def test_r_squared_perfect():
    obs = np.array([1.0, 2.0, 3.0])
    assert r_squared(obs, obs) == 1.0


def test_r_squared_constant_mean():
    obs = np.array([1.0, 2.0, 3.0])
    pred = np.full(3, obs.mean())
    assert r_squared(pred, obs) == pytest.approx(0.0, abs=1e-15)


def test_r_squared_frozen_negative():
    # SS_res = 4, SS_tot = 2 -> 1 - 2 = -1
    assert r_squared(np.array([1.0, 2.0, 5.0]), np.array([1.0, 2.0, 3.0])) == -1.0


def test_r_squared_zero_variance_nan():
    out = r_squared(np.array([1.0, 2.0]), np.array([3.0, 3.0]))
    assert np.isnan(out)


def test_r_squared_needs_two_units():
    with pytest.raises(ContractError):
        r_squared(np.array([1.0]), np.array([1.0]))


# -- aggregate_regions --------------------------------------------------------------

def test_aggregate_single_region_total():
    grid = _square_grid()
    grid.county_id = ["X"] * 4
    values = np.array([1.0, 2.0, 3.0, 4.0])
    assert aggregate_regions(values, grid, "county") == {"X": 10.0}


def test_aggregate_partition():
    grid = _square_grid()
    grid.town_id = ["a", "a", "b", "b"]
    values = np.array([1.0, 2.0, 3.0, 4.0])
    totals = aggregate_regions(values, grid, "town")
    assert totals == {"a": 3.0, "b": 7.0}
    assert sum(totals.values()) == values.sum()


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20, deadline=None)
def test_aggregate_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    grid = _square_grid(3, 4)
    names = ["r%d" % k for k in range(4)]
    ids = [names[i] for i in rng.integers(0, 4, size=12)]
    grid.city_id = ids
    values = rng.normal(size=12) ** 2
    totals = aggregate_regions(values, grid, "city")
    expected = {}
    for i, rid in enumerate(ids):
        expected[rid] = expected.get(rid, 0.0) + values[i]
    assert set(totals) == set(expected)
    for rid in expected:
        assert totals[rid] == pytest.approx(expected[rid], abs=1e-12)
    assert list(totals) == sorted(totals)


def test_aggregate_missing_id_on_active_cell():
    grid = _square_grid()
    grid.town_id = ["a", None, "b", "b"]
    values = np.array([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(InputError, match="1"):
        aggregate_regions(values, grid, "town")
    # zero-valued cells without an id are tolerated
    values[1] = 0.0
    assert aggregate_regions(values, grid, "town") == {"a": 1.0, "b": 7.0}


def test_aggregate_cells_subset():
    grid = _square_grid()
    grid.town_id = ["a", None, "b", "b"]
    values = np.array([1.0, 5.0, 3.0, 4.0])
    assert aggregate_regions(values, grid, "town", cells=[0, 2]) == {
        "a": 1.0, "b": 3.0,
    }
    with pytest.raises(InputError):
        aggregate_regions(values, grid, "town", cells=[0, 1])


def test_aggregate_unknown_level():
    grid = _square_grid()
    with pytest.raises(InputError):
        aggregate_regions(np.zeros(4), grid, "planet")


# -- affected_residents -------------------------------------------------------------

def test_affected_residents_frozen():
    grid = _square_grid()
    grid.population = np.array([1000.0, 500.0, 0.0, 100.0])
    grid.transformer_count = np.array([10, 5, 4, 0])
    acc = np.array([2.0, 5.0, 1.0, 3.0])
    out = affected_residents(acc, grid)
    # 1000 * 2/10 = 200; full outage -> full population; C=0 -> 0
    assert out[0] == 200.0
    assert out[1] == 500.0
    assert out[2] == 0.0
    assert out[3] == 0.0


def test_affected_residents_clamped():
    grid = _square_grid()
    grid.population = np.full(4, 100.0)
    grid.transformer_count = np.full(4, 2)
    out = affected_residents(np.array([3.0, 2.0, 1.0, 0.0]), grid)
    assert out.tolist() == [100.0, 100.0, 50.0, 0.0]


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20, deadline=None)
def test_affected_residents_brute_force(seed):
    rng = np.random.default_rng(seed)
    grid = _square_grid(3, 3)
    grid.population = rng.integers(0, 5000, size=9).astype(np.float64)
    grid.transformer_count = rng.integers(0, 20, size=9)
    acc = rng.uniform(0, 25, size=9)
    out = affected_residents(acc, grid)
    for i in range(9):
        c = grid.transformer_count[i]
        frac = 0.0 if c == 0 else min(max(acc[i] / c, 0.0), 1.0)
        assert out[i] == pytest.approx(grid.population[i] * frac, abs=1e-9)
    assert out.sum() == pytest.approx(
        sum(out[i] for i in range(9)), abs=1e-9
    )


# -- CSV export ---------------------------------------------------------------------

def test_write_metric_csv(tmp_path):
    reports = [
        MetricReport(split="training", mae=1.5, mse=4.25, whl=2.0, n_samples=10),
        MetricReport(split="test-event", mae=0.5, mse=1.0, whl=0.75, n_samples=4),
    ]
    p = tmp_path / "metrics.csv"
    write_metric_csv(p, reports)
    lines = p.read_text().strip().split("\n")
    assert lines[0] == "split,MAE,MSE,WHL,n_samples"
    assert lines[1].startswith("training,1.5,4.25,2.0,10")
    assert len(lines) == 3
