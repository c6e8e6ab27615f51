"""Synthetic generator oracles: fields, fragility process, round trips."""

import json
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stocast.errors import InputError
from stocast.grid import GridSpec
from stocast.ingest import TrackPoint, load_event_dir
from stocast.synthetic import (
    FragilityParams,
    RainParams,
    RegionConfig,
    StormParams,
    SyntheticConfig,
    analytic_panel,
    default_event_configs,
    default_region_config,
    event_truth,
    gen_event,
    gen_forecast_issue,
    gen_region,
    hazard,
    rain_at,
    sample_outages,
    wind_at,
)

SMALL_SPEC = GridSpec(origin_lat=27.0, origin_lon=118.0, cell_km=5.0,
                      n_rows=6, n_cols=8, ref_lat=27.1)


def _small_region(seed=3, n_transformers=150, n_stations=25):
    return gen_region(RegionConfig(grid_spec=SMALL_SPEC,
                                   n_transformers=n_transformers,
                                   n_stations=n_stations, seed=seed))


def _storm(v_max=40.0, r_max=15.0, alpha=0.6, start_hour=1000, n_hours=24):
    return StormParams(
        v_max=v_max, r_max_km=r_max, decay_alpha=alpha,
        waypoints=(
            TrackPoint(time=start_hour * 60, eye_lat=27.02, eye_lon=118.05),
            TrackPoint(time=(start_hour + n_hours) * 60,
                       eye_lat=27.25, eye_lon=118.38),
        ),
    )


def _config(event_id="ev", start_hour=1000, n_hours=24, v_max=40.0,
            fragility=None, obs_noise=0.0, seed=11):
    return SyntheticConfig(
        event_id=event_id, start_hour=start_hour, n_hours=n_hours,
        storm=_storm(v_max=v_max, start_hour=start_hour, n_hours=n_hours),
        rain=RainParams(peak_mm=30.0, e_fold_km=40.0),
        fragility=fragility or FragilityParams(beta0=-7.0, beta_w=0.12,
                                               beta_r=0.05),
        obs_noise=obs_noise, seed=seed,
    )


# -- analytic fields ---------------------------------------------------------------

def test_wind_at_rankine_knots():
    storm = _storm(v_max=50.0, r_max=40.0, alpha=0.6)
    assert wind_at(np.array([0.0]), storm)[0] == 0.0
    assert wind_at(np.array([40.0]), storm)[0] == 50.0
    # frozen: 50 * 0.5^0.6
    v = wind_at(np.array([80.0]), storm)[0]
    assert v == pytest.approx(50.0 * 0.5 ** 0.6, abs=1e-12)
    assert v == pytest.approx(32.99, abs=0.01)


def test_wind_at_continuous_at_r_max():
    storm = _storm(v_max=37.0, r_max=25.0, alpha=0.8)
    eps = 1e-9
    lo = wind_at(np.array([25.0 - eps]), storm)[0]
    hi = wind_at(np.array([25.0 + eps]), storm)[0]
    assert lo == pytest.approx(hi, abs=1e-6)


def test_rain_at_kernel():
    rain = RainParams(peak_mm=42.0, e_fold_km=55.0)
    assert rain_at(np.array([0.0]), rain)[0] == 42.0
    assert rain_at(np.array([55.0]), rain)[0] == pytest.approx(
        42.0 / math.e, abs=1e-12)


@given(st.floats(0.1, 500.0), st.floats(0.1, 500.0))
@settings(max_examples=50, deadline=None)
def test_fields_monotone_decreasing_outside(r1, r2):
    storm = _storm(v_max=40.0, r_max=0.5, alpha=0.7)
    rain = RainParams(peak_mm=30.0, e_fold_km=60.0)
    lo, hi = min(r1, r2), max(r1, r2)
    assert wind_at(np.array([hi]), storm)[0] <= wind_at(np.array([lo]), storm)[0] + 1e-12
    assert rain_at(np.array([hi]), rain)[0] <= rain_at(np.array([lo]), rain)[0] + 1e-12


def test_hazard_matches_logistic():
    frag = FragilityParams(beta0=-8.0, beta_w=0.1, beta_r=0.04)
    w, r = 35.0, 20.0
    x = -8.0 + 0.1 * w + 0.04 * r
    assert hazard(w, r, frag) == pytest.approx(1.0 / (1.0 + math.exp(-x)),
                                               abs=1e-15)


def test_hazard_neg_inf_sentinel_is_exact_zero():
    frag = FragilityParams(beta0=-math.inf, beta_w=0.0, beta_r=0.0)
    p = hazard(np.array([50.0, 0.0]), np.array([40.0, 0.0]), frag)
    assert (p == 0.0).all()


# -- config validation -------------------------------------------------------------

def test_config_validation():
    with pytest.raises(InputError):
        _storm(v_max=0.0)
    with pytest.raises(InputError):
        _storm(r_max=-1.0)
    with pytest.raises(InputError):
        _storm(alpha=0.0)
    with pytest.raises(InputError):
        _config(n_hours=11)
    with pytest.raises(InputError):
        RegionConfig(grid_spec=SMALL_SPEC, n_transformers=0)


# -- outage process ----------------------------------------------------------------

def test_zero_hazard_zero_outages():
    region = _small_region()
    cfg = _config(fragility=FragilityParams(beta0=-math.inf, beta_w=0.0,
                                            beta_r=0.0))
    assert sample_outages(region, cfg) == []


def test_binomial_expectation_no_weather_effect():
    # constant hazard sigma(b0) = 0.01 over 50 h and 1000 transformers:
    # E[total] = 1000 * (1 - 0.99^50) ~ 394.6, sd ~ 15.5
    region = gen_region(RegionConfig(grid_spec=SMALL_SPEC,
                                     n_transformers=1000, n_stations=5,
                                     seed=21))
    beta0 = math.log(0.01 / 0.99)
    cfg = _config(n_hours=50,
                  fragility=FragilityParams(beta0=beta0, beta_w=0.0,
                                            beta_r=0.0),
                  seed=17)
    total = len(sample_outages(region, cfg))
    q = 1.0 - 0.99 ** 50
    expect = 1000 * q
    sd = math.sqrt(1000 * q * (1 - q))
    assert abs(total - expect) < 3 * sd


def test_one_outage_per_transformer():
    region = _small_region()
    cfg = _config(v_max=55.0)
    outs = sample_outages(region, cfg)
    assert len(outs) > 0
    tids = [o["transformer_id"] for o in outs]
    assert len(tids) == len(set(tids))


def test_crn_monotone_in_intensity():
    region = _small_region()
    base = len(sample_outages(region, _config(v_max=25.0, seed=5)))
    for v in (30.0, 38.0, 50.0, 65.0):
        stronger = len(sample_outages(region, _config(v_max=v, seed=5)))
        assert stronger >= base
        base = stronger


def test_truth_deterministic():
    region = _small_region()
    t1 = event_truth(region, _config())
    t2 = event_truth(region, _config())
    assert t1 == t2


# -- file emission and ingest round trip ---------------------------------------------

def test_round_trip_counts_exact(tmp_path):
    region = _small_region()
    cfg = _config()
    truth = gen_event(region, cfg, tmp_path)
    panel, _ = load_event_dir(region.grid, tmp_path)
    assert panel.total_outages() == truth["total_outages"]
    expected = np.zeros((region.grid.n_cells, cfg.n_hours))
    for cell, h, v in truth["cell_hour_counts"]:
        expected[cell, h] = v
    assert np.array_equal(panel.O(), expected)


def test_zero_noise_ingest_no_warnings(tmp_path, caplog):
    region = _small_region()
    cfg = _config(obs_noise=0.0)
    gen_event(region, cfg, tmp_path)
    with caplog.at_level(logging.WARNING):
        load_event_dir(region.grid, tmp_path)
    assert caplog.records == []


def test_truth_file_matches_returned_dict(tmp_path):
    region = _small_region()
    cfg = _config()
    truth = gen_event(region, cfg, tmp_path)
    with open(tmp_path / "truth.json") as fh:
        on_disk = json.load(fh)
    assert on_disk == json.loads(json.dumps(truth))


def test_analytic_panel_matches_truth(tmp_path):
    region = _small_region()
    cfg = _config()
    truth = event_truth(region, cfg)
    panel = analytic_panel(region, cfg, truth)
    panel.validate(transformer_count=region.grid.transformer_count)
    assert panel.total_outages() == truth["total_outages"]
    # W field is the exact closed form at cell centers (f32 storage)
    from stocast.synthetic import analytic_fields
    w, r, d = analytic_fields(cfg, region.grid.center_lat,
                              region.grid.center_lon)
    assert np.allclose(panel.W(), w, rtol=1e-6)


# -- region -------------------------------------------------------------------------

def test_region_counts_match_transformer_file():
    region = _small_region()
    assert region.grid.transformer_count.sum() == 150
    from stocast.grid import assign_points
    lats = np.array([t.lat for t in region.transformers])
    lons = np.array([t.lon for t in region.transformers])
    ids = assign_points(region.grid.spec, lats, lons)
    assert (ids >= 0).all()
    counts = np.bincount(ids, minlength=region.grid.n_cells)
    assert np.array_equal(counts, region.grid.transformer_count)


def test_region_statics_valid():
    region = _small_region()
    g = region.grid
    assert (g.green_ratio + g.impervious_ratio <= 1.0 + 1e-12).all()
    assert (g.population >= 0).all()
    assert all(t is not None for t in g.town_id)
    assert all(c is not None for c in g.county_id)
    assert set(g.city_id) == {"CITY_W", "CITY_E"}


def test_default_region_and_storms():
    rc = default_region_config(seed=0)
    assert rc.grid_spec.n_cells == 1000
    assert rc.n_transformers == 5000
    cfgs = default_event_configs(seed=0)
    assert len(cfgs) == 4
    assert len({c.event_id for c in cfgs}) == 4
    assert all(c.n_hours == 66 for c in cfgs)


# -- forecast issues ----------------------------------------------------------------

def test_issue_zero_bias_equals_analytic_panel(tmp_path):
    region = _small_region()
    cfg = _config()
    panel = analytic_panel(region, cfg, event_truth(region, cfg))
    issue = gen_forecast_issue(region, cfg, issue_hour=cfg.start_hour,
                               horizon_hours=24, source_panel=panel)
    assert np.array_equal(issue.wind, panel.W().astype(np.float64))
    assert np.array_equal(issue.rain, panel.R().astype(np.float64))


def test_issue_wind_bias_scales():
    region = _small_region()
    cfg = _config()
    base = gen_forecast_issue(region, cfg, issue_hour=cfg.start_hour,
                              horizon_hours=12)
    biased = gen_forecast_issue(region, cfg, issue_hour=cfg.start_hour,
                                horizon_hours=12, wind_bias=1.3)
    assert np.allclose(biased.wind, 1.3 * base.wind, atol=1e-12)
    assert np.array_equal(biased.rain, base.rain)


def test_issue_noise_reproducible(tmp_path):
    region = _small_region()
    cfg = _config()
    a = gen_forecast_issue(region, cfg, issue_hour=cfg.start_hour,
                           horizon_hours=12, noise=0.1, seed=9)
    b = gen_forecast_issue(region, cfg, issue_hour=cfg.start_hour,
                           horizon_hours=12, noise=0.1, seed=9)
    assert np.array_equal(a.wind, b.wind)
    assert np.array_equal(a.rain, b.rain)
    c = gen_forecast_issue(region, cfg, issue_hour=cfg.start_hour,
                           horizon_hours=12, noise=0.1, seed=10)
    assert not np.array_equal(a.wind, c.wind)
    p = tmp_path / "issue.fcst"
    a.save(p)
    from stocast.forecasting import ForecastIssue
    loaded = ForecastIssue.load(p, grid=region.grid)
    assert np.array_equal(loaded.wind, a.wind)
    assert np.array_equal(loaded.rain, a.rain)
    assert loaded.issue_hour == a.issue_hour
    assert [(q.time, q.eye_lat, q.eye_lon) for q in loaded.track] == \
        [(q.time, q.eye_lat, q.eye_lon) for q in a.track]
