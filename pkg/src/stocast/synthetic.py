"""Synthetic cyclone events with analytically known ground truth.

A region (grid statics, transformer and station placement) is generated
once and shared by all storms so leave-one-storm-out training sees the
same cells across events.  Each storm is a modified-Rankine vortex moving
along a waypoint track with an exponential rain kernel; transformers fail
as a discrete-time survival process with a logistic per-hour hazard in
wind and rain.  Everything is emitted in the ingest CSV formats plus a
truth.json carrying the analytic parameters and every sampled outage.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .forecasting import ForecastIssue
from .grid import Grid, GridCell, GridSpec, assign_points, haversine_km_many
from .ingest import (
    EventPanel,
    OutageRecord,
    Station,
    StationObservation,
    TrackPoint,
    TransformerRecord,
    interpolate_track,
    write_observations_csv,
    write_outages_csv,
    write_stations_csv,
    write_track_csv,
    write_transformers_csv,
)
from .nn import sigmoid
from .rng import SplitMix64, derive_seed

TRUTH_FILE = "truth.json"
EVENT_META_FILE = "event.json"


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StormParams:
    """Modified-Rankine vortex moving along linearly interpolated waypoints."""

    v_max: float            # m/s at the radius of maximum wind
    r_max_km: float         # radius of maximum wind
    decay_alpha: float      # outer-profile exponent
    waypoints: tuple        # TrackPoint list covering the event window
    jitter_deg: float = 0.0  # uniform translation jitter applied once

    def __post_init__(self):
        if self.v_max <= 0:
            raise InputError(f"v_max must be > 0, got {self.v_max}")
        if self.r_max_km <= 0:
            raise InputError(f"r_max_km must be > 0, got {self.r_max_km}")
        if self.decay_alpha <= 0:
            raise InputError(f"decay_alpha must be > 0, got {self.decay_alpha}")
        if len(self.waypoints) < 2:
            raise InputError("storm track needs at least 2 waypoints")

    def to_dict(self) -> dict:
        return {
            "v_max": self.v_max, "r_max_km": self.r_max_km,
            "decay_alpha": self.decay_alpha, "jitter_deg": self.jitter_deg,
            "waypoints": [[p.time, p.eye_lat, p.eye_lon] for p in self.waypoints],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StormParams":
        return cls(
            v_max=float(d["v_max"]), r_max_km=float(d["r_max_km"]),
            decay_alpha=float(d["decay_alpha"]),
            jitter_deg=float(d.get("jitter_deg", 0.0)),
            waypoints=tuple(TrackPoint(int(t), float(la), float(lo))
                            for t, la, lo in d["waypoints"]),
        )


@dataclass(frozen=True)
class RainParams:
    peak_mm: float = 40.0
    e_fold_km: float = 80.0

    def __post_init__(self):
        if self.peak_mm < 0 or self.e_fold_km <= 0:
            raise InputError("rain needs peak_mm >= 0 and e_fold_km > 0")

    def to_dict(self) -> dict:
        return {"peak_mm": self.peak_mm, "e_fold_km": self.e_fold_km}

    @classmethod
    def from_dict(cls, d: dict) -> "RainParams":
        return cls(peak_mm=float(d["peak_mm"]), e_fold_km=float(d["e_fold_km"]))


@dataclass(frozen=True)
class FragilityParams:
    """Per-hour logistic outage hazard: sigma(b0 + bw * W + br * R)."""

    beta0: float = -9.0
    beta_w: float = 0.14   # per m/s
    beta_r: float = 0.055  # per mm/h

    def to_dict(self) -> dict:
        return {"beta0": self.beta0, "beta_w": self.beta_w, "beta_r": self.beta_r}

    @classmethod
    def from_dict(cls, d: dict) -> "FragilityParams":
        return cls(beta0=float(d["beta0"]), beta_w=float(d["beta_w"]),
                   beta_r=float(d["beta_r"]))


@dataclass(frozen=True)
class RegionConfig:
    """Shared geography: grid spec, transformer and station placement.

    A town_fraction share of transformers is clustered around n_towns
    Gaussian settlement centers (std town_sigma_km); the rest is uniform
    background. Clustering concentrates counts enough for count-level
    forecast skill to be measurable.
    """

    grid_spec: GridSpec
    n_transformers: int = 5000
    n_stations: int = 120
    n_towns: int = 14
    town_fraction: float = 0.75
    town_sigma_km: float = 2.5
    seed: int = 0

    def __post_init__(self):
        if self.n_transformers < 1 or self.n_stations < 1:
            raise InputError("region needs >= 1 transformer and station")
        if not 0.0 <= self.town_fraction <= 1.0:
            raise InputError(
                f"town_fraction must be in [0, 1], got {self.town_fraction}")
        if self.n_towns < 1:
            raise InputError(f"n_towns must be >= 1, got {self.n_towns}")
        if self.town_sigma_km <= 0:
            raise InputError(
                f"town_sigma_km must be > 0, got {self.town_sigma_km}")

    def to_dict(self) -> dict:
        return {
            "grid_spec": self.grid_spec.to_dict(),
            "n_transformers": self.n_transformers,
            "n_stations": self.n_stations,
            "n_towns": self.n_towns,
            "town_fraction": self.town_fraction,
            "town_sigma_km": self.town_sigma_km,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegionConfig":
        return cls(grid_spec=GridSpec.from_dict(d["grid_spec"]),
                   n_transformers=int(d["n_transformers"]),
                   n_stations=int(d["n_stations"]),
                   n_towns=int(d.get("n_towns", 14)),
                   town_fraction=float(d.get("town_fraction", 0.75)),
                   town_sigma_km=float(d.get("town_sigma_km", 2.5)),
                   seed=int(d["seed"]))


@dataclass(frozen=True)
class SyntheticConfig:
    """One storm over a region."""

    event_id: str
    start_hour: int
    n_hours: int
    storm: StormParams
    rain: RainParams = field(default_factory=RainParams)
    fragility: FragilityParams = field(default_factory=FragilityParams)
    obs_noise: float = 0.0   # multiplicative station-observation noise
    seed: int = 0

    def __post_init__(self):
        if self.n_hours < 12:
            raise InputError(f"event window must be >= 12 h, got {self.n_hours}")
        if self.obs_noise < 0 or self.obs_noise >= 1:
            raise InputError(f"obs_noise must be in [0, 1), got {self.obs_noise}")

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id, "start_hour": self.start_hour,
            "n_hours": self.n_hours, "storm": self.storm.to_dict(),
            "rain": self.rain.to_dict(),
            "fragility": self.fragility.to_dict(),
            "obs_noise": self.obs_noise, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticConfig":
        return cls(
            event_id=str(d["event_id"]), start_hour=int(d["start_hour"]),
            n_hours=int(d["n_hours"]),
            storm=StormParams.from_dict(d["storm"]),
            rain=RainParams.from_dict(d["rain"]),
            fragility=FragilityParams.from_dict(d["fragility"]),
            obs_noise=float(d.get("obs_noise", 0.0)), seed=int(d["seed"]),
        )


# ---------------------------------------------------------------------------
# Analytic fields
# ---------------------------------------------------------------------------

def wind_at(r_km, storm: StormParams) -> np.ndarray:
    """Modified-Rankine tangential wind speed at radius r."""
    r = np.asarray(r_km, dtype=np.float64)
    if (r < 0).any():
        raise InputError("radius must be >= 0")
    inner = storm.v_max * (r / storm.r_max_km)
    with np.errstate(divide="ignore"):
        outer = storm.v_max * (storm.r_max_km / np.maximum(r, 1e-300)) \
            ** storm.decay_alpha
    return np.where(r <= storm.r_max_km, inner, outer)


def rain_at(r_km, rain: RainParams) -> np.ndarray:
    """Exponential rain kernel."""
    r = np.asarray(r_km, dtype=np.float64)
    if (r < 0).any():
        raise InputError("radius must be >= 0")
    return rain.peak_mm * np.exp(-r / rain.e_fold_km)


def hazard(wind, rain, frag: FragilityParams) -> np.ndarray:
    """Per-hour outage probability; beta0 = -inf is an exact zero."""
    logit = frag.beta0 + frag.beta_w * np.asarray(wind) \
        + frag.beta_r * np.asarray(rain)
    with np.errstate(over="ignore"):
        p = sigmoid(logit)
    return np.where(np.isneginf(logit), 0.0, p)


def eye_track(storm: StormParams, start_hour: int, n_hours: int,
              seed: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Hourly eye positions; jitter (if any) translates the whole track."""
    points = list(storm.waypoints)
    if storm.jitter_deg > 0:
        if seed is None:
            raise InputError("track jitter needs a seed")
        rng = SplitMix64(derive_seed(seed, "track_jitter"))
        dlat = rng.uniform_range(-storm.jitter_deg, storm.jitter_deg)
        dlon = rng.uniform_range(-storm.jitter_deg, storm.jitter_deg)
        points = [TrackPoint(p.time, p.eye_lat + dlat, p.eye_lon + dlon)
                  for p in points]
    hours = np.arange(start_hour, start_hour + n_hours)
    lats, lons, _ = interpolate_track(points, hours)
    return lats, lons


def analytic_fields(config: SyntheticConfig, lats: np.ndarray,
                    lons: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(W, R, D) arrays [n_points, n_hours] at the given positions."""
    eye_lats, eye_lons = eye_track(config.storm, config.start_hour,
                                   config.n_hours, seed=config.seed)
    n = len(lats)
    w = np.empty((n, config.n_hours))
    r = np.empty((n, config.n_hours))
    d = np.empty((n, config.n_hours))
    for h in range(config.n_hours):
        dist = haversine_km_many(float(eye_lats[h]), float(eye_lons[h]),
                                 lats, lons)
        d[:, h] = dist
        w[:, h] = wind_at(dist, config.storm)
        r[:, h] = rain_at(dist, config.rain)
    return w, r, d


# ---------------------------------------------------------------------------
# Region generation
# ---------------------------------------------------------------------------

@dataclass
class Region:
    """Generated geography shared across storms."""

    config: RegionConfig
    grid: Grid
    transformers: list[TransformerRecord]
    stations: list[Station]


def _uniform_points(rng: SplitMix64, spec: GridSpec, n: int
                    ) -> tuple[np.ndarray, np.ndarray]:
    lats = spec.origin_lat + rng.uniforms(n) * (spec.n_rows * spec.dlat_deg)
    lons = spec.origin_lon + rng.uniforms(n) * (spec.n_cols * spec.dlon_deg)
    return lats, lons


def _gaussian_pairs(rng: SplitMix64, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Two standard-normal arrays via Box-Muller; 1-u keeps log() finite."""
    u1 = 1.0 - rng.uniforms(n)
    u2 = rng.uniforms(n)
    r = np.sqrt(-2.0 * np.log(u1))
    return r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)


def _place_transformers(rng: SplitMix64, config: RegionConfig
                        ) -> tuple[np.ndarray, np.ndarray]:
    spec = config.grid_spec
    lat_span = spec.n_rows * spec.dlat_deg
    lon_span = spec.n_cols * spec.dlon_deg
    lat_hi = np.nextafter(spec.origin_lat + lat_span, spec.origin_lat)
    lon_hi = np.nextafter(spec.origin_lon + lon_span, spec.origin_lon)
    n_clustered = int(round(config.n_transformers * config.town_fraction))
    parts_lat, parts_lon = [], []
    if n_clustered:
        # town centers stay off the border so the clusters fit the grid
        town_lat = spec.origin_lat + (0.1 + 0.8 * rng.uniforms(config.n_towns)) * lat_span
        town_lon = spec.origin_lon + (0.1 + 0.8 * rng.uniforms(config.n_towns)) * lon_span
        member = np.array([rng.randbelow(config.n_towns)
                           for _ in range(n_clustered)], dtype=np.int64)
        gx, gy = _gaussian_pairs(rng, n_clustered)
        sig_lat = config.town_sigma_km * spec.dlat_deg / spec.cell_km
        sig_lon = config.town_sigma_km * spec.dlon_deg / spec.cell_km
        parts_lat.append(np.clip(town_lat[member] + gx * sig_lat,
                                 spec.origin_lat, lat_hi))
        parts_lon.append(np.clip(town_lon[member] + gy * sig_lon,
                                 spec.origin_lon, lon_hi))
    if config.n_transformers > n_clustered:
        lats_u, lons_u = _uniform_points(rng, spec,
                                         config.n_transformers - n_clustered)
        parts_lat.append(lats_u)
        parts_lon.append(lons_u)
    return np.concatenate(parts_lat), np.concatenate(parts_lon)


def gen_region(config: RegionConfig) -> Region:
    """Place transformers and stations; synthesize grid statics."""
    spec = config.grid_spec
    t_rng = SplitMix64(derive_seed(config.seed, "transformers"))
    t_lats, t_lons = _place_transformers(t_rng, config)
    transformers = [
        TransformerRecord(transformer_id=f"T{i:05d}",
                          lat=float(t_lats[i]), lon=float(t_lons[i]))
        for i in range(config.n_transformers)
    ]
    cell_ids = assign_points(spec, t_lats, t_lons)
    counts = np.bincount(cell_ids[cell_ids >= 0], minlength=spec.n_cells)

    s_rng = SplitMix64(derive_seed(config.seed, "stations"))
    s_lats, s_lons = _uniform_points(s_rng, spec, config.n_stations)
    stations = [
        Station(station_id=f"S{i:03d}", lat=float(s_lats[i]), lon=float(s_lons[i]))
        for i in range(config.n_stations)
    ]

    g_rng = SplitMix64(derive_seed(config.seed, "statics"))
    n = spec.n_cells
    n_bumps = 6
    bump_lat = spec.origin_lat + g_rng.uniforms(n_bumps) * spec.n_rows * spec.dlat_deg
    bump_lon = spec.origin_lon + g_rng.uniforms(n_bumps) * spec.n_cols * spec.dlon_deg
    bump_height = 200.0 + g_rng.uniforms(n_bumps) * 700.0
    bump_sigma = 15.0 + g_rng.uniforms(n_bumps) * 25.0
    slope_u = g_rng.uniforms(n)
    aspect_u = g_rng.uniforms(n)
    green_u = g_rng.uniforms(n)
    imperv_u = g_rng.uniforms(n)
    pop_u = g_rng.uniforms(n)

    rows = np.arange(n) // spec.n_cols
    cols = np.arange(n) % spec.n_cols
    c_lats = spec.origin_lat + (rows + 0.5) * spec.dlat_deg
    c_lons = spec.origin_lon + (cols + 0.5) * spec.dlon_deg
    elev = np.zeros(n)
    for b in range(n_bumps):
        dist = haversine_km_many(float(bump_lat[b]), float(bump_lon[b]),
                                 c_lats, c_lons)
        elev += bump_height[b] * np.exp(-0.5 * (dist / bump_sigma[b]) ** 2)

    cells = []
    for i in range(n):
        green = float(green_u[i] * 0.7)
        cells.append(GridCell(
            cell_id=i,
            center_lat=float(c_lats[i]), center_lon=float(c_lons[i]),
            elevation=float(elev[i]),
            slope=float(slope_u[i] * 12.0),
            aspect=float(aspect_u[i] * 360.0),
            green_ratio=green,
            impervious_ratio=float(imperv_u[i] * (1.0 - green) * 0.9),
            transformer_count=int(counts[i]),
            town_id=f"T{(rows[i] // 5) * ((spec.n_cols + 4) // 5) + cols[i] // 5:03d}",
            county_id=f"C{(rows[i] // 10) * ((spec.n_cols + 19) // 20) + cols[i] // 20:02d}",
            city_id="CITY_W" if cols[i] < spec.n_cols // 2 else "CITY_E",
            population=float(np.floor(pop_u[i] ** 2 * 8000.0)),
        ))
    return Region(config=config, grid=Grid(spec, cells),
                  transformers=transformers, stations=stations)


# ---------------------------------------------------------------------------
# Event generation
# ---------------------------------------------------------------------------

def sample_outages(region: Region, config: SyntheticConfig
                   ) -> list[dict]:
    """Simulate first failures; returns dicts sorted by (hour, transformer).

    The per-transformer-per-hour uniforms come from a stream keyed only by
    the event seed, independent of the hazard values, so reusing a seed
    while raising intensity couples the draws (common random numbers) and
    the realized outage count is monotone in the hazard.
    """
    n_tr = len(region.transformers)
    t_lats = np.array([t.lat for t in region.transformers])
    t_lons = np.array([t.lon for t in region.transformers])
    w, r, _ = analytic_fields(config, t_lats, t_lons)
    p = hazard(w, r, config.fragility)

    u = SplitMix64(derive_seed(config.seed, "outage_u")) \
        .uniforms(n_tr * config.n_hours).reshape(n_tr, config.n_hours)
    minutes = np.floor(
        SplitMix64(derive_seed(config.seed, "outage_minute"))
        .uniforms(n_tr * config.n_hours).reshape(n_tr, config.n_hours) * 60.0
    ).astype(np.int64)

    fails = u < p
    any_fail = fails.any(axis=1)
    first_h = fails.argmax(axis=1)
    cell_ids = assign_points(region.grid.spec, t_lats, t_lons)

    out = []
    for i in np.flatnonzero(any_fail):
        h = int(first_h[i])
        out.append({
            "transformer_id": region.transformers[i].transformer_id,
            "cell_id": int(cell_ids[i]),
            "hour": config.start_hour + h,
            "minute": (config.start_hour + h) * 60 + int(minutes[i, h]),
        })
    out.sort(key=lambda o: (o["hour"], o["transformer_id"]))
    return out


def event_truth(region: Region, config: SyntheticConfig) -> dict:
    """Analytic parameters plus every sampled outage and per-cell-hour counts."""
    outages = sample_outages(region, config)
    counts: dict[tuple[int, int], int] = {}
    for o in outages:
        key = (o["cell_id"], o["hour"] - config.start_hour)
        counts[key] = counts.get(key, 0) + 1
    eye_lats, eye_lons = eye_track(config.storm, config.start_hour,
                                   config.n_hours, seed=config.seed)
    return {
        "event_id": config.event_id,
        "start_hour": config.start_hour,
        "n_hours": config.n_hours,
        "seed": config.seed,
        "storm": config.storm.to_dict(),
        "rain": config.rain.to_dict(),
        "fragility": config.fragility.to_dict(),
        "eye_track": [[float(eye_lats[h]), float(eye_lons[h])]
                      for h in range(config.n_hours)],
        "outages": outages,
        "cell_hour_counts": sorted(
            [[c, h, v] for (c, h), v in counts.items()]
        ),
        "total_outages": len(outages),
    }


def station_observations(region: Region, config: SyntheticConfig
                         ) -> list[StationObservation]:
    """Hourly station samples of the analytic fields with optional noise."""
    s_lats = np.array([s.lat for s in region.stations])
    s_lons = np.array([s.lon for s in region.stations])
    w, r, _ = analytic_fields(config, s_lats, s_lons)
    if config.obs_noise > 0:
        rng = SplitMix64(derive_seed(config.seed, "obs_noise"))
        shape = w.shape
        w = w * (1.0 + config.obs_noise
                 * (2.0 * rng.uniforms(w.size).reshape(shape) - 1.0))
        r = r * (1.0 + config.obs_noise
                 * (2.0 * rng.uniforms(r.size).reshape(shape) - 1.0))
    obs = []
    for i, s in enumerate(region.stations):
        for h in range(config.n_hours):
            obs.append(StationObservation(
                station_id=s.station_id, hour=config.start_hour + h,
                wind_W=float(w[i, h]), rain_R=float(r[i, h]),
            ))
    return obs


def track_points(config: SyntheticConfig) -> list[TrackPoint]:
    """Hourly jittered track waypoints written to track.csv."""
    eye_lats, eye_lons = eye_track(config.storm, config.start_hour,
                                   config.n_hours, seed=config.seed)
    return [
        TrackPoint(time=(config.start_hour + h) * 60,
                   eye_lat=float(eye_lats[h]), eye_lon=float(eye_lons[h]))
        for h in range(config.n_hours)
    ]


def gen_event(region: Region, config: SyntheticConfig, out_dir) -> dict:
    """Emit one event directory in the ingest formats; returns the truth."""
    os.makedirs(out_dir, exist_ok=True)
    truth = event_truth(region, config)
    write_stations_csv(os.path.join(out_dir, "stations.csv"), region.stations)
    write_observations_csv(os.path.join(out_dir, "observations.csv"),
                           station_observations(region, config))
    write_track_csv(os.path.join(out_dir, "track.csv"), track_points(config))
    write_transformers_csv(os.path.join(out_dir, "transformers.csv"),
                           region.transformers)
    write_outages_csv(
        os.path.join(out_dir, "outages.csv"),
        [OutageRecord(transformer_id=o["transformer_id"], time=o["minute"])
         for o in truth["outages"]],
    )
    with open(os.path.join(out_dir, EVENT_META_FILE), "w") as fh:
        json.dump({"event_id": config.event_id,
                   "start_hour": config.start_hour,
                   "n_hours": config.n_hours}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(os.path.join(out_dir, TRUTH_FILE), "w") as fh:
        json.dump(truth, fh, sort_keys=True)
        fh.write("\n")
    return truth


def analytic_panel(region: Region, config: SyntheticConfig,
                   truth: dict | None = None) -> EventPanel:
    """Noise-free EventPanel: closed-form W/R/D plus the truth O counts."""
    grid = region.grid
    w, r, d = analytic_fields(config, grid.center_lat, grid.center_lon)
    channels = np.zeros((grid.n_cells, config.n_hours, 4))
    channels[:, :, 0] = w
    channels[:, :, 1] = r
    channels[:, :, 2] = d
    if truth is None:
        truth = event_truth(region, config)
    for cell, h, v in truth["cell_hour_counts"]:
        channels[cell, h, 3] = v
    return EventPanel(event_id=config.event_id, start_hour=config.start_hour,
                      n_hours=config.n_hours, n_cells=grid.n_cells,
                      channels=channels)


# ---------------------------------------------------------------------------
# Forecast issues
# ---------------------------------------------------------------------------

def gen_forecast_issue(region: Region, config: SyntheticConfig,
                       issue_hour: int, horizon_hours: int,
                       wind_bias: float = 1.0, rain_bias: float = 1.0,
                       noise: float = 0.0, seed: int = 0,
                       source_panel: EventPanel | None = None) -> ForecastIssue:
    """Weather issue from the analytic fields (or a panel) with bias/noise.

    With `source_panel` given and zero bias/noise, the issue reproduces the
    panel's own weather so actual-mode forecasts coincide with ideal mode.
    """
    grid = region.grid
    if source_panel is not None:
        lo = issue_hour - source_panel.start_hour
        hi = lo + horizon_hours
        if lo < 0 or hi > source_panel.n_hours:
            raise InputError(
                f"panel {source_panel.event_id} does not cover issue hours "
                f"[{issue_hour}, {issue_hour + horizon_hours})"
            )
        w = source_panel.W()[:, lo:hi].astype(np.float64)
        r = source_panel.R()[:, lo:hi].astype(np.float64)
    else:
        sub = SyntheticConfig(
            event_id=config.event_id, start_hour=issue_hour,
            n_hours=max(horizon_hours, 12), storm=config.storm,
            rain=config.rain, fragility=config.fragility, seed=config.seed,
        )
        w, r, _ = analytic_fields(sub, grid.center_lat, grid.center_lon)
        w = w[:, :horizon_hours]
        r = r[:, :horizon_hours]
    w = w * wind_bias
    r = r * rain_bias
    if noise > 0:
        rng = SplitMix64(derive_seed(seed, "issue", issue_hour))
        w = w * (1.0 + noise * (2.0 * rng.uniforms(w.size).reshape(w.shape) - 1.0))
        r = r * (1.0 + noise * (2.0 * rng.uniforms(r.size).reshape(r.shape) - 1.0))
    eye_lats, eye_lons = eye_track(config.storm, issue_hour,
                                   horizon_hours, seed=config.seed)
    track = [TrackPoint(time=(issue_hour + h) * 60,
                        eye_lat=float(eye_lats[h]), eye_lon=float(eye_lons[h]))
             for h in range(horizon_hours)]
    return ForecastIssue(issue_hour=issue_hour, horizon_hours=horizon_hours,
                         wind=w, rain=r, track=track,
                         grid_fingerprint=grid.spec.fingerprint())


# ---------------------------------------------------------------------------
# Shipped defaults: one region, four storms
# ---------------------------------------------------------------------------

def default_region_config(seed: int = 0) -> RegionConfig:
    spec = GridSpec(origin_lat=27.0, origin_lon=118.0, cell_km=5.0,
                    n_rows=25, n_cols=40, ref_lat=27.5)
    return RegionConfig(grid_spec=spec, n_transformers=5000,
                        n_stations=120, seed=seed)


def _storm(v_max, r_max, alpha, lat0, lon0, lat1, lon1, start_hour, n_hours):
    return StormParams(
        v_max=v_max, r_max_km=r_max, decay_alpha=alpha,
        waypoints=(
            TrackPoint(time=start_hour * 60, eye_lat=lat0, eye_lon=lon0),
            TrackPoint(time=(start_hour + n_hours) * 60,
                       eye_lat=lat1, eye_lon=lon1),
        ),
    )


def default_event_configs(seed: int = 0) -> list[SyntheticConfig]:
    """Four storms with distinct tracks and intensities over one region."""
    h0 = 452000  # epoch hour base, ~2021; exact value is arbitrary
    specs = [
        # (v_max, r_max, alpha, lat0, lon0, lat1, lon1, rain_peak, e_fold)
        ("alpha", 45.0, 40.0, 0.60, 26.2, 120.8, 28.9, 117.3, 42.0, 80.0),
        ("bravo", 38.0, 52.0, 0.55, 26.4, 117.2, 28.5, 120.9, 35.0, 95.0),
        ("carol", 52.0, 34.0, 0.70, 25.9, 119.6, 29.1, 118.3, 50.0, 70.0),
        ("delta", 42.0, 46.0, 0.65, 26.1, 118.1, 28.8, 120.5, 38.0, 85.0),
    ]
    out = []
    for i, (name, v, rm, a, la0, lo0, la1, lo1, peak, efold) in enumerate(specs):
        start = h0 + i * 1000
        out.append(SyntheticConfig(
            event_id=name, start_hour=start, n_hours=66,
            storm=_storm(v, rm, a, la0, lo0, la1, lo1, start, 66),
            rain=RainParams(peak_mm=peak, e_fold_km=efold),
            fragility=FragilityParams(),
            obs_noise=0.0,
            seed=derive_seed(seed, "event", name),
        ))
    return out
