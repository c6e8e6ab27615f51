"""Event data ingestion: files to cleaned, gridded hourly panels.

Raw inputs are five CSV files per event (stations, observations, track,
transformers, outages) with ISO-8601 timestamps carrying an explicit
UTC offset. Ingestion converts times to UTC epoch minutes and hours,
cleans outage records, interpolates station observations (IDW) and the
cyclone track (piecewise linear) onto the grid-hour lattice, and packs
everything into an EventPanel with channel order W, R, D, O.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import IngestionError
from .grid import Grid, assign_point, haversine_km_many

logger = logging.getLogger(__name__)

CHANNELS = ["W", "R", "D", "O"]
CH_W, CH_R, CH_D, CH_O = 0, 1, 2, 3

IDW_POWER = 2.0
IDW_NEIGHBORS = 8
IDW_EXACT_HIT_KM = 1e-6

PANEL_MANIFEST = "panel.json"
PANEL_BINARY = "panel.f32"


# ---------------------------------------------------------------------------
# Times
# ---------------------------------------------------------------------------

def parse_iso8601_minutes(text: str) -> int:
    """ISO-8601 timestamp with explicit offset -> UTC epoch minute (floored)."""
    raw = text.strip()
    try:
        dt = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError as exc:
        raise IngestionError(f"unparseable timestamp {text!r}") from exc
    if dt.tzinfo is None:
        raise IngestionError(f"timestamp {text!r} lacks an explicit UTC offset")
    return math.floor(dt.timestamp() / 60.0)


def format_iso8601(minutes: int) -> str:
    """UTC epoch minute -> ISO-8601 string with +00:00 offset."""
    return datetime.fromtimestamp(minutes * 60, tz=timezone.utc).isoformat()


def minutes_to_hour(minutes: int) -> int:
    """Floor-bin an epoch minute to its clock hour."""
    return minutes // 60


# ---------------------------------------------------------------------------
# Domain records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Station:
    station_id: str
    lat: float
    lon: float


@dataclass(frozen=True)
class StationObservation:
    station_id: str
    hour: int
    wind_W: float
    rain_R: float

    def __post_init__(self):
        if self.wind_W < 0 or self.rain_R < 0:
            raise IngestionError(
                f"station {self.station_id} hour {self.hour}: "
                f"negative wind or rain"
            )


@dataclass(frozen=True)
class TrackPoint:
    time: int  # epoch minute
    eye_lat: float
    eye_lon: float


@dataclass(frozen=True)
class OutageRecord:
    transformer_id: str
    time: int  # epoch minute


@dataclass(frozen=True)
class TransformerRecord:
    transformer_id: str
    lat: float
    lon: float


# ---------------------------------------------------------------------------
# CSV readers / writers
# ---------------------------------------------------------------------------

def _open_rows(path, columns):
    try:
        fh = open(path, newline="")
    except FileNotFoundError as exc:
        raise IngestionError(f"input file not found: {path}") from exc
    with fh:
        reader = csv.DictReader(fh)
        missing = set(columns) - set(reader.fieldnames or [])
        if missing:
            raise IngestionError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            yield lineno, row


def _field_float(path, lineno, row, key):
    try:
        return float(row[key])
    except ValueError as exc:
        raise IngestionError(
            f"{path} line {lineno}: bad numeric value {row[key]!r} for {key}"
        ) from exc


def read_stations_csv(path) -> list[Station]:
    out = []
    seen = set()
    for lineno, row in _open_rows(path, ["station_id", "lat", "lon"]):
        sid = row["station_id"].strip()
        if sid in seen:
            raise IngestionError(f"{path} line {lineno}: duplicate station {sid!r}")
        seen.add(sid)
        out.append(Station(sid, _field_float(path, lineno, row, "lat"),
                           _field_float(path, lineno, row, "lon")))
    return out


def read_observations_csv(path, stations: list[Station]) -> list[StationObservation]:
    known = {s.station_id for s in stations}
    out = []
    for lineno, row in _open_rows(path, ["station_id", "time_iso8601", "wind_ms", "rain_mm"]):
        sid = row["station_id"].strip()
        if sid not in known:
            raise IngestionError(f"{path} line {lineno}: unknown station {sid!r}")
        hour = minutes_to_hour(parse_iso8601_minutes(row["time_iso8601"]))
        out.append(StationObservation(
            station_id=sid,
            hour=hour,
            wind_W=_field_float(path, lineno, row, "wind_ms"),
            rain_R=_field_float(path, lineno, row, "rain_mm"),
        ))
    return out


def read_track_csv(path) -> list[TrackPoint]:
    out = []
    for lineno, row in _open_rows(path, ["time_iso8601", "eye_lat", "eye_lon"]):
        out.append(TrackPoint(
            time=parse_iso8601_minutes(row["time_iso8601"]),
            eye_lat=_field_float(path, lineno, row, "eye_lat"),
            eye_lon=_field_float(path, lineno, row, "eye_lon"),
        ))
    for a, b in zip(out, out[1:]):
        if b.time <= a.time:
            raise IngestionError(f"{path}: track times must strictly increase")
    return out


def read_transformers_csv(path) -> list[TransformerRecord]:
    out = []
    seen = set()
    for lineno, row in _open_rows(path, ["transformer_id", "lat", "lon"]):
        tid = row["transformer_id"].strip()
        if tid in seen:
            raise IngestionError(f"{path} line {lineno}: duplicate transformer {tid!r}")
        seen.add(tid)
        out.append(TransformerRecord(tid, _field_float(path, lineno, row, "lat"),
                                     _field_float(path, lineno, row, "lon")))
    return out


def read_outages_csv(path) -> list[OutageRecord]:
    out = []
    for lineno, row in _open_rows(path, ["transformer_id", "time_iso8601"]):
        out.append(OutageRecord(
            transformer_id=row["transformer_id"].strip(),
            time=parse_iso8601_minutes(row["time_iso8601"]),
        ))
    return out


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_stations_csv(path, stations: list[Station]) -> None:
    _write_csv(path, ["station_id", "lat", "lon"],
               [(s.station_id, repr(s.lat), repr(s.lon)) for s in stations])


def write_observations_csv(path, obs: list[StationObservation]) -> None:
    _write_csv(path, ["station_id", "time_iso8601", "wind_ms", "rain_mm"],
               [(o.station_id, format_iso8601(o.hour * 60), repr(o.wind_W), repr(o.rain_R))
                for o in obs])


def write_track_csv(path, points: list[TrackPoint]) -> None:
    _write_csv(path, ["time_iso8601", "eye_lat", "eye_lon"],
               [(format_iso8601(p.time), repr(p.eye_lat), repr(p.eye_lon))
                for p in points])


def write_transformers_csv(path, transformers: list[TransformerRecord]) -> None:
    _write_csv(path, ["transformer_id", "lat", "lon"],
               [(t.transformer_id, repr(t.lat), repr(t.lon)) for t in transformers])


def write_outages_csv(path, records: list[OutageRecord]) -> None:
    _write_csv(path, ["transformer_id", "time_iso8601"],
               [(r.transformer_id, format_iso8601(r.time)) for r in records])


# ---------------------------------------------------------------------------
# IDW interpolation
# ---------------------------------------------------------------------------

class IdwPlan:
    """Precomputed neighbor sets and weights from a station set to targets.

    Stations are sorted by station_id ascending before the (stable)
    nearest-neighbor sort, so distance ties resolve to the smaller id.
    A station within IDW_EXACT_HIT_KM of a target supplies its value
    exactly (the first such station in id order).
    """

    def __init__(self, station_lats, station_lons, station_ids,
                 target_lats, target_lons, power_p=IDW_POWER, k=IDW_NEIGHBORS):
        if len(station_ids) == 0:
            raise IngestionError("IDW requires at least one station")
        if power_p <= 0 or k < 1:
            raise IngestionError("IDW requires p > 0 and k >= 1")
        order = sorted(range(len(station_ids)), key=lambda i: station_ids[i])
        self.order = np.asarray(order, dtype=np.int64)
        lats = np.asarray(station_lats, dtype=np.float64)[self.order]
        lons = np.asarray(station_lons, dtype=np.float64)[self.order]
        n_t = len(target_lats)
        k_eff = min(k, len(order))
        dist = np.empty((n_t, len(order)), dtype=np.float64)
        for j in range(len(order)):
            dist[:, j] = haversine_km_many(lats[j], lons[j], target_lats, target_lons)
        nearest = np.argsort(dist, axis=1, kind="stable")[:, :k_eff]
        ndist = np.take_along_axis(dist, nearest, axis=1)
        with np.errstate(divide="ignore"):
            weights = ndist ** (-power_p)
        # exact hits: one-hot on the nearest (smallest-id) coincident station
        hit = ndist[:, 0] < IDW_EXACT_HIT_KM
        if hit.any():
            weights[hit] = 0.0
            weights[hit, 0] = 1.0
        self.neighbors = nearest
        self.weights = weights
        self.weight_sums = weights.sum(axis=1)

    def interpolate(self, station_values) -> np.ndarray:
        """Apply the plan to values given in the constructor's station order."""
        vals = np.asarray(station_values, dtype=np.float64)[self.order]
        return (self.weights * vals[self.neighbors]).sum(axis=1) / self.weight_sums


def idw_interpolate(station_lats, station_lons, station_ids, station_values,
                    target_lats, target_lons,
                    power_p=IDW_POWER, k=IDW_NEIGHBORS) -> np.ndarray:
    """One-shot IDW of station values onto target points."""
    plan = IdwPlan(station_lats, station_lons, station_ids,
                   target_lats, target_lons, power_p=power_p, k=k)
    return plan.interpolate(station_values)


# ---------------------------------------------------------------------------
# Track interpolation
# ---------------------------------------------------------------------------

def interpolate_track(points: list[TrackPoint], hours) -> tuple[np.ndarray, np.ndarray, int]:
    """Hourly eye positions by piecewise-linear interpolation in time.

    Returns (lats, lons, n_clamped); queries beyond the recorded track are
    clamped to the nearest endpoint and counted (with a logged warning).
    """
    if len(points) < 2:
        raise IngestionError(f"track interpolation needs >= 2 points, got {len(points)}")
    times = np.asarray([p.time for p in points], dtype=np.float64)
    lats = np.asarray([p.eye_lat for p in points], dtype=np.float64)
    lons = np.asarray([p.eye_lon for p in points], dtype=np.float64)
    query = np.asarray(hours, dtype=np.float64) * 60.0
    out_lat = np.interp(query, times, lats)
    out_lon = np.interp(query, times, lons)
    clamped = int(((query < times[0]) | (query > times[-1])).sum())
    if clamped:
        logger.warning("track: %d hour(s) outside the recorded track; "
                       "holding nearest endpoint", clamped)
    return out_lat, out_lon, clamped


def distance_to_eye(center_lats, center_lons, eye_lat, eye_lon) -> np.ndarray:
    """Per-cell haversine distance (km) to the cyclone eye."""
    return haversine_km_many(eye_lat, eye_lon, center_lats, center_lons)


# ---------------------------------------------------------------------------
# Outage cleaning
# ---------------------------------------------------------------------------

@dataclass
class CleanedOutages:
    """Per-transformer first-outage hour plus cleaning bookkeeping."""

    first_hour: dict[str, int]
    n_records: int = 0
    n_unknown_dropped: int = 0
    n_noise_discarded: int = 0
    n_outside_window: int = 0

    @property
    def n_outages(self) -> int:
        return len(self.first_hour)


def clean_outages(records: list[OutageRecord],
                  transformers: list[TransformerRecord],
                  start_hour: int, end_hour: int) -> CleanedOutages:
    """Apply the noise, binning, and consolidation rules to raw records.

    (1) If a transformer has more than 3 records within one clock hour,
    all of its records in that hour are discarded as signal noise.
    (2) Survivors are floor-binned to the hour. (3) Per transformer, only
    the earliest surviving hour inside [start_hour, end_hour) is kept.
    """
    known = {t.transformer_id for t in transformers}
    result = CleanedOutages(first_hour={}, n_records=len(records))

    per_bucket: dict[tuple[str, int], int] = {}
    usable: list[tuple[str, int]] = []
    for rec in records:
        if rec.transformer_id not in known:
            result.n_unknown_dropped += 1
            continue
        hour = minutes_to_hour(rec.time)
        per_bucket[(rec.transformer_id, hour)] = per_bucket.get((rec.transformer_id, hour), 0) + 1
        usable.append((rec.transformer_id, hour))
    if result.n_unknown_dropped:
        logger.warning("outages: dropped %d record(s) for unknown transformers",
                       result.n_unknown_dropped)

    for tid, hour in usable:
        if per_bucket[(tid, hour)] > 3:
            result.n_noise_discarded += 1
            continue
        if not (start_hour <= hour < end_hour):
            result.n_outside_window += 1
            continue
        prev = result.first_hour.get(tid)
        if prev is None or hour < prev:
            result.first_hour[tid] = hour
    return result


# ---------------------------------------------------------------------------
# Event panel
# ---------------------------------------------------------------------------

@dataclass
class EventPanel:
    """Dense hourly event data: channels[cell, hour, (W, R, D, O)]."""

    event_id: str
    start_hour: int
    n_hours: int
    n_cells: int
    channels: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=np.float32).reshape(
            self.n_cells, self.n_hours, len(CHANNELS)
        )

    def W(self) -> np.ndarray:
        return self.channels[:, :, CH_W]

    def R(self) -> np.ndarray:
        return self.channels[:, :, CH_R]

    def D(self) -> np.ndarray:
        return self.channels[:, :, CH_D]

    def O(self) -> np.ndarray:
        return self.channels[:, :, CH_O]

    def total_outages(self) -> int:
        return int(np.rint(self.O().sum()))

    def validate(self, transformer_count: np.ndarray | None = None) -> None:
        if not np.isfinite(self.channels).all():
            raise IngestionError(f"panel {self.event_id}: non-finite values")
        if (self.channels[:, :, :3] < 0).any():
            raise IngestionError(f"panel {self.event_id}: negative W, R, or D")
        o = self.O()
        if (o < 0).any() or not np.array_equal(o, np.rint(o)):
            raise IngestionError(f"panel {self.event_id}: O must be nonnegative integers")
        if transformer_count is not None:
            per_cell = o.sum(axis=1)
            if (per_cell > np.asarray(transformer_count) + 0.5).any():
                raise IngestionError(
                    f"panel {self.event_id}: cell outage totals exceed transformer counts"
                )

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        manifest = {
            "event_id": self.event_id,
            "start_hour": self.start_hour,
            "n_hours": self.n_hours,
            "n_cells": self.n_cells,
            "channels": CHANNELS,
        }
        with open(os.path.join(directory, PANEL_MANIFEST), "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
        with open(os.path.join(directory, PANEL_BINARY), "wb") as fh:
            fh.write(self.channels.astype("<f4").tobytes())

    @classmethod
    def load(cls, directory) -> "EventPanel":
        try:
            with open(os.path.join(directory, PANEL_MANIFEST)) as fh:
                manifest = json.load(fh)
        except FileNotFoundError as exc:
            raise IngestionError(f"panel manifest not found in {directory}") from exc
        if manifest.get("channels") != CHANNELS:
            raise IngestionError(
                f"panel {directory}: unexpected channel order {manifest.get('channels')}"
            )
        n_cells = int(manifest["n_cells"])
        n_hours = int(manifest["n_hours"])
        raw = np.fromfile(os.path.join(directory, PANEL_BINARY), dtype="<f4")
        expect = n_cells * n_hours * len(CHANNELS)
        if raw.size != expect:
            raise IngestionError(
                f"panel {directory}: expected {expect} floats, found {raw.size}"
            )
        return cls(
            event_id=str(manifest["event_id"]),
            start_hour=int(manifest["start_hour"]),
            n_hours=n_hours,
            n_cells=n_cells,
            channels=raw.reshape(n_cells, n_hours, len(CHANNELS)),
        )


def assign_transformers(grid: Grid, transformers: list[TransformerRecord]) -> dict[str, int]:
    """Map transformer_id -> cell_id; off-grid units are dropped with a warning."""
    cells: dict[str, int] = {}
    dropped = 0
    for t in transformers:
        cid = assign_point(grid.spec, t.lat, t.lon)
        if cid is None:
            dropped += 1
            continue
        cells[t.transformer_id] = cid
    if dropped:
        logger.warning("transformers: %d outside the grid were dropped", dropped)
    return cells


def build_event_panel(grid: Grid,
                      transformers: list[TransformerRecord],
                      stations: list[Station],
                      observations: list[StationObservation],
                      track: list[TrackPoint],
                      outages: list[OutageRecord],
                      event_id: str,
                      start_hour: int,
                      n_hours: int) -> tuple[EventPanel, CleanedOutages]:
    """Assemble one event's W, R, D, O panel from parsed inputs."""
    if n_hours < 1:
        raise IngestionError(f"event {event_id}: n_hours must be >= 1")
    hours = np.arange(start_hour, start_hour + n_hours)
    station_pos = {s.station_id: (s.lat, s.lon) for s in stations}

    by_hour: dict[int, dict[str, StationObservation]] = {}
    for o in observations:
        by_hour.setdefault(o.hour, {})[o.station_id] = o

    channels = np.zeros((grid.n_cells, n_hours, len(CHANNELS)), dtype=np.float64)

    plans: dict[tuple[str, ...], IdwPlan] = {}
    for h_idx, hour in enumerate(hours):
        present = by_hour.get(int(hour), {})
        if not present:
            raise IngestionError(
                f"event {event_id} hour {int(hour)}: no station observations "
                f"for channel W/R"
            )
        ids = tuple(sorted(present))
        plan = plans.get(ids)
        if plan is None:
            lats = [station_pos[s][0] for s in ids]
            lons = [station_pos[s][1] for s in ids]
            plan = IdwPlan(lats, lons, list(ids), grid.center_lat, grid.center_lon)
            plans[ids] = plan
        winds = [present[s].wind_W for s in ids]
        rains = [present[s].rain_R for s in ids]
        channels[:, h_idx, CH_W] = plan.interpolate(winds)
        channels[:, h_idx, CH_R] = plan.interpolate(rains)

    eye_lats, eye_lons, _ = interpolate_track(track, hours)
    for h_idx in range(n_hours):
        channels[:, h_idx, CH_D] = distance_to_eye(
            grid.center_lat, grid.center_lon, eye_lats[h_idx], eye_lons[h_idx]
        )

    cleaned = clean_outages(outages, transformers, int(hours[0]), int(hours[-1]) + 1)
    cell_of = assign_transformers(grid, transformers)
    placed = 0
    for tid, hour in cleaned.first_hour.items():
        cid = cell_of.get(tid)
        if cid is None:
            continue
        channels[cid, hour - start_hour, CH_O] += 1.0
        placed += 1
    if placed < cleaned.n_outages:
        logger.warning("event %s: %d outage(s) on off-grid transformers not placed",
                       event_id, cleaned.n_outages - placed)

    derived_counts = np.zeros(grid.n_cells, dtype=np.int64)
    for cid in cell_of.values():
        derived_counts[cid] += 1
    if not np.array_equal(derived_counts, grid.transformer_count):
        logger.warning("event %s: grid transformer_count disagrees with the "
                       "transformer file in %d cell(s)",
                       event_id, int((derived_counts != grid.transformer_count).sum()))

    panel = EventPanel(event_id=event_id, start_hour=start_hour,
                       n_hours=n_hours, n_cells=grid.n_cells, channels=channels)
    panel.validate(transformer_count=derived_counts)
    return panel, cleaned


def load_event_dir(grid: Grid, directory, event_id: str | None = None
                   ) -> tuple[EventPanel, CleanedOutages]:
    """Read an event directory of CSVs and build its panel.

    The directory must hold stations.csv, observations.csv, track.csv,
    transformers.csv, outages.csv, and event.json with event_id,
    start_hour, and n_hours.
    """
    meta_path = os.path.join(directory, "event.json")
    try:
        with open(meta_path) as fh:
            meta = json.load(fh)
    except FileNotFoundError as exc:
        raise IngestionError(f"event metadata not found: {meta_path}") from exc
    stations = read_stations_csv(os.path.join(directory, "stations.csv"))
    observations = read_observations_csv(os.path.join(directory, "observations.csv"), stations)
    track = read_track_csv(os.path.join(directory, "track.csv"))
    transformers = read_transformers_csv(os.path.join(directory, "transformers.csv"))
    outages = read_outages_csv(os.path.join(directory, "outages.csv"))
    return build_event_panel(
        grid, transformers, stations, observations, track, outages,
        event_id=event_id or str(meta["event_id"]),
        start_hour=int(meta["start_hour"]),
        n_hours=int(meta["n_hours"]),
    )
