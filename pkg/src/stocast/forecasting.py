"""Rolling deployment schemes and error decomposition.

Two schemes share one window-assembly core:

* nowcast: every 6 hours a fresh window is formed from observed outage
  increments and the newest weather (observed panel or the freshest
  covering forecast issue), giving a rolling 6-hour lead.
* longterm: observations and forecasts enter once at the start; later
  iterations feed the model's own predicted ratios back into the O(-6)
  channel and slide over the single initial weather horizon.

Error decomposition compares three runs (nowcast-ideal, nowcast-actual,
longterm-ideal) against the observed panel to separate model-intrinsic
error, weather-forecast error, and missing-observation error.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .dataset import HORIZON_HOURS, PAST_HOURS, WINDOW_HOURS
from .errors import ContractError, ForecastInputError, InputError
from .grid import Grid
from .ingest import (
    CH_D,
    CH_O,
    CH_R,
    CH_W,
    EventPanel,
    TrackPoint,
    distance_to_eye,
    format_iso8601,
    interpolate_track,
    parse_iso8601_minutes,
)
from .nn import StoCastModel, model_forward

ISSUE_CSV_HEADER = ["cell_id", "hour_offset", "wind_ms", "rain_mm"]
RUN_CSV_HEADER = ["cell_id", "valid_hour", "pred_count", "pred_ratio", "obs_count"]


# ---------------------------------------------------------------------------
# Forecast issues
# ---------------------------------------------------------------------------

@dataclass
class ForecastIssue:
    """One weather-forecast release: hourly cell fields plus a track."""

    issue_hour: int
    horizon_hours: int
    wind: np.ndarray  # [n_cells, horizon]
    rain: np.ndarray  # [n_cells, horizon]
    track: list[TrackPoint] = field(default_factory=list)
    grid_fingerprint: str = ""

    def __post_init__(self):
        self.wind = np.asarray(self.wind, dtype=np.float64)
        self.rain = np.asarray(self.rain, dtype=np.float64)
        if self.horizon_hours < HORIZON_HOURS:
            raise InputError(
                f"issue horizon must be >= {HORIZON_HOURS} h, "
                f"got {self.horizon_hours}"
            )
        shape = (self.wind.shape[0], self.horizon_hours)
        if self.wind.shape != shape or self.rain.shape != shape:
            raise InputError(
                f"issue arrays must be [n_cells, {self.horizon_hours}], "
                f"got wind {self.wind.shape} rain {self.rain.shape}"
            )

    @property
    def n_cells(self) -> int:
        return self.wind.shape[0]

    def covers(self, lo: int, hi: int) -> bool:
        """Whether the issue provides weather for every hour in [lo, hi)."""
        return self.issue_hour <= lo and hi <= self.issue_hour + self.horizon_hours

    def hours_slice(self, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        if not self.covers(lo, hi):
            raise ForecastInputError(
                f"issue at hour {self.issue_hour} (horizon "
                f"{self.horizon_hours} h) does not cover hours [{lo}, {hi})"
            )
        a = lo - self.issue_hour
        b = hi - self.issue_hour
        return self.wind[:, a:b], self.rain[:, a:b]

    def save(self, path) -> None:
        """Single file: one JSON header line, then the CSV body."""
        header = {
            "issue_hour": self.issue_hour,
            "horizon_hours": self.horizon_hours,
            "n_cells": self.n_cells,
            "grid_fingerprint": self.grid_fingerprint,
            "track": [
                {"time_iso8601": format_iso8601(p.time),
                 "eye_lat": p.eye_lat, "eye_lon": p.eye_lon}
                for p in self.track
            ],
        }
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(ISSUE_CSV_HEADER)
        for cell in range(self.n_cells):
            for off in range(self.horizon_hours):
                writer.writerow([cell, off, repr(float(self.wind[cell, off])),
                                 repr(float(self.rain[cell, off]))])
        with open(path, "w") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            fh.write(buf.getvalue())

    @classmethod
    def load(cls, path, grid: Grid | None = None) -> "ForecastIssue":
        try:
            with open(path) as fh:
                first = fh.readline()
                body = fh.read()
        except FileNotFoundError as exc:
            raise InputError(f"forecast issue not found: {path}") from exc
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise InputError(f"issue {path}: bad JSON header: {exc}") from exc
        try:
            n_cells = int(header["n_cells"])
            horizon = int(header["horizon_hours"])
            issue_hour = int(header["issue_hour"])
        except KeyError as exc:
            raise InputError(f"issue {path}: missing header field {exc}") from exc
        wind = np.full((n_cells, horizon), np.nan)
        rain = np.full((n_cells, horizon), np.nan)
        reader = csv.reader(io.StringIO(body))
        head = next(reader, None)
        if head != ISSUE_CSV_HEADER:
            raise InputError(f"issue {path}: bad CSV header {head}")
        for lineno, row in enumerate(reader, start=3):
            if not row:
                continue
            try:
                cell = int(row[0])
                off = int(row[1])
                wind[cell, off] = float(row[2])
                rain[cell, off] = float(row[3])
            except (ValueError, IndexError) as exc:
                raise InputError(f"issue {path} line {lineno}: {exc}") from exc
        if np.isnan(wind).any() or np.isnan(rain).any():
            raise InputError(f"issue {path}: incomplete cell/hour coverage")
        track = [
            TrackPoint(time=parse_iso8601_minutes(p["time_iso8601"]),
                       eye_lat=float(p["eye_lat"]), eye_lon=float(p["eye_lon"]))
            for p in header.get("track", [])
        ]
        issue = cls(issue_hour=issue_hour, horizon_hours=horizon, wind=wind,
                    rain=rain, track=track,
                    grid_fingerprint=str(header.get("grid_fingerprint", "")))
        if grid is not None and issue.grid_fingerprint and \
                issue.grid_fingerprint != grid.spec.fingerprint():
            raise InputError(
                f"issue {path}: grid fingerprint {issue.grid_fingerprint} "
                f"does not match the grid"
            )
        return issue


def freshest_issue(issues: list[ForecastIssue], t0: int) -> ForecastIssue:
    """Latest issue with issue_hour <= t0 covering [t0, t0 + 6)."""
    best = None
    for issue in issues:
        if issue.issue_hour <= t0 and issue.covers(t0, t0 + HORIZON_HOURS):
            if best is None or issue.issue_hour > best.issue_hour:
                best = issue
    if best is None:
        raise ForecastInputError(
            f"no forecast issue with issue_hour <= {t0} covers hours "
            f"[{t0}, {t0 + HORIZON_HOURS})"
        )
    return best


# ---------------------------------------------------------------------------
# Single prediction step
# ---------------------------------------------------------------------------

def predict_step(model: StoCastModel, grid: Grid, dynamic: np.ndarray,
                 static: np.ndarray | None = None
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell 6-hour (counts, ratios) from raw 12-hour windows.

    `dynamic` is [n_cells, 12, 4] with raw W/R/D, the O channel already as
    ratios for the past and zero for the future.  Standardization uses the
    stats embedded in the model.  Cells with C = 0 are short-circuited to
    zero without invoking the model.
    """
    if model.stats is None:
        raise ContractError("model has no standardization stats; "
                            "train or load a checkpoint that embeds them")
    dynamic = np.asarray(dynamic, dtype=np.float64)
    if dynamic.shape != (grid.n_cells, WINDOW_HOURS, 4):
        raise InputError(
            f"dynamic windows must be [{grid.n_cells}, {WINDOW_HOURS}, 4], "
            f"got {dynamic.shape}"
        )
    if not np.isfinite(dynamic).all():
        bad_cell = int(np.flatnonzero(
            ~np.isfinite(dynamic).reshape(grid.n_cells, -1).all(axis=1))[0])
        raise ForecastInputError(
            f"non-finite weather input for cell {bad_cell}"
        )
    if static is None:
        static = grid.static_features()
    static = np.asarray(static, dtype=np.float64)

    counts_c = grid.transformer_count.astype(np.float64)
    live = np.flatnonzero(counts_c > 0)
    ratios = np.zeros((grid.n_cells, HORIZON_HOURS), dtype=np.float64)
    if live.size:
        stats = model.stats
        dyn = dynamic[live].copy()
        dyn[:, :, :3] = (dyn[:, :, :3] - stats.dyn_mean) / stats.dyn_std
        stat = (static[live] - stats.static_mean) / stats.static_std
        out, _ = model_forward(model.arch, model.params, dyn, stat)
        ratios[live] = out
    counts = ratios * counts_c[:, None]
    return counts, ratios


# ---------------------------------------------------------------------------
# Rolling runs
# ---------------------------------------------------------------------------

@dataclass
class IterationRecord:
    """Inputs and outputs of one 6-hour iteration."""

    index: int
    t0: int  # first forecast hour
    issue_hour: int | None
    o_past: np.ndarray       # [n_cells, 6] ratios fed into O(-6)
    pred_ratios: np.ndarray  # [n_cells, 6]
    pred_counts: np.ndarray  # [n_cells, 6]


@dataclass
class RollingRun:
    """One scheme execution over n_iterations x 6 forecast hours."""

    scheme: str
    weather_mode: str
    event_id: str
    start_hour: int
    n_iterations: int
    grid_fingerprint: str
    iterations: list[IterationRecord] = field(default_factory=list)

    def pred_counts(self) -> np.ndarray:
        """[n_cells, 6 * n_iterations] concatenated predicted counts."""
        return np.concatenate([it.pred_counts for it in self.iterations], axis=1)

    def pred_ratios(self) -> np.ndarray:
        return np.concatenate([it.pred_ratios for it in self.iterations], axis=1)

    def forecast_hours(self) -> np.ndarray:
        return np.arange(self.start_hour,
                         self.start_hour + HORIZON_HOURS * self.n_iterations)


def observed_counts(panel: EventPanel, run: RollingRun) -> np.ndarray:
    """Observed O increments aligned with the run's forecast hours."""
    lo = run.start_hour - panel.start_hour
    hi = lo + HORIZON_HOURS * run.n_iterations
    if lo < 0 or hi > panel.n_hours:
        raise ContractError(
            f"run covers hours outside panel {panel.event_id}"
        )
    return panel.O()[:, lo:hi].astype(np.float64)


def _check_run_window(panel: EventPanel, start_hour: int, n_iterations: int):
    if n_iterations < 1:
        raise InputError(f"n_iterations must be >= 1, got {n_iterations}")
    if start_hour - PAST_HOURS < panel.start_hour:
        raise ForecastInputError(
            f"start hour {start_hour} needs observed history from "
            f"{start_hour - PAST_HOURS}, panel begins at {panel.start_hour}"
        )
    end = start_hour + HORIZON_HOURS * n_iterations
    if end > panel.start_hour + panel.n_hours:
        raise ForecastInputError(
            f"{n_iterations} iterations reach hour {end}, panel "
            f"{panel.event_id} ends at {panel.start_hour + panel.n_hours}"
        )


def _panel_block(panel: EventPanel, lo_hour: int, hi_hour: int) -> np.ndarray:
    """float64 channel block for absolute hours [lo_hour, hi_hour)."""
    lo = lo_hour - panel.start_hour
    hi = hi_hour - panel.start_hour
    return panel.channels[:, lo:hi, :].astype(np.float64)


def _o_ratio(grid: Grid, o_counts: np.ndarray) -> np.ndarray:
    counts = grid.transformer_count.astype(np.float64)
    ratio = np.zeros_like(o_counts)
    np.divide(o_counts, counts[:, None], out=ratio, where=counts[:, None] > 0)
    return ratio


def _issue_track_d(grid: Grid, issue: ForecastIssue, hours: np.ndarray
                   ) -> np.ndarray:
    """Distance channel from the issue's forecast track.

    Quantized through float32 to match the panel's channel storage, so a
    perfect track forecast reproduces the observed distance channel
    bit-for-bit and zero-bias issues yield E_weather = 0 exactly.
    """
    if not issue.track:
        raise ForecastInputError(
            f"issue at hour {issue.issue_hour} carries no forecast track"
        )
    eye_lats, eye_lons, _ = interpolate_track(issue.track, hours)
    d = np.empty((grid.n_cells, hours.size), dtype=np.float64)
    for j in range(hours.size):
        d[:, j] = distance_to_eye(grid.center_lat, grid.center_lon,
                                  eye_lats[j], eye_lons[j])
    return d.astype(np.float32).astype(np.float64)


def _assemble_window(grid: Grid, past_wrd: np.ndarray, future_wrd: np.ndarray,
                     o_past_ratio: np.ndarray) -> np.ndarray:
    """[n_cells, 12, 4] raw window; future O zeroed."""
    dyn = np.zeros((grid.n_cells, WINDOW_HOURS, 4), dtype=np.float64)
    dyn[:, :PAST_HOURS, :3] = past_wrd
    dyn[:, PAST_HOURS:, :3] = future_wrd
    dyn[:, :PAST_HOURS, CH_O] = o_past_ratio
    return dyn


def run_nowcast(model: StoCastModel, grid: Grid, panel: EventPanel,
                start_hour: int, n_iterations: int,
                weather_mode: str = "ideal",
                issues: list[ForecastIssue] | None = None) -> RollingRun:
    """Rolling 6-hour forecast with outage and weather assimilation."""
    if weather_mode not in ("ideal", "actual"):
        raise InputError(f"weather_mode must be ideal or actual, got {weather_mode!r}")
    if weather_mode == "actual" and not issues:
        raise ForecastInputError("actual weather mode needs forecast issues")
    _check_run_window(panel, start_hour, n_iterations)
    run = RollingRun(scheme="nowcast", weather_mode=weather_mode,
                     event_id=panel.event_id, start_hour=start_hour,
                     n_iterations=n_iterations,
                     grid_fingerprint=grid.spec.fingerprint())
    for k in range(n_iterations):
        t0 = start_hour + HORIZON_HOURS * k
        past = _panel_block(panel, t0 - PAST_HOURS, t0)
        o_past = _o_ratio(grid, past[:, :, CH_O])
        issue_hour = None
        if weather_mode == "ideal":
            future = _panel_block(panel, t0, t0 + HORIZON_HOURS)[:, :, :3]
        else:
            issue = freshest_issue(issues, t0)
            issue_hour = issue.issue_hour
            wind, rain = issue.hours_slice(t0, t0 + HORIZON_HOURS)
            hours = np.arange(t0, t0 + HORIZON_HOURS)
            future = np.stack(
                [wind, rain, _issue_track_d(grid, issue, hours)], axis=2
            )
        dyn = _assemble_window(grid, past[:, :, :3], future, o_past)
        counts, ratios = predict_step(model, grid, dyn)
        run.iterations.append(IterationRecord(
            index=k, t0=t0, issue_hour=issue_hour, o_past=o_past,
            pred_ratios=ratios, pred_counts=counts,
        ))
    return run


def run_longterm(model: StoCastModel, grid: Grid, panel: EventPanel,
                 start_hour: int, n_iterations: int,
                 weather_mode: str = "ideal",
                 issue: ForecastIssue | None = None) -> RollingRun:
    """Recursive rollout: observations and forecasts enter only at start.

    Iteration 0 equals a nowcast step bit-exactly.  Later iterations feed
    back the model's own predicted ratios as O(-6) and slide over the
    single initial weather horizon (ideal panel or one forecast issue);
    no observation after `start_hour` is consumed.
    """
    if weather_mode not in ("ideal", "actual"):
        raise InputError(f"weather_mode must be ideal or actual, got {weather_mode!r}")
    _check_run_window(panel, start_hour, n_iterations)
    end = start_hour + HORIZON_HOURS * n_iterations
    if weather_mode == "actual":
        if issue is None:
            raise ForecastInputError("actual weather mode needs a forecast issue")
        if not issue.covers(start_hour, end):
            raise ForecastInputError(
                f"longterm needs one issue covering hours [{start_hour}, "
                f"{end}); issue at {issue.issue_hour} covers "
                f"[{issue.issue_hour}, {issue.issue_hour + issue.horizon_hours})"
            )
    run = RollingRun(scheme="longterm", weather_mode=weather_mode,
                     event_id=panel.event_id, start_hour=start_hour,
                     n_iterations=n_iterations,
                     grid_fingerprint=grid.spec.fingerprint())
    prev_ratios: np.ndarray | None = None
    for k in range(n_iterations):
        t0 = start_hour + HORIZON_HOURS * k
        hours_full = np.arange(t0 - PAST_HOURS, t0 + HORIZON_HOURS)
        if k == 0:
            past = _panel_block(panel, t0 - PAST_HOURS, t0)
            o_past = _o_ratio(grid, past[:, :, CH_O])
            past_wrd = past[:, :, :3]
        else:
            o_past = prev_ratios
            if weather_mode == "ideal":
                past_wrd = _panel_block(panel, t0 - PAST_HOURS, t0)[:, :, :3]
            else:
                wind, rain = issue.hours_slice(t0 - PAST_HOURS, t0)
                past_wrd = np.stack(
                    [wind, rain,
                     _issue_track_d(grid, issue, hours_full[:PAST_HOURS])],
                    axis=2,
                )
        if weather_mode == "ideal":
            future_wrd = _panel_block(panel, t0, t0 + HORIZON_HOURS)[:, :, :3]
            issue_hour = None
        else:
            wind, rain = issue.hours_slice(t0, t0 + HORIZON_HOURS)
            future_wrd = np.stack(
                [wind, rain,
                 _issue_track_d(grid, issue, hours_full[PAST_HOURS:])],
                axis=2,
            )
            issue_hour = issue.issue_hour
        dyn = _assemble_window(grid, past_wrd, future_wrd, o_past)
        counts, ratios = predict_step(model, grid, dyn)
        run.iterations.append(IterationRecord(
            index=k, t0=t0, issue_hour=issue_hour, o_past=o_past,
            pred_ratios=ratios, pred_counts=counts,
        ))
        prev_ratios = ratios
    return run


# ---------------------------------------------------------------------------
# Error decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorDecomposition:
    """MAE split into model, weather, and observation components."""

    e_total: float
    e_model: float
    e_weather: float
    e_obs: float
    share_model: float
    share_weather: float

    def to_dict(self) -> dict:
        return {
            "E_total": self.e_total, "E_model": self.e_model,
            "E_weather": self.e_weather, "E_obs": self.e_obs,
            "share_model": self.share_model,
            "share_weather": self.share_weather,
        }


def _mae(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).mean())


def decompose_errors(panel: EventPanel, nowcast_ideal: RollingRun,
                     nowcast_actual: RollingRun,
                     longterm_ideal: RollingRun) -> ErrorDecomposition:
    """Split total error into model, weather, and observation parts."""
    runs = (nowcast_ideal, nowcast_actual, longterm_ideal)
    expect = [("nowcast", "ideal"), ("nowcast", "actual"), ("longterm", "ideal")]
    for run, (scheme, mode) in zip(runs, expect):
        if (run.scheme, run.weather_mode) != (scheme, mode):
            raise ContractError(
                f"decompose_errors needs a {scheme}/{mode} run, got "
                f"{run.scheme}/{run.weather_mode}"
            )
    first = runs[0]
    for run in runs[1:]:
        if (run.start_hour, run.n_iterations, run.grid_fingerprint,
                run.event_id) != (first.start_hour, first.n_iterations,
                                  first.grid_fingerprint, first.event_id):
            raise ContractError(
                "decompose_errors runs must share event, start hour, "
                "iterations, and grid"
            )
    obs = observed_counts(panel, nowcast_ideal)
    return _decompose_arrays(nowcast_ideal.pred_counts(),
                             nowcast_actual.pred_counts(),
                             longterm_ideal.pred_counts(), obs)


def _decompose_arrays(ni_pred: np.ndarray, na_pred: np.ndarray,
                      li_pred: np.ndarray, obs: np.ndarray
                      ) -> ErrorDecomposition:
    e_model = _mae(ni_pred, obs)
    e_total = _mae(na_pred, obs)
    e_weather = _mae(na_pred, ni_pred)
    e_obs = max(0.0, _mae(li_pred, obs) - e_model)
    denom = e_model + e_weather
    if denom > 0:
        share_model = e_model / denom
        share_weather = e_weather / denom
    else:
        share_model, share_weather = 1.0, 0.0
    return ErrorDecomposition(
        e_total=e_total, e_model=e_model, e_weather=e_weather, e_obs=e_obs,
        share_model=share_model, share_weather=share_weather,
    )


def decompose_saved_runs(nowcast_ideal_dir, nowcast_actual_dir,
                         longterm_ideal_dir) -> ErrorDecomposition:
    """Decomposition from three saved run directories."""
    loaded = [load_run_predictions(d) for d in
              (nowcast_ideal_dir, nowcast_actual_dir, longterm_ideal_dir)]
    expect = [("nowcast", "ideal"), ("nowcast", "actual"), ("longterm", "ideal")]
    for summary, (scheme, mode) in zip(loaded, expect):
        if (summary["scheme"], summary["weather_mode"]) != (scheme, mode):
            raise InputError(
                f"decomposition needs a {scheme}/{mode} run, got "
                f"{summary['scheme']}/{summary['weather_mode']}"
            )
    first = loaded[0]
    for summary in loaded[1:]:
        same = all(summary[k] == first[k] for k in
                   ("event_id", "start_hour", "n_iterations",
                    "grid_fingerprint"))
        if not same or not np.array_equal(summary["obs_counts"],
                                          first["obs_counts"]):
            raise InputError(
                "decomposition runs must share event, start hour, "
                "iterations, grid, and observations"
            )
    return _decompose_arrays(loaded[0]["pred_counts"],
                             loaded[1]["pred_counts"],
                             loaded[2]["pred_counts"],
                             first["obs_counts"])


# ---------------------------------------------------------------------------
# Accumulation and export
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AccumulatedSeries:
    """Clamped prefix sums of predicted and observed counts."""

    hours: np.ndarray               # [H] absolute forecast hours
    predicted: np.ndarray           # [n_cells, H] clamped prefix sums
    observed: np.ndarray            # [n_cells, H]
    clamped_cells: np.ndarray       # cell ids whose raw sum exceeded C
    provincial_predicted: np.ndarray  # [H]
    provincial_observed: np.ndarray   # [H]


def accumulate(run: RollingRun, grid: Grid, panel: EventPanel
               ) -> AccumulatedSeries:
    """Per-cell accumulative series, clamped at C, plus provincial totals."""
    if grid.spec.fingerprint() != run.grid_fingerprint:
        raise ContractError("run was produced on a different grid")
    cap = grid.transformer_count.astype(np.float64)[:, None]
    raw_pred = np.cumsum(run.pred_counts(), axis=1)
    clamped = np.flatnonzero((raw_pred > cap + 1e-12).any(axis=1))
    pred = np.minimum(raw_pred, cap)
    obs = np.minimum(np.cumsum(observed_counts(panel, run), axis=1), cap)
    return AccumulatedSeries(
        hours=run.forecast_hours(),
        predicted=pred,
        observed=obs,
        clamped_cells=clamped,
        provincial_predicted=pred.sum(axis=0),
        provincial_observed=obs.sum(axis=0),
    )


def per_iteration_mae(run: RollingRun, panel: EventPanel) -> list[float]:
    obs = observed_counts(panel, run)
    out = []
    for k, it in enumerate(run.iterations):
        o = obs[:, k * HORIZON_HOURS: (k + 1) * HORIZON_HOURS]
        out.append(_mae(it.pred_counts, o))
    return out


def write_pgm(path, values: np.ndarray) -> None:
    """8-bit binary PGM of a [rows, cols] array scaled onto 0..255."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ContractError(f"PGM needs a 2-d array, got shape {values.shape}")
    top = float(values.max())
    scale = 255.0 / top if top > 0 else 0.0
    pixels = np.rint(values * scale).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{values.shape[1]} {values.shape[0]}\n255\n".encode())
        fh.write(pixels.tobytes())


def save_run(run: RollingRun, grid: Grid, panel: EventPanel, directory,
             decomposition: ErrorDecomposition | None = None,
             pgm: bool = False) -> None:
    """Run directory: per-iteration CSVs, summary JSON, optional PGMs."""
    os.makedirs(directory, exist_ok=True)
    obs = observed_counts(panel, run)
    for it in run.iterations:
        rows = []
        for cell in range(grid.n_cells):
            for j in range(HORIZON_HOURS):
                hour = it.t0 + j
                col = hour - run.start_hour
                rows.append([
                    cell, hour,
                    repr(float(it.pred_counts[cell, j])),
                    repr(float(it.pred_ratios[cell, j])),
                    repr(float(obs[cell, col])),
                ])
        with open(os.path.join(directory, f"iteration_{it.index:02d}.csv"),
                  "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RUN_CSV_HEADER)
            writer.writerows(rows)
    acc = accumulate(run, grid, panel)
    if pgm:
        spec = grid.spec
        for k in range(run.n_iterations):
            col = (k + 1) * HORIZON_HOURS - 1
            img = acc.predicted[:, col].reshape(spec.n_rows, spec.n_cols)
            write_pgm(os.path.join(directory, f"accumulated_{k:02d}.pgm"), img)
    summary = {
        "scheme": run.scheme,
        "weather_mode": run.weather_mode,
        "event_id": run.event_id,
        "start_hour": run.start_hour,
        "n_iterations": run.n_iterations,
        "grid_fingerprint": run.grid_fingerprint,
        "per_iteration_mae": per_iteration_mae(run, panel),
        "issue_hours": [it.issue_hour for it in run.iterations],
        "provincial_predicted_final": float(acc.provincial_predicted[-1]),
        "provincial_observed_final": float(acc.provincial_observed[-1]),
        "n_clamped_cells": int(acc.clamped_cells.size),
    }
    if decomposition is not None:
        summary["decomposition"] = decomposition.to_dict()
    with open(os.path.join(directory, "summary.json"), "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_run_predictions(directory) -> dict:
    """Reload a saved run's summary and per-iteration prediction arrays."""
    try:
        with open(os.path.join(directory, "summary.json")) as fh:
            summary = json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"run summary not found in {directory}") from exc
    preds = []
    obs = []
    for k in range(int(summary["n_iterations"])):
        path = os.path.join(directory, f"iteration_{k:02d}.csv")
        cells: dict[int, dict[int, tuple[float, float]]] = {}
        try:
            with open(path, newline="") as fh:
                reader = csv.DictReader(fh)
                for row in reader:
                    cells.setdefault(int(row["cell_id"]), {})[
                        int(row["valid_hour"])
                    ] = (float(row["pred_count"]), float(row["obs_count"]))
        except FileNotFoundError as exc:
            raise InputError(f"missing iteration file: {path}") from exc
        n_cells = len(cells)
        p = np.zeros((n_cells, HORIZON_HOURS))
        o = np.zeros((n_cells, HORIZON_HOURS))
        for cell, by_hour in cells.items():
            hours = sorted(by_hour)
            for j, hour in enumerate(hours):
                p[cell, j], o[cell, j] = by_hour[hour]
        preds.append(p)
        obs.append(o)
    summary["pred_counts"] = np.concatenate(preds, axis=1)
    summary["obs_counts"] = np.concatenate(obs, axis=1)
    return summary
