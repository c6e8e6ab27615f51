"""Spatial grid, static cell features, distances, and raster aggregation.

The grid lives on an equirectangular projection about a reference
latitude: one degree of latitude is ``KM_PER_DEG`` km everywhere, one
degree of longitude is ``KM_PER_DEG * cos(ref_lat)`` km. Cells are
indexed row-major, and a point maps to a cell by flooring its continuous
grid coordinates, so a point on a shared edge belongs to the
higher-index cell.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, InputError
from .validation import check_lat_lon

EARTH_RADIUS_KM = 6371.0
KM_PER_DEG = 111.1949

GRID_CSV_COLUMNS = [
    "cell_id", "row", "col", "center_lat", "center_lon",
    "elevation", "slope", "aspect", "green_ratio", "impervious_ratio",
    "transformer_count", "town_id", "county_id", "city_id", "population",
]

STATIC_FEATURE_NAMES = ["E", "S", "A", "G", "I", "C"]


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a regular lat/lon grid of square cells."""

    origin_lat: float
    origin_lon: float
    cell_km: float
    n_rows: int
    n_cols: int
    ref_lat: float

    def __post_init__(self):
        if self.cell_km <= 0:
            raise InputError(f"cell_km must be positive, got {self.cell_km}")
        if self.n_rows < 1 or self.n_cols < 1:
            raise InputError(
                f"grid must have at least one row and column, got "
                f"{self.n_rows}x{self.n_cols}"
            )

    @property
    def n_cells(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def dlat_deg(self) -> float:
        return self.cell_km / KM_PER_DEG

    @property
    def dlon_deg(self) -> float:
        return self.cell_km / (KM_PER_DEG * math.cos(math.radians(self.ref_lat)))

    def fingerprint(self) -> str:
        text = (
            f"{self.origin_lat!r},{self.origin_lon!r},{self.cell_km!r},"
            f"{self.n_rows},{self.n_cols},{self.ref_lat!r}"
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "origin_lat": self.origin_lat,
            "origin_lon": self.origin_lon,
            "cell_km": self.cell_km,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "ref_lat": self.ref_lat,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        try:
            return cls(
                origin_lat=float(d["origin_lat"]),
                origin_lon=float(d["origin_lon"]),
                cell_km=float(d["cell_km"]),
                n_rows=int(d["n_rows"]),
                n_cols=int(d["n_cols"]),
                ref_lat=float(d["ref_lat"]),
            )
        except KeyError as exc:
            raise InputError(f"grid spec missing field {exc.args[0]!r}") from exc


@dataclass
class GridCell:
    """One grid cell with its static environmental and exposure features."""

    cell_id: int
    center_lat: float
    center_lon: float
    elevation: float = 0.0
    slope: float = 0.0
    aspect: float = 0.0
    green_ratio: float = 0.0
    impervious_ratio: float = 0.0
    transformer_count: int = 0
    town_id: str | None = None
    county_id: str | None = None
    city_id: str | None = None
    population: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.green_ratio <= 1.0) or not (0.0 <= self.impervious_ratio <= 1.0):
            raise InputError(
                f"cell {self.cell_id}: land-cover ratios must lie in [0, 1]"
            )
        if self.green_ratio + self.impervious_ratio > 1.0 + 1e-9:
            raise InputError(
                f"cell {self.cell_id}: green + impervious ratio exceeds 1"
            )
        if self.transformer_count < 0:
            raise InputError(f"cell {self.cell_id}: negative transformer count")


def haversine_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in km between two (lat, lon) points."""
    check_lat_lon(a[0], a[1], name="a")
    check_lat_lon(b[0], b[1], name="b")
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    s = (
        math.sin((lat2 - lat1) / 2.0) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(s)))


def haversine_km_many(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Vectorized haversine from one point to arrays of points."""
    lat1 = math.radians(lat)
    lon1 = math.radians(lon)
    lat2 = np.radians(np.asarray(lats, dtype=np.float64))
    lon2 = np.radians(np.asarray(lons, dtype=np.float64))
    s = (
        np.sin((lat2 - lat1) / 2.0) ** 2
        + math.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(s)))


def grid_centers(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell center latitudes and longitudes in cell_id order."""
    rows = np.arange(spec.n_rows, dtype=np.float64)
    cols = np.arange(spec.n_cols, dtype=np.float64)
    lats = spec.origin_lat + (rows + 0.5) * spec.dlat_deg
    lons = spec.origin_lon + (cols + 0.5) * spec.dlon_deg
    lat_grid, lon_grid = np.meshgrid(lats, lons, indexing="ij")
    return lat_grid.ravel(), lon_grid.ravel()


def build_grid(spec: GridSpec) -> list[GridCell]:
    """Materialize all cells of ``spec`` with default (zero) features."""
    lats, lons = grid_centers(spec)
    return [
        GridCell(cell_id=i, center_lat=float(lats[i]), center_lon=float(lons[i]))
        for i in range(spec.n_cells)
    ]


def assign_point(spec: GridSpec, lat: float, lon: float) -> int | None:
    """Cell id containing the point, or None if outside the grid envelope."""
    r = math.floor((lat - spec.origin_lat) / spec.dlat_deg)
    c = math.floor((lon - spec.origin_lon) / spec.dlon_deg)
    if 0 <= r < spec.n_rows and 0 <= c < spec.n_cols:
        return r * spec.n_cols + c
    return None


def assign_points(spec: GridSpec, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Vectorized assign_point; out-of-domain points get -1."""
    lats = np.asarray(lats, dtype=np.float64)
    lons = np.asarray(lons, dtype=np.float64)
    r = np.floor((lats - spec.origin_lat) / spec.dlat_deg).astype(np.int64)
    c = np.floor((lons - spec.origin_lon) / spec.dlon_deg).astype(np.int64)
    inside = (r >= 0) & (r < spec.n_rows) & (c >= 0) & (c < spec.n_cols)
    ids = r * spec.n_cols + c
    ids[~inside] = -1
    return ids


class Grid:
    """A GridSpec plus per-cell static feature arrays, indexed by cell_id."""

    def __init__(self, spec: GridSpec, cells: list[GridCell] | None = None):
        self.spec = spec
        n = spec.n_cells
        if cells is None:
            cells = build_grid(spec)
        if len(cells) != n:
            raise ContractError(f"grid needs {n} cells, got {len(cells)}")
        self.center_lat = np.asarray([c.center_lat for c in cells], dtype=np.float64)
        self.center_lon = np.asarray([c.center_lon for c in cells], dtype=np.float64)
        self.elevation = np.asarray([c.elevation for c in cells], dtype=np.float64)
        self.slope = np.asarray([c.slope for c in cells], dtype=np.float64)
        self.aspect = np.asarray([c.aspect for c in cells], dtype=np.float64)
        self.green_ratio = np.asarray([c.green_ratio for c in cells], dtype=np.float64)
        self.impervious_ratio = np.asarray(
            [c.impervious_ratio for c in cells], dtype=np.float64
        )
        self.transformer_count = np.asarray(
            [c.transformer_count for c in cells], dtype=np.int64
        )
        self.town_id = [c.town_id for c in cells]
        self.county_id = [c.county_id for c in cells]
        self.city_id = [c.city_id for c in cells]
        self.population = np.asarray(
            [np.nan if c.population is None else c.population for c in cells],
            dtype=np.float64,
        )

    @property
    def n_cells(self) -> int:
        return self.spec.n_cells

    def static_features(self) -> np.ndarray:
        """Per-cell static predictor matrix, columns (E, S, A, G, I, C)."""
        return np.column_stack(
            [
                self.elevation,
                self.slope,
                self.aspect,
                self.green_ratio,
                self.impervious_ratio,
                self.transformer_count.astype(np.float64),
            ]
        )

    def region_ids(self, level: str) -> list[str | None]:
        try:
            return {"town": self.town_id, "county": self.county_id, "city": self.city_id}[level]
        except KeyError:
            raise InputError(f"unknown region level {level!r}") from None

    def cells(self) -> list[GridCell]:
        out = []
        for i in range(self.n_cells):
            pop = self.population[i]
            out.append(
                GridCell(
                    cell_id=i,
                    center_lat=float(self.center_lat[i]),
                    center_lon=float(self.center_lon[i]),
                    elevation=float(self.elevation[i]),
                    slope=float(self.slope[i]),
                    aspect=float(self.aspect[i]),
                    green_ratio=float(self.green_ratio[i]),
                    impervious_ratio=float(self.impervious_ratio[i]),
                    transformer_count=int(self.transformer_count[i]),
                    town_id=self.town_id[i],
                    county_id=self.county_id[i],
                    city_id=self.city_id[i],
                    population=None if np.isnan(pop) else float(pop),
                )
            )
        return out


def write_grid_csv(grid: Grid, spec_path, path) -> None:
    """Write the cells CSV plus a sidecar JSON holding the GridSpec."""
    import json

    with open(spec_path, "w") as fh:
        json.dump(grid.spec.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GRID_CSV_COLUMNS)
        for i in range(grid.n_cells):
            pop = grid.population[i]
            writer.writerow(
                [
                    i,
                    i // grid.spec.n_cols,
                    i % grid.spec.n_cols,
                    repr(float(grid.center_lat[i])),
                    repr(float(grid.center_lon[i])),
                    repr(float(grid.elevation[i])),
                    repr(float(grid.slope[i])),
                    repr(float(grid.aspect[i])),
                    repr(float(grid.green_ratio[i])),
                    repr(float(grid.impervious_ratio[i])),
                    int(grid.transformer_count[i]),
                    grid.town_id[i] or "",
                    grid.county_id[i] or "",
                    grid.city_id[i] or "",
                    "" if np.isnan(pop) else repr(float(pop)),
                ]
            )


def read_grid_csv(path, spec: GridSpec | None = None) -> Grid:
    """Read a cells CSV; the spec comes from ``<path>.spec.json`` if not given."""
    import json
    import os

    if spec is None:
        spec_path = str(path) + ".spec.json"
        if not os.path.exists(spec_path):
            raise InputError(f"grid spec sidecar not found: {spec_path}")
        with open(spec_path) as fh:
            spec = GridSpec.from_dict(json.load(fh))
    cells: list[GridCell] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(GRID_CSV_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise InputError(f"grid csv {path}: missing columns {sorted(missing)}")
        for row in reader:
            pop = row["population"].strip()
            cells.append(
                GridCell(
                    cell_id=int(row["cell_id"]),
                    center_lat=float(row["center_lat"]),
                    center_lon=float(row["center_lon"]),
                    elevation=float(row["elevation"]),
                    slope=float(row["slope"]),
                    aspect=float(row["aspect"]),
                    green_ratio=float(row["green_ratio"]),
                    impervious_ratio=float(row["impervious_ratio"]),
                    transformer_count=int(row["transformer_count"]),
                    town_id=row["town_id"] or None,
                    county_id=row["county_id"] or None,
                    city_id=row["city_id"] or None,
                    population=float(pop) if pop else None,
                )
            )
    cells.sort(key=lambda c: c.cell_id)
    if [c.cell_id for c in cells] != list(range(spec.n_cells)):
        raise InputError(f"grid csv {path}: cell ids are not 0..{spec.n_cells - 1}")
    return Grid(spec, cells)


# ---------------------------------------------------------------------------
# Rasters
# ---------------------------------------------------------------------------

@dataclass
class Raster:
    """ESRI ASCII-style raster; values[0] is the northernmost row."""

    n_rows: int
    n_cols: int
    x_ll: float
    y_ll: float
    cell_size: float
    nodata: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(
            self.n_rows, self.n_cols
        )

    def pixel_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """(lat, lon) of every pixel center, in file (row-major) order."""
        i = np.arange(self.n_rows, dtype=np.float64)
        j = np.arange(self.n_cols, dtype=np.float64)
        lat = self.y_ll + (self.n_rows - i - 0.5) * self.cell_size
        lon = self.x_ll + (j + 0.5) * self.cell_size
        lat_g, lon_g = np.meshgrid(lat, lon, indexing="ij")
        return lat_g, lon_g

    def valid_mask(self) -> np.ndarray:
        return self.values != self.nodata


def read_asc(path) -> Raster:
    """Parse an ESRI ASCII grid (.asc) file."""
    header: dict[str, float] = {}
    values: list[float] = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) == 2 and parts[0].lower() in {
                "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value",
            }:
                header[parts[0].lower()] = float(parts[1])
            else:
                values.extend(float(v) for v in parts)
    for key in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize"):
        if key not in header:
            raise InputError(f"raster {path}: missing header line {key!r}")
    n_rows = int(header["nrows"])
    n_cols = int(header["ncols"])
    if len(values) != n_rows * n_cols:
        raise InputError(
            f"raster {path}: expected {n_rows * n_cols} values, got {len(values)}"
        )
    return Raster(
        n_rows=n_rows,
        n_cols=n_cols,
        x_ll=header["xllcorner"],
        y_ll=header["yllcorner"],
        cell_size=header["cellsize"],
        nodata=header.get("nodata_value", -9999.0),
        values=np.asarray(values),
    )


def write_asc(raster: Raster, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"ncols {raster.n_cols}\n")
        fh.write(f"nrows {raster.n_rows}\n")
        fh.write(f"xllcorner {raster.x_ll!r}\n")
        fh.write(f"yllcorner {raster.y_ll!r}\n")
        fh.write(f"cellsize {raster.cell_size!r}\n")
        fh.write(f"NODATA_value {raster.nodata!r}\n")
        for row in raster.values:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def horn_slope_aspect(raster: Raster) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel slope (deg), aspect (deg cw from north), and validity.

    Gradients use the 3x3 weighted-difference stencil with edge rows and
    columns replicated; a pixel is invalid when any value in its clamped
    neighborhood is nodata. Aspect is the bearing of the downslope
    direction and is additionally invalid where the gradient vanishes.
    """
    z = np.pad(raster.values, 1, mode="edge")
    ok = np.pad(raster.valid_mask(), 1, mode="edge")

    def win(di, dj):
        return z[1 + di : 1 + di + raster.n_rows, 1 + dj : 1 + dj + raster.n_cols]

    def win_ok(di, dj):
        return ok[1 + di : 1 + di + raster.n_rows, 1 + dj : 1 + dj + raster.n_cols]

    valid = np.ones((raster.n_rows, raster.n_cols), dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            valid &= win_ok(di, dj)

    lat, _ = raster.pixel_centers()
    mx = raster.cell_size * KM_PER_DEG * 1000.0 * np.cos(np.radians(lat))
    my = raster.cell_size * KM_PER_DEG * 1000.0

    dzdx = (
        (win(-1, 1) + 2.0 * win(0, 1) + win(1, 1))
        - (win(-1, -1) + 2.0 * win(0, -1) + win(1, -1))
    ) / (8.0 * mx)
    dzdy = (
        (win(-1, -1) + 2.0 * win(-1, 0) + win(-1, 1))
        - (win(1, -1) + 2.0 * win(1, 0) + win(1, 1))
    ) / (8.0 * my)

    slope = np.degrees(np.arctan(np.hypot(dzdx, dzdy)))
    flat = (dzdx == 0.0) & (dzdy == 0.0)
    aspect = np.degrees(np.arctan2(-dzdx, -dzdy)) % 360.0
    return slope, np.where(flat, np.nan, aspect), valid


@dataclass
class RasterAggregate:
    """Per-cell aggregated values with a mask of cells with no coverage."""

    values: np.ndarray
    missing: np.ndarray

    @property
    def n_missing(self) -> int:
        return int(self.missing.sum())


def aggregate_raster(
    raster: Raster,
    spec: GridSpec,
    mode: str,
    classes: set | frozenset | None = None,
) -> RasterAggregate:
    """Aggregate raster pixels into grid cells by pixel-center membership.

    Modes: ``mean`` of non-nodata pixels; ``class_ratio`` of pixels whose
    value is in ``classes``; ``slope_mean`` / ``aspect_mean`` of the Horn
    surface derivatives (aspect via circular mean of unit vectors).
    Cells without any contributing pixel come back as 0 and flagged.
    """
    if mode == "class_ratio" and not classes:
        raise InputError("class_ratio aggregation requires a non-empty class set")

    lat, lon = raster.pixel_centers()
    cell = assign_points(spec, lat.ravel(), lon.ravel())
    n = spec.n_cells

    if mode in ("mean", "class_ratio"):
        good = raster.valid_mask().ravel() & (cell >= 0)
        ids = cell[good]
        vals = raster.values.ravel()[good]
        counts = np.bincount(ids, minlength=n).astype(np.float64)
        if mode == "mean":
            sums = np.bincount(ids, weights=vals, minlength=n)
        else:
            member = np.isin(vals, sorted(classes)).astype(np.float64)
            sums = np.bincount(ids, weights=member, minlength=n)
        missing = counts == 0
        values = np.divide(sums, counts, out=np.zeros(n), where=~missing)
        return RasterAggregate(values=values, missing=missing)

    if mode in ("slope_mean", "aspect_mean"):
        slope, aspect, valid = horn_slope_aspect(raster)
        good = valid.ravel() & (cell >= 0)
        ids = cell[good]
        if mode == "slope_mean":
            counts = np.bincount(ids, minlength=n).astype(np.float64)
            sums = np.bincount(ids, weights=slope.ravel()[good], minlength=n)
            missing = counts == 0
            values = np.divide(sums, counts, out=np.zeros(n), where=~missing)
            return RasterAggregate(values=values, missing=missing)
        asp = aspect.ravel()[good]
        defined = ~np.isnan(asp)
        ids = ids[defined]
        asp = np.radians(asp[defined])
        counts = np.bincount(ids, minlength=n).astype(np.float64)
        sin_sum = np.bincount(ids, weights=np.sin(asp), minlength=n)
        cos_sum = np.bincount(ids, weights=np.cos(asp), minlength=n)
        missing = counts == 0
        values = np.degrees(np.arctan2(sin_sum, cos_sum)) % 360.0
        values[missing] = 0.0
        return RasterAggregate(values=values, missing=missing)

    raise InputError(f"unknown aggregation mode {mode!r}")
