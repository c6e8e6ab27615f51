"""Command-line pipelines: synth, ingest, train, eval, forecast,
decompose, explain, aggregate.

Every command writes its artifacts plus exactly one run_manifest.json
(command, config hash, input file hashes, seeds, tool version, output
paths, wall time) into the output directory.  All randomness comes from
seeds in config files or flags; two runs with identical inputs produce
byte-identical artifacts.  Progress goes to stdout, diagnostics to
stderr.  Exit codes: 0 success, 2 input/config error, 3 numeric
failure, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .attribution import (
    attribution_summary,
    write_attribution_csv,
    write_instance_csv,
)
from .dataset import (
    LosoExperiment,
    WindowSet,
    active_cells,
    apply_standardization,
    build_loso_dataset,
    event_windows,
    holdout_windows,
    split_spatial,
)
from .errors import ContractError, InputError, NumericError
from .evaluation import (
    affected_residents,
    aggregate_regions,
    metrics,
    r_squared,
    write_metric_csv,
)
from .forecasting import (
    ForecastIssue,
    decompose_saved_runs,
    load_run_predictions,
    run_longterm,
    run_nowcast,
    save_run,
)
from .grid import read_grid_csv, write_grid_csv
from .ingest import EventPanel, load_event_dir
from .nn import Architecture, load_checkpoint, save_checkpoint
from .rng import SplitMix64, derive_seed
from .synthetic import (
    RegionConfig,
    SyntheticConfig,
    analytic_panel,
    default_event_configs,
    default_region_config,
    gen_event,
    gen_forecast_issue,
    gen_region,
)
from .training import TrainConfig, predict_ratios, run_loso_fold

MANIFEST_NAME = "run_manifest.json"


# ---------------------------------------------------------------------------
# Run manifests
# ---------------------------------------------------------------------------

@dataclass
class RunManifest:
    command: str
    config_hash: str
    input_hashes: dict[str, str]
    seeds: dict
    tool_version: str
    output_paths: list[str]
    wall_time_s: float = 0.0

    def write(self, out_dir) -> None:
        path = os.path.join(out_dir, MANIFEST_NAME)
        with open(path, "w") as fh:
            json.dump({
                "command": self.command,
                "config_hash": self.config_hash,
                "input_hashes": self.input_hashes,
                "seeds": self.seeds,
                "tool_version": self.tool_version,
                "output_paths": sorted(self.output_paths),
                "wall_time_s": self.wall_time_s,
            }, fh, sort_keys=True, indent=2)
            fh.write("\n")


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _hash_inputs(paths) -> dict[str, str]:
    """sha256 per input file; directories are walked in sorted order."""
    out: dict[str, str] = {}
    for p in paths:
        p = str(p)
        if os.path.isdir(p):
            for root, dirs, files in os.walk(p):
                dirs.sort()
                for name in sorted(files):
                    full = os.path.join(root, name)
                    out[full] = _sha256_file(full)
        elif os.path.isfile(p):
            out[p] = _sha256_file(p)
        else:
            raise InputError(f"input not found: {p}")
    return out


def _config_hash(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, default=str).encode()
    ).hexdigest()


def _finish(out_dir, command, config_obj, input_paths, seeds, outputs,
            started: float) -> None:
    RunManifest(
        command=command,
        config_hash=_config_hash(config_obj),
        input_hashes=_hash_inputs(input_paths),
        seeds=seeds,
        tool_version=__version__,
        output_paths=[str(p) for p in outputs],
        wall_time_s=time.time() - started,
    ).write(out_dir)


# ---------------------------------------------------------------------------
# Shared loading helpers
# ---------------------------------------------------------------------------

def _load_json(path, what: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"{what} not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} {path} is not valid JSON: {exc}") from exc


def _require(config: dict, key: str, what: str):
    if key not in config:
        raise InputError(f"{what}: missing required field '{key}'")
    return config[key]


def _resolve(base_file, path) -> str:
    """Resolve a manifest-relative path against the manifest location."""
    path = str(path)
    if os.path.isabs(path):
        return path
    return os.path.join(os.path.dirname(os.path.abspath(str(base_file))), path)


def _load_panels(paths) -> dict[str, EventPanel]:
    panels: dict[str, EventPanel] = {}
    for p in paths:
        panel = EventPanel.load(p)
        if panel.event_id in panels:
            raise InputError(f"duplicate panel for event {panel.event_id!r}")
        panels[panel.event_id] = panel
    return panels


def _model_stats(model):
    if model.stats is None:
        raise InputError(
            "checkpoint carries no standardization stats; retrain or "
            "rebuild the checkpoint"
        )
    return model.stats


def _counts_and_labels(model, ws: WindowSet) -> tuple[np.ndarray, np.ndarray]:
    pred = predict_ratios(model, ws.dynamic, ws.static)
    c = ws.counts[:, None]
    return pred * c, ws.labels * c


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args) -> None:
    started = time.time()
    config = _load_json(args.config, "synth config")
    seed = int(_require(config, "seed", "synth config"))
    try:
        region_cfg = (RegionConfig.from_dict(config["region"])
                      if "region" in config else default_region_config(seed))
        if "events" in config:
            event_cfgs = [SyntheticConfig.from_dict(e)
                          for e in config["events"]]
        else:
            event_cfgs = default_event_configs(seed)
    except KeyError as exc:
        raise InputError(f"synth config: missing required field {exc}") from exc

    os.makedirs(args.out_dir, exist_ok=True)
    region = gen_region(region_cfg)
    grid_path = os.path.join(args.out_dir, "grid.csv")
    write_grid_csv(region.grid, grid_path + ".spec.json", grid_path)
    outputs = ["grid.csv", "grid.csv.spec.json"]
    print(f"region: {region.grid.n_cells} cells, "
          f"{len(region.transformers)} transformers, "
          f"{len(region.stations)} stations")

    by_id: dict[str, SyntheticConfig] = {}
    for cfg in event_cfgs:
        if cfg.event_id in by_id:
            raise InputError(f"synth config: duplicate event {cfg.event_id!r}")
        by_id[cfg.event_id] = cfg
        event_dir = os.path.join(args.out_dir, cfg.event_id)
        truth = gen_event(region, cfg, event_dir)
        for name in ("stations.csv", "observations.csv", "track.csv",
                     "transformers.csv", "outages.csv", "event.json",
                     "truth.json"):
            outputs.append(os.path.join(cfg.event_id, name))
        print(f"event {cfg.event_id}: {cfg.n_hours} h, "
              f"{truth['total_outages']} outages")

    seen_issue_names = set()
    for spec in config.get("issues", []):
        event_id = str(_require(spec, "event_id", "issue config"))
        if event_id not in by_id:
            raise InputError(f"issue config: unknown event {event_id!r}")
        cfg = by_id[event_id]
        issue_hour = int(_require(spec, "issue_hour", "issue config"))
        horizon = int(_require(spec, "horizon_hours", "issue config"))
        source = str(spec.get("source", "panel"))
        if source not in ("panel", "analytic"):
            raise InputError(
                f"issue config: source must be panel or analytic, "
                f"got {source!r}"
            )
        panel = analytic_panel(region, cfg) if source == "panel" else None
        issue = gen_forecast_issue(
            region, cfg, issue_hour, horizon,
            wind_bias=float(spec.get("wind_bias", 1.0)),
            rain_bias=float(spec.get("rain_bias", 1.0)),
            noise=float(spec.get("noise", 0.0)),
            seed=int(spec.get("seed", cfg.seed)),
            source_panel=panel,
        )
        name = os.path.join(
            event_id, f"issue_{spec.get('name', issue_hour)}.fcst")
        if name in seen_issue_names:
            raise InputError(
                f"issue config: duplicate issue file {name!r}; give the "
                f"issues distinct 'name' fields"
            )
        seen_issue_names.add(name)
        issue.save(os.path.join(args.out_dir, name))
        outputs.append(name)
        print(f"issue {event_id}@{issue_hour}: {horizon} h horizon")

    _finish(args.out_dir, "synth", config, [args.config],
            {"seed": seed, "events": {e: c.seed for e, c in by_id.items()}},
            outputs, started)


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> None:
    started = time.time()
    grid = read_grid_csv(args.grid)
    panel, cleaned = load_event_dir(grid, args.event_dir)
    os.makedirs(args.out_dir, exist_ok=True)
    panel.save(args.out_dir)
    print(f"event {panel.event_id}: {panel.n_hours} h x {panel.n_cells} "
          f"cells, {cleaned.n_outages} outages after cleaning")
    _finish(args.out_dir, "ingest", {"event_dir": str(args.event_dir)},
            [args.event_dir, args.grid, str(args.grid) + ".spec.json"],
            {}, ["panel.json", "panel.f32"], started)


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def cmd_train(args) -> None:
    started = time.time()
    grid = read_grid_csv(args.grid)
    config = _load_json(args.config, "train config")
    arch = None
    train_dict = dict(config)
    if "arch" in train_dict:
        try:
            arch = Architecture.from_dict(train_dict.pop("arch"))
        except (KeyError, TypeError) as exc:
            raise InputError(f"train config: bad arch table: {exc}") from exc
    try:
        train_cfg = TrainConfig.from_dict(train_dict)
    except TypeError as exc:
        raise InputError(f"train config: {exc}") from exc

    panels = _load_panels(args.panels)
    if args.holdout not in panels:
        raise InputError(
            f"holdout event {args.holdout!r} not among panels "
            f"{sorted(panels)}"
        )
    cells = active_cells(grid, [panels[e] for e in sorted(panels)])
    cell_split = split_spatial(cells, seed=train_cfg.seed)
    print(f"training holdout={args.holdout} on {len(panels) - 1} events, "
          f"{len(cell_split[0])}/{len(cell_split[1])} train/test cells")
    fold = run_loso_fold(args.holdout, sorted(panels), panels, grid,
                         train_cfg, cell_split, arch=arch,
                         log_every=args.log_every)
    os.makedirs(args.out_dir, exist_ok=True)
    save_checkpoint(fold.model, args.out_dir)
    fold.history.write_csv(os.path.join(args.out_dir, "history.csv"))
    with open(os.path.join(args.out_dir, "metrics.json"), "w") as fh:
        json.dump(fold.metrics, fh, sort_keys=True, indent=2)
        fh.write("\n")
    best = min(fold.history.val_loss) if fold.history.val_loss else float("nan")
    print(f"trained {len(fold.history.val_loss)} epochs, best val WHL {best:.6g}")
    _finish(args.out_dir, "train", config,
            list(args.panels) + [args.grid, str(args.grid) + ".spec.json",
                                 args.config],
            {"seed": train_cfg.seed},
            ["checkpoint.json", "params.f64", "history.csv", "metrics.json"],
            started)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def cmd_eval(args) -> None:
    started = time.time()
    model = load_checkpoint(args.model)
    stats = _model_stats(model)
    manifest = _load_json(args.split_manifest, "split manifest")
    grid = read_grid_csv(
        _resolve(args.split_manifest,
                 _require(manifest, "grid_csv", "split manifest")))
    holdout = str(_require(manifest, "holdout_event_id", "split manifest"))
    seed = int(_require(manifest, "seed", "split manifest"))

    panels = _load_panels(args.panels)
    if holdout not in panels:
        raise InputError(f"holdout event {holdout!r} not among panels")
    cells = active_cells(grid, [panels[e] for e in sorted(panels)])
    train_cells, test_cells = split_spatial(cells, seed=seed)
    experiment = LosoExperiment(
        holdout_event_id=holdout,
        training_event_ids=tuple(e for e in sorted(panels) if e != holdout),
        train_cell_ids=train_cells,
        test_cell_ids=test_cells,
        seed=seed,
    )
    train, val, test_grid = build_loso_dataset(experiment, panels, grid)
    held = holdout_windows(experiment, panels, grid)

    reports = []
    r2 = {}
    for split, ws in (("training", train), ("validation", val),
                      ("test-grid", test_grid), ("test-event", held)):
        sws = apply_standardization(stats, ws)
        pred, obs = _counts_and_labels(model, sws)
        reports.append(metrics(pred, obs, split=split))
        r2[split] = r_squared(pred.sum(axis=1), obs.sum(axis=1))
        print(f"{split}: MAE {reports[-1].mae:.6g} "
              f"R2 {r2[split]:.4f} ({len(ws)} windows)")
    os.makedirs(args.out_dir, exist_ok=True)
    write_metric_csv(os.path.join(args.out_dir, "metrics.csv"), reports)
    with open(os.path.join(args.out_dir, "r2.json"), "w") as fh:
        json.dump(r2, fh, sort_keys=True, indent=2)
        fh.write("\n")
    _finish(args.out_dir, "eval", manifest,
            list(args.panels) + [args.model, args.split_manifest],
            {"seed": seed}, ["metrics.csv", "r2.json"], started)


# ---------------------------------------------------------------------------
# forecast
# ---------------------------------------------------------------------------

def cmd_forecast(args) -> None:
    started = time.time()
    model = load_checkpoint(args.model)
    _model_stats(model)
    grid = read_grid_csv(args.grid)
    panel = EventPanel.load(args.panel)
    issues = [ForecastIssue.load(p, grid) for p in args.issue]

    start_hour = (args.start_hour if args.start_hour is not None
                  else panel.start_hour + 6)
    n_iter = (args.iterations if args.iterations is not None
              else max((panel.n_hours - 6) // 6, 1))
    if args.scheme == "nowcast":
        run = run_nowcast(model, grid, panel, start_hour, n_iter,
                          weather_mode=args.weather, issues=issues)
    else:
        issue = None
        if args.weather == "actual":
            if len(issues) != 1:
                raise InputError(
                    f"longterm actual mode needs exactly one --issue, "
                    f"got {len(issues)}"
                )
            issue = issues[0]
        run = run_longterm(model, grid, panel, start_hour, n_iter,
                           weather_mode=args.weather, issue=issue)
    os.makedirs(args.out_dir, exist_ok=True)
    save_run(run, grid, panel, args.out_dir, pgm=args.pgm)
    with open(os.path.join(args.out_dir, "summary.json")) as fh:
        summary = json.load(fh)
    for k, mae in enumerate(summary["per_iteration_mae"]):
        print(f"iteration {k}: t0={start_hour + 6 * k} MAE {mae:.6g}")
    outputs = [f"iteration_{k:02d}.csv" for k in range(n_iter)]
    outputs.append("summary.json")
    if args.pgm:
        outputs += [f"accumulated_{k:02d}.pgm" for k in range(n_iter)]
    _finish(args.out_dir, "forecast",
            {"scheme": args.scheme, "weather": args.weather,
             "start_hour": start_hour, "iterations": n_iter},
            [args.model, args.panel, args.grid,
             str(args.grid) + ".spec.json"] + list(args.issue),
            {}, outputs, started)


# ---------------------------------------------------------------------------
# decompose
# ---------------------------------------------------------------------------

def cmd_decompose(args) -> None:
    started = time.time()
    dec = decompose_saved_runs(args.nowcast_ideal, args.nowcast_actual,
                               args.longterm_ideal)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "decomposition.json"), "w") as fh:
        json.dump(dec.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"E_total {dec.e_total:.6g} = model {dec.e_model:.6g} "
          f"+ weather {dec.e_weather:.6g} (+ obs {dec.e_obs:.6g}); "
          f"shares {dec.share_model:.3f}/{dec.share_weather:.3f}")
    _finish(args.out_dir, "decompose", {},
            [args.nowcast_ideal, args.nowcast_actual, args.longterm_ideal],
            {}, ["decomposition.json"], started)


# ---------------------------------------------------------------------------
# explain
# ---------------------------------------------------------------------------

def _subsample(ws: WindowSet, n: int, seed: int, stream: str) -> WindowSet:
    if n >= len(ws):
        return ws
    order = SplitMix64(derive_seed(seed, stream)).permutation(len(ws))
    return ws.subset(np.sort(order[:n]))


def cmd_explain(args) -> None:
    started = time.time()
    model = load_checkpoint(args.model)
    stats = _model_stats(model)
    manifest = _load_json(args.manifest, "dataset manifest")
    grid = read_grid_csv(
        _resolve(args.manifest,
                 _require(manifest, "grid_csv", "dataset manifest")))
    panel_paths = [_resolve(args.manifest, p) for p in
                   _require(manifest, "panels", "dataset manifest")]
    panels = _load_panels(panel_paths)
    bg_events = _require(manifest, "background_events", "dataset manifest")
    ex_events = _require(manifest, "explained_events", "dataset manifest")
    for eid in list(bg_events) + list(ex_events):
        if eid not in panels:
            raise InputError(f"dataset manifest: no panel for event {eid!r}")

    def pool(event_ids):
        return WindowSet.concat([event_windows(panels[e], grid)
                                 for e in sorted(set(event_ids))])

    background = _subsample(pool(bg_events), args.n_background,
                            args.seed, "background")
    explained = _subsample(pool(ex_events), args.n_explained,
                           args.seed, "explained")
    print(f"explaining {len(explained)} windows against "
          f"{len(background)} background windows, "
          f"{args.permutations} permutations")
    summary = attribution_summary(
        model, apply_standardization(stats, background),
        apply_standardization(stats, explained),
        n_permutations=args.permutations, seed=args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    write_attribution_csv(summary,
                          os.path.join(args.out_dir, "phi.csv"),
                          os.path.join(args.out_dir, "summary.csv"))
    write_instance_csv(summary, os.path.join(args.out_dir, "instances.csv"))
    worst = float(np.max(np.abs(summary.residuals)))
    print(f"top group {summary.ranked[0]}; max efficiency residual "
          f"{worst:.3g}")
    _finish(args.out_dir, "explain", manifest,
            panel_paths + [args.model, args.manifest],
            {"seed": args.seed},
            ["phi.csv", "summary.csv", "instances.csv"], started)


# ---------------------------------------------------------------------------
# aggregate
# ---------------------------------------------------------------------------

def cmd_aggregate(args) -> None:
    started = time.time()
    grid = read_grid_csv(args.grid)
    loaded = load_run_predictions(args.run_dir)
    pred = loaded["pred_counts"]
    obs = loaded["obs_counts"]
    if pred.shape[0] != grid.n_cells:
        raise InputError(
            f"run has {pred.shape[0]} cells, grid has {grid.n_cells}"
        )
    cap = grid.transformer_count.astype(np.float64)[:, None]
    pred_final = np.minimum(np.cumsum(pred, axis=1), cap)[:, -1]
    obs_final = np.minimum(np.cumsum(obs, axis=1), cap)[:, -1]
    pred_by = aggregate_regions(pred_final, grid, args.level)
    obs_by = aggregate_regions(obs_final, grid, args.level)
    if args.residents:
        res_by = aggregate_regions(affected_residents(pred_final, grid),
                                   grid, args.level)
    os.makedirs(args.out_dir, exist_ok=True)
    out_path = os.path.join(args.out_dir, "regions.csv")
    with open(out_path, "w") as fh:
        header = "region_id,predicted,observed"
        if args.residents:
            header += ",affected_residents"
        fh.write(header + "\n")
        for rid in pred_by:
            row = f"{rid},{pred_by[rid]!r},{obs_by.get(rid, 0.0)!r}"
            if args.residents:
                row += f",{res_by.get(rid, 0.0)!r}"
            fh.write(row + "\n")
    print(f"{len(pred_by)} {args.level} regions; provincial predicted "
          f"{sum(pred_by.values()):.6g}, observed {sum(obs_by.values()):.6g}")
    _finish(args.out_dir, "aggregate",
            {"level": args.level, "residents": args.residents},
            [args.run_dir, args.grid, str(args.grid) + ".spec.json"],
            {}, ["regions.csv"], started)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stocast",
        description="Spatiotemporal transformer-outage forecasting pipelines.",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="reserved; all pipelines run single-threaded "
                             "for bit-determinism (default 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic storm event data")
    p.add_argument("config", help="synth config JSON (requires 'seed')")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="build an event panel from raw CSVs")
    p.add_argument("event_dir")
    p.add_argument("grid", help="grid.csv (with .spec.json sidecar)")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train one leave-one-storm-out fold")
    p.add_argument("panels", nargs="+", help="panel directories")
    p.add_argument("grid")
    p.add_argument("config", help="train config JSON")
    p.add_argument("out_dir", help="checkpoint output directory")
    p.add_argument("--holdout", required=True, help="held-out event id")
    p.add_argument("--log-every", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="Table-style metrics for one fold")
    p.add_argument("model", help="checkpoint directory")
    p.add_argument("panels", nargs="+", help="panel directories")
    p.add_argument("split_manifest",
                   help="JSON with grid_csv, holdout_event_id, seed")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("forecast", help="rolling 6-hour forecast run")
    p.add_argument("model")
    p.add_argument("panel")
    p.add_argument("grid")
    p.add_argument("out_dir")
    p.add_argument("--scheme", choices=["nowcast", "longterm"],
                   required=True)
    p.add_argument("--weather", choices=["ideal", "actual"],
                   default="ideal")
    p.add_argument("--start-hour", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--issue", action="append", default=[],
                   help="forecast issue file (repeatable)")
    p.add_argument("--pgm", action="store_true",
                   help="also write accumulated PGM heatmaps")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("decompose", help="error decomposition from three runs")
    p.add_argument("nowcast_ideal", help="nowcast/ideal run directory")
    p.add_argument("nowcast_actual", help="nowcast/actual run directory")
    p.add_argument("longterm_ideal", help="longterm/ideal run directory")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("explain", help="Shapley attribution over 13 groups")
    p.add_argument("model")
    p.add_argument("manifest",
                   help="JSON with grid_csv, panels, background_events, "
                        "explained_events")
    p.add_argument("out_dir")
    p.add_argument("--n-background", type=int, default=6000)
    p.add_argument("--n-explained", type=int, default=1200)
    p.add_argument("--permutations", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("aggregate", help="regional totals from a run")
    p.add_argument("run_dir")
    p.add_argument("grid")
    p.add_argument("out_dir")
    p.add_argument("--level", choices=["town", "county", "city"],
                   required=True)
    p.add_argument("--residents", action="store_true",
                   help="add the affected-residents column")
    p.set_defaults(func=cmd_aggregate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except ContractError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
