"""Acceptance gate: one printed line per criterion, tolerances as stated.

The heavy end-to-end criteria (6-8) share one module fixture that builds
the four shipped synthetic storms and trains all four LOSO folds.
"""

import os
import time

import numpy as np
import pytest

import test_attribution as attr_helpers

import stocast.training as training_mod
from stocast.attribution import (
    GROUP_NAMES,
    attribution_summary,
    exact_shapley,
    shapley_attribution,
    standard_groups,
)
from stocast.dataset import (
    PAST_HOURS,
    active_cells,
    apply_standardization,
    build_loso_dataset,
    event_windows,
    holdout_windows,
    slide_windows,
    split_spatial,
    window_count,
)
from stocast.evaluation import r_squared
from stocast.forecasting import (
    ForecastIssue,
    decompose_errors,
    per_iteration_mae,
    run_longterm,
    run_nowcast,
    save_run,
)
from stocast.grid import Grid, GridSpec, haversine_km_many
from stocast.ingest import (
    CH_D,
    CH_O,
    CH_R,
    CH_W,
    EventPanel,
    OutageRecord,
    TrackPoint,
    TransformerRecord,
    clean_outages,
    idw_interpolate,
    interpolate_track,
    load_event_dir,
    read_track_csv,
)
from stocast.losses import batch_loss, huber, huber_grad_f, whl
from stocast.nn import (
    Architecture,
    StoCastModel,
    load_checkpoint,
    model_backward,
    model_forward,
    save_checkpoint,
)
from stocast.rng import SplitMix64, derive_seed
from stocast.synthetic import (
    default_event_configs,
    default_region_config,
    gen_event,
    gen_region,
)
from stocast.training import (
    AdamState,
    TrainConfig,
    adam_step,
    lr_on_plateau,
    predict_ratios,
    run_loso_fold,
    train_loop,
)

# Training configuration for the end-to-end criteria; bounded epochs keep
# the four folds inside the 30-minute budget.
ACCEPT_TRAIN = TrainConfig(lr0=5e-4, batch_size=256, max_epochs=30,
                           early_stop_patience=30, seed=0)


def _report(capsys, num, name, ok, detail=""):
    line = f"[criterion {num:02d}] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


def _toy_grid(n_rows, n_cols, fill=10):
    spec = GridSpec(origin_lat=0.0, origin_lon=0.0, cell_km=111.1949,
                    n_rows=n_rows, n_cols=n_cols, ref_lat=0.0)
    grid = Grid(spec)
    grid.transformer_count = np.full(spec.n_cells, fill, dtype=np.int64)
    return grid


def _toy_panel(grid, n_hours, event_id="ev", seed=1):
    rng = np.random.default_rng(seed)
    ch = np.zeros((grid.n_cells, n_hours, 4), dtype=np.float64)
    ch[:, :, CH_W] = rng.uniform(0, 40, (grid.n_cells, n_hours))
    ch[:, :, CH_R] = rng.uniform(0, 20, (grid.n_cells, n_hours))
    ch[:, :, CH_D] = rng.uniform(5, 300, (grid.n_cells, n_hours))
    ch[:, :, CH_O] = rng.integers(0, 3, (grid.n_cells, n_hours))
    return EventPanel(event_id, 0, n_hours, grid.n_cells, ch)


# -- criterion 1 ---------------------------------------------------------------

def test_criterion_01_windowing_identities(capsys):
    t0 = time.monotonic()
    ok = window_count(66) == 19
    ok &= 3 * 4076 * window_count(66) == 232_332
    ok &= 3 * 1020 * window_count(66) == 58_140
    # brute-force enumeration on small panels
    grid = _toy_grid(2, 3)
    for n_hours in (12, 13, 17, 18, 30, 66):
        panel = _toy_panel(grid, n_hours)
        enumerated = len(slide_windows(panel, grid, cell_id=0))
        brute = sum(1 for a in range(0, n_hours, 3) if a + 12 <= n_hours)
        ok &= enumerated == window_count(n_hours) == brute
    elapsed = time.monotonic() - t0
    ok &= elapsed < 1.0
    _report(capsys, 1, "windowing identities", ok,
            f"19/cell, 232332, 58140; {elapsed:.3f}s")


# -- criterion 2 ---------------------------------------------------------------

def _huber_direct(y, f, delta):
    e = y - f
    if abs(e) <= delta:
        return 0.5 * e * e
    return delta * abs(e) - 0.5 * delta * delta


def test_criterion_02_loss_correctness(capsys):
    delta, weight_w, threshold_t = 10.0, 1000.0, 5.0
    rng = SplitMix64(derive_seed(2, "losses"))
    ys, fs = [], []
    for i in range(1000):
        y = rng.uniform_range(-30.0, 30.0)
        branch = i % 5
        if branch == 0:      # small error
            f = y + rng.uniform_range(-delta, delta) * 0.5
        elif branch == 1:    # large error
            f = y + (delta + rng.uniform_range(1.0, 20.0)) * (1 if i % 2 else -1)
        elif branch == 2:    # exactly at the huber boundary
            f = y + delta * (1 if i % 2 else -1)
        elif branch == 3:    # exactly at the weight threshold
            y = threshold_t
            f = rng.uniform_range(-20.0, 20.0)
        else:                # just above the weight threshold
            y = threshold_t + 1e-9
            f = rng.uniform_range(-20.0, 20.0)
        ys.append(y)
        fs.append(f)
    y = np.array(ys)
    f = np.array(fs)
    h = huber(y, f, delta)
    w = whl(y, f, delta, weight_w, threshold_t)
    ok = True
    for i in range(1000):
        hd = _huber_direct(y[i], f[i], delta)
        wd = (weight_w if y[i] > threshold_t else 1.0) * hd
        ok &= abs(h[i] - hd) <= 1e-12
        ok &= abs(w[i] - wd) <= 1e-12
    # value and derivative continuity at |e| = delta
    eps = 1e-11
    lo = huber(0.0, delta - eps, delta)
    hi = huber(0.0, delta + eps, delta)
    glo = huber_grad_f(0.0, delta - eps, delta)
    ghi = huber_grad_f(0.0, delta + eps, delta)
    ok &= abs(hi - lo) <= 1e-9
    ok &= abs(ghi - glo) <= 1e-9
    _report(capsys, 2, "loss correctness", ok,
            "1000 cases to 1e-12; boundary continuity 1e-9")


# -- criterion 3 ---------------------------------------------------------------

def _kink_margin(arch, cache):
    """Distance of the nearest relu pre-activation from its kink."""
    margin = np.inf
    for name in ("gru1", "gru2", "gru3", "gru4"):
        margin = min(margin, float(np.abs(cache[name]["ac"]).min()))
    for name in ("fc1", "fc2", "fc3", "fc4"):
        margin = min(margin, float(np.abs(cache[name]["a"]).min()))
    return margin


def test_criterion_03_gradient_integrity(capsys):
    t0 = time.monotonic()
    rng = SplitMix64(derive_seed(3, "gradcheck"))
    h = 1e-5
    worst = 0.0
    for trial in range(20):
        widths = {k: 2 + rng.randbelow(5) for k in
                  ("gru1", "gru2", "gru3", "gru4", "fc1", "fc2", "fc3", "fc4")}
        arch = Architecture(**widths)
        # central differences need three guarantees: pre-activations clear of
        # the relu kinks, loss small enough that (up - dn) keeps ~11 digits,
        # and no gradient entry tiny-but-nonzero (those drown in fd roundoff;
        # exact zeros from dead relu paths are safe, fd is bitwise zero).
        # counts <= 4 keeps y below the weight threshold and |e| below delta,
        # so the loss stays on the unweighted quadratic branch throughout.
        for attempt in range(1000):
            model = StoCastModel.initialized(trial * 1000 + attempt, arch)
            gen = np.random.default_rng(trial * 1000 + attempt)
            dyn = gen.normal(size=(2, 12, 4))
            static = gen.normal(size=(2, 6))
            labels = gen.uniform(0.05, 0.4, size=(2, 6))
            counts = gen.uniform(1.0, 4.0, size=2)
            out, cache = model_forward(arch, model.params, dyn, static)
            if _kink_margin(arch, cache) <= 1e-3:
                continue
            _, d_out = batch_loss(out, labels, counts)
            grads = model_backward(arch, model.params, cache, d_out)
            g_min = min(float(np.abs(g[g != 0.0]).min())
                        for g in grads.values() if np.any(g != 0.0))
            if g_min > 3e-6:
                break
        else:
            raise AssertionError(f"no usable fd config for trial {trial}")

        def loss_at():
            o, _ = model_forward(arch, model.params, dyn, static)
            return batch_loss(o, labels, counts)[0]

        for name, g in grads.items():
            flat_p = model.params[name].reshape(-1)
            flat_g = g.reshape(-1)
            for j in range(flat_p.size):
                orig = flat_p[j]
                flat_p[j] = orig + h
                up = loss_at()
                flat_p[j] = orig - h
                dn = loss_at()
                flat_p[j] = orig
                fd = (up - dn) / (2 * h)
                rel = abs(flat_g[j] - fd) / max(abs(flat_g[j]), abs(fd), 1e-8)
                worst = max(worst, rel)
    elapsed = time.monotonic() - t0
    ok = worst < 1e-5 and elapsed < 120.0
    _report(capsys, 3, "gradient integrity", ok,
            f"20 models, max rel err {worst:.2e}, {elapsed:.1f}s")


# -- criterion 4 ---------------------------------------------------------------

def test_criterion_04_optimizer_scheduler(capsys):
    # Adam: two-step hand trace
    beta1, beta2, eps, lr = 0.9, 0.999, 1e-8, 0.01
    w0 = np.array([1.0, -2.0, 0.5])
    g1 = np.array([0.3, -0.1, 0.0])
    g2 = np.array([-0.2, 0.4, 1.5])
    params = {"w": w0.copy()}
    state = AdamState(params)
    adam_step(params, {"w": g1}, state, lr)
    adam_step(params, {"w": g2}, state, lr)

    m = np.zeros(3)
    v = np.zeros(3)
    w = w0.copy()
    for t, g in ((1, g1), (2, g2)):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        w = w - lr * (m / (1 - beta1 ** t)) / (np.sqrt(v / (1 - beta2 ** t)) + eps)
    ok = bool(np.max(np.abs(params["w"] - w)) <= 1e-15)

    # plateau: cut after 9 stagnant epochs, twice after 18
    flat = [1.0] * 10
    ok &= lr_on_plateau(flat, 1.0) == 0.99
    ok &= lr_on_plateau([1.0] * 19, 1.0) == 0.99 ** 2
    ok &= lr_on_plateau([1.0, 0.9, 0.8], 1.0) == 1.0

    # early stop at best_epoch + 99 on a scripted loss sequence
    script = [5.0, 4.0, 3.0] + [3.0 + 0.01 * i for i in range(1, 300)]
    calls = {"n": 0}

    def fake_eval(model, ws, config, batch_size=4096):
        v = script[calls["n"]]
        calls["n"] += 1
        return v

    orig = training_mod.evaluate_loss
    training_mod.evaluate_loss = fake_eval
    try:
        grid = _toy_grid(2, 3)
        panel = _toy_panel(grid, 18)
        train = event_windows(panel, grid)
        tiny = Architecture(gru1=2, gru2=2, gru3=2, gru4=2,
                            fc1=2, fc2=2, fc3=2, fc4=2)
        config = TrainConfig(lr0=0.0, batch_size=8, max_epochs=1000,
                             early_stop_patience=99, seed=4)
        _, history = train_loop(config, train, train, arch=tiny)
    finally:
        training_mod.evaluate_loss = orig
    ok &= history.best_epoch == 2
    ok &= len(history.val_loss) == 2 + 99 + 1
    _report(capsys, 4, "optimizer and scheduler conformance", ok,
            "Adam 1e-15; plateau 0.99/0.9801; stop at best+99")


# -- criterion 5 ---------------------------------------------------------------

def _idw_oracle(st_lat, st_lon, st_ids, vals, t_lat, t_lon, p=2.0, k=8):
    """Plain per-target loops over every station pair."""
    order = sorted(range(len(st_ids)), key=lambda i: st_ids[i])
    out = np.empty(len(t_lat))
    for t in range(len(t_lat)):
        pairs = []
        for rank, i in enumerate(order):
            d = float(haversine_km_many(st_lat[i], st_lon[i],
                                        np.array([t_lat[t]]),
                                        np.array([t_lon[t]]))[0])
            pairs.append((d, rank, vals[i]))
        pairs.sort(key=lambda x: (x[0], x[1]))
        near = pairs[:min(k, len(pairs))]
        if near[0][0] < 1e-6:
            out[t] = near[0][2]
            continue
        wsum = sum(d ** -p for d, _, _ in near)
        out[t] = sum(v * d ** -p for d, _, v in near) / wsum
    return out


def test_criterion_05_interpolation_oracles(capsys):
    rng = SplitMix64(derive_seed(5, "idw"))
    ok = True
    for layout in range(100):
        n_st = 1 + rng.randbelow(15)
        n_t = 1 + rng.randbelow(40)
        st_lat = np.array([rng.uniform_range(26.0, 28.0) for _ in range(n_st)])
        st_lon = np.array([rng.uniform_range(117.0, 120.0) for _ in range(n_st)])
        ids = [f"S{i:03d}" for i in range(n_st)]
        vals = np.array([rng.uniform_range(0.0, 50.0) for _ in range(n_st)])
        t_lat = np.array([rng.uniform_range(26.0, 28.0) for _ in range(n_t)])
        t_lon = np.array([rng.uniform_range(117.0, 120.0) for _ in range(n_t)])
        got = idw_interpolate(st_lat, st_lon, ids, vals, t_lat, t_lon)
        want = _idw_oracle(st_lat, st_lon, ids, vals, t_lat, t_lon)
        ok &= bool(np.max(np.abs(got - want)) <= 1e-12)
        ok &= bool((got >= vals.min() - 1e-12).all())
        ok &= bool((got <= vals.max() + 1e-12).all())
    # exact at a knot: target placed on a station
    got = idw_interpolate(np.array([27.0, 27.5]), np.array([118.0, 119.0]),
                          ["A", "B"], np.array([3.0, 9.0]),
                          np.array([27.5]), np.array([119.0]))
    ok &= got[0] == 9.0
    # track interpolation exact at knots
    points = [TrackPoint(time=600 * 60, eye_lat=25.0, eye_lon=119.0),
              TrackPoint(time=610 * 60, eye_lat=26.0, eye_lon=118.5),
              TrackPoint(time=625 * 60, eye_lat=27.5, eye_lon=118.0)]
    lats, lons, clamped = interpolate_track(points, [600, 610, 625])
    ok &= np.array_equal(lats, [25.0, 26.0, 27.5])
    ok &= np.array_equal(lons, [119.0, 118.5, 118.0])
    ok &= clamped == 0
    _report(capsys, 5, "interpolation oracles", ok,
            "100 layouts to 1e-12; bounded; exact at knots")


# -- shared fixture for criteria 6-8 -------------------------------------------

@pytest.fixture(scope="module")
def shipped(tmp_path_factory):
    t0 = time.monotonic()
    root = tmp_path_factory.mktemp("shipped")
    region = gen_region(default_region_config(seed=0))
    grid = region.grid
    panels, dirs = {}, {}
    for cfg in default_event_configs(seed=0):
        d = str(root / cfg.event_id)
        gen_event(region, cfg, d)
        panels[cfg.event_id], _ = load_event_dir(grid, d)
        dirs[cfg.event_id] = d
    event_ids = sorted(panels)
    cells = active_cells(grid, [panels[e] for e in event_ids])
    split = split_spatial(cells, seed=ACCEPT_TRAIN.seed)
    folds = {}
    for holdout in event_ids:
        folds[holdout] = run_loso_fold(holdout, event_ids, panels, grid,
                                       ACCEPT_TRAIN, split)
    return {"grid": grid, "panels": panels, "folds": folds, "dirs": dirs,
            "event_ids": event_ids, "wall_s": time.monotonic() - t0}


def _pred_sum6(model, ws):
    s = apply_standardization(model.stats, ws)
    pred = predict_ratios(model, s.dynamic, s.static) * ws.counts[:, None]
    return pred.sum(axis=1)


# -- criterion 6 ---------------------------------------------------------------

def test_criterion_06_synthetic_loso_end_to_end(shipped, capsys):
    grid = shipped["grid"]
    panels = shipped["panels"]
    ok = True
    lines = []
    for holdout in shipped["event_ids"]:
        fold = shipped["folds"][holdout]
        ws = holdout_windows(fold.experiment, panels, grid)
        pred6 = _pred_sum6(fold.model, ws)
        y6 = (ws.labels * ws.counts[:, None]).sum(axis=1)
        prev6 = (ws.dynamic[:, :PAST_HOURS, CH_O] * ws.counts[:, None]).sum(axis=1)
        mae = float(np.abs(pred6 - y6).mean())
        mae_zero = float(np.abs(y6).mean())
        mae_pers = float(np.abs(prev6 - y6).mean())
        _, _, test_grid = build_loso_dataset(fold.experiment, panels, grid)
        r2 = r_squared(_pred_sum6(fold.model, test_grid),
                       (test_grid.labels * test_grid.counts[:, None]).sum(axis=1))
        ok &= mae <= 0.75 * mae_zero
        ok &= mae <= 0.85 * mae_pers
        ok &= r2 >= 0.5
        lines.append(f"{holdout}: vs-zeros {1 - mae / mae_zero:+.0%} "
                     f"vs-pers {1 - mae / mae_pers:+.0%} R2 {r2:.2f}")
    ok &= shipped["wall_s"] < 1800.0
    _report(capsys, 6, "synthetic LOSO end-to-end", ok,
            "; ".join(lines) + f"; {shipped['wall_s']:.0f}s")


# -- criterion 7 ---------------------------------------------------------------

def test_criterion_07_scheme_ordering(shipped, capsys):
    grid = shipped["grid"]
    strictly_greater = 0
    ok = True
    details = []
    for holdout in shipped["event_ids"]:
        model = shipped["folds"][holdout].model
        panel = shipped["panels"][holdout]
        start = panel.start_hour + PAST_HOURS
        n_iter = (panel.n_hours - PAST_HOURS) // 6
        ni = run_nowcast(model, grid, panel, start, n_iter, "ideal")
        li = run_longterm(model, grid, panel, start, n_iter, "ideal")
        m_ni = float(np.mean(per_iteration_mae(ni, panel)))
        m_li = float(np.mean(per_iteration_mae(li, panel)))
        ok &= m_li >= m_ni - 1e-9
        if m_li > m_ni:
            strictly_greater += 1
        details.append(f"{holdout}: lt {m_li:.4f} vs nc {m_ni:.4f}")
    ok &= strictly_greater >= 2
    _report(capsys, 7, "scheme ordering", ok,
            "; ".join(details) + f"; strict on {strictly_greater}/4")


# -- criterion 8 ---------------------------------------------------------------

def _panel_issue(panel, track, wind_factor=1.0):
    return ForecastIssue(
        issue_hour=panel.start_hour, horizon_hours=panel.n_hours,
        wind=panel.W().astype(np.float64) * wind_factor,
        rain=panel.R().astype(np.float64), track=track)


def test_criterion_08_error_decomposition(shipped, capsys):
    grid = shipped["grid"]
    ok = True
    details = []
    for holdout in shipped["event_ids"]:
        model = shipped["folds"][holdout].model
        panel = shipped["panels"][holdout]
        track = read_track_csv(os.path.join(shipped["dirs"][holdout],
                                            "track.csv"))
        start = panel.start_hour + PAST_HOURS
        n_iter = (panel.n_hours - PAST_HOURS) // 6
        ni = run_nowcast(model, grid, panel, start, n_iter, "ideal")
        li = run_longterm(model, grid, panel, start, n_iter, "ideal")
        clean = run_nowcast(model, grid, panel, start, n_iter, "actual",
                            issues=[_panel_issue(panel, track)])
        dec = decompose_errors(panel, ni, clean, li)
        ok &= dec.e_weather == 0.0
        ok &= dec.share_model == 1.0 and dec.share_weather == 0.0
        biased = run_nowcast(model, grid, panel, start, n_iter, "actual",
                             issues=[_panel_issue(panel, track, 1.3)])
        dec_b = decompose_errors(panel, ni, biased, li)
        ok &= dec_b.e_weather > 0.0
        ok &= abs(dec_b.share_model + dec_b.share_weather - 1.0) <= 1e-9
        ok &= dec_b.e_total >= dec_b.e_model
        details.append(f"{holdout}: biased E_w {dec_b.e_weather:.4f}")
    _report(capsys, 8, "error decomposition", ok, "; ".join(details))


# -- criterion 9 ---------------------------------------------------------------

def test_criterion_09_shapley_axioms(capsys):
    ok = True
    # exact enumeration == sampling with all permutations, bit for bit
    groups = attr_helpers._static_groups(4)

    def value(dyn, st):
        return st[:, 0] * st[:, 1] + np.sin(st[:, 2]) + st[:, 3] ** 2

    inst_dyn, inst_st, bg_dyn, bg_st = attr_helpers._random_space(90, n_bg=3)
    exact = exact_shapley(None, inst_dyn, inst_st, 1.0, bg_dyn, bg_st,
                          groups=groups, value_fn=value)
    sampled = shapley_attribution(None, inst_dyn, inst_st, 1.0, bg_dyn, bg_st,
                                  n_permutations="all", groups=groups,
                                  value_fn=value)
    ok &= np.array_equal(exact.phi, sampled.phi)
    ok &= exact.baseline == sampled.baseline

    # efficiency on 100 random instances of the full model
    model = StoCastModel.initialized(9, Architecture())
    worst = 0.0
    for i in range(100):
        idyn, ist, bdyn, bst = attr_helpers._random_space(1000 + i, n_bg=4)
        report = shapley_attribution(model, idyn, ist, 25.0, bdyn, bst,
                                     n_permutations=2, seed=i)
        worst = max(worst, abs(report.efficiency_residual()))
    ok &= worst < 1e-9

    # additive surrogate: phi equals w . (x - z) exactly
    k = 5
    add_groups = attr_helpers._static_groups(k)
    weights = np.arange(1.0, k + 1)

    def additive(dyn, st):
        return st[:, :k] @ weights

    gen = np.random.default_rng(99)
    ist = np.zeros(6)
    ist[:k] = gen.integers(-3, 4, size=k)
    bst = np.zeros((2, 6))
    bst[:, :k] = gen.integers(-3, 4, size=(2, k))
    idyn = np.zeros((12, 4))
    bdyn = np.zeros((2, 12, 4))
    rep = shapley_attribution(None, idyn, ist, 1.0, bdyn, bst,
                              n_permutations=3, seed=0, groups=add_groups,
                              value_fn=additive)
    want = weights * (ist[:k] - bst[:, :k].mean(axis=0))
    ok &= bool(np.max(np.abs(rep.phi - want)) <= 1e-9)

    # planted dependence ranks first in 10/10 seeded runs
    hits = 0
    for seed in range(10):
        planted = attr_helpers._planted_w_future_model(seed)
        background = attr_helpers._toy_windowset(24, seed=seed + 100)
        explained = attr_helpers._toy_windowset(6, seed=seed + 200)
        summary = attribution_summary(planted, background, explained,
                                      n_permutations=8, seed=seed)
        if summary.ranked[0] == "W(+6)":
            hits += 1
    ok &= hits == 10
    _report(capsys, 9, "shapley axioms", ok,
            f"efficiency max {worst:.1e}; planted {hits}/10")


# -- criterion 10 --------------------------------------------------------------

def _repro_pipeline(workdir):
    """One small but complete synth -> ingest -> train -> forecast run."""
    import dataclasses

    from stocast.synthetic import (FragilityParams, RainParams, RegionConfig,
                                   StormParams, SyntheticConfig)

    spec = GridSpec(origin_lat=27.0, origin_lon=118.0, cell_km=5.0,
                    n_rows=6, n_cols=8, ref_lat=27.2)
    region = gen_region(RegionConfig(grid_spec=spec, n_transformers=150,
                                     n_stations=25, seed=3))
    events = {}
    for name, start, v in (("mini", 1000, 42.0), ("nano", 2000, 38.0)):
        cfg = SyntheticConfig(
            event_id=name, start_hour=start, n_hours=36,
            storm=StormParams(v_max=v, r_max_km=40.0, decay_alpha=0.6,
                              waypoints=[(start * 60, 26.8, 118.05),
                                         ((start + 36) * 60, 27.35, 118.55)]),
            rain=RainParams(peak_mm=40.0, e_fold_km=80.0),
            fragility=FragilityParams(beta0=-7.0, beta_w=0.12, beta_r=0.05),
            obs_noise=0.0, seed=11)
        d = os.path.join(workdir, name)
        gen_event(region, cfg, d)
        events[name] = d
    grid = region.grid
    panels = {}
    for name, d in events.items():
        panel, _ = load_event_dir(grid, d)
        pdir = os.path.join(workdir, f"panel_{name}")
        panel.save(pdir)
        panels[name] = pdir

    loaded = {n: EventPanel.load(d) for n, d in panels.items()}
    cells = active_cells(grid, list(loaded.values()))
    config = TrainConfig(lr0=4e-3, batch_size=64, max_epochs=10,
                         early_stop_patience=10, seed=5)
    arch = Architecture(gru1=6, gru2=8, gru3=8, gru4=6,
                        fc1=8, fc2=6, fc3=8, fc4=6)
    fold = run_loso_fold("nano", sorted(loaded), loaded, grid, config,
                         split_spatial(cells, seed=config.seed), arch=arch)
    ckpt = os.path.join(workdir, "ckpt")
    save_checkpoint(fold.model, ckpt)

    run = run_longterm(fold.model, grid, loaded["nano"],
                       loaded["nano"].start_hour + PAST_HOURS, 5, "ideal")
    run_dir = os.path.join(workdir, "run")
    save_run(run, grid, loaded["nano"], run_dir)
    return events, panels, ckpt, run_dir, fold.model, grid, loaded


def test_criterion_10_reproducibility(tmp_path, capsys):
    a = _repro_pipeline(str(tmp_path / "a"))
    b = _repro_pipeline(str(tmp_path / "b"))
    ok = True

    def same(pa, pb):
        with open(pa, "rb") as fa, open(pb, "rb") as fb:
            return fa.read() == fb.read()

    for name in a[1]:
        for f in ("panel.json", "panel.f32"):
            ok &= same(os.path.join(a[1][name], f), os.path.join(b[1][name], f))
    for f in ("checkpoint.json", "params.f64"):
        ok &= same(os.path.join(a[2], f), os.path.join(b[2], f))
    for f in sorted(os.listdir(a[3])):
        if f.endswith(".csv"):
            ok &= same(os.path.join(a[3], f), os.path.join(b[3], f))

    # checkpoint round trip preserves predictions bit-exactly
    model_a = a[4]
    reloaded = load_checkpoint(a[2])
    gen = np.random.default_rng(0)
    dyn = gen.normal(size=(40, 12, 4))
    static = gen.normal(size=(40, 6))
    p1 = predict_ratios(model_a, dyn, static)
    p2 = predict_ratios(reloaded, dyn, static)
    ok &= np.array_equal(p1, p2)
    _report(capsys, 10, "reproducibility and serialization", ok,
            "panels, checkpoints, forecast CSVs byte-identical; round trip exact")


# -- criterion 11 --------------------------------------------------------------

def test_criterion_11_data_cleaning(capsys):
    transformers = [TransformerRecord(f"T{i}", 27.0, 118.0) for i in range(4)]
    base_day = 451200  # an arbitrary epoch hour at 00:00
    h = lambda hour, minute=0: (base_day + hour) * 60 + minute

    # 15:30 report lands in the 15:00 bin
    recs = [OutageRecord("T0", h(15, 30))]
    cleaned = clean_outages(recs, transformers, base_day, base_day + 24)
    ok = cleaned.first_hour == {"T0": base_day + 15}

    # more than 3 records in one clock hour: that transformer-hour is noise
    recs = [OutageRecord("T1", h(10, m)) for m in (0, 10, 20, 30)]
    cleaned = clean_outages(recs, transformers, base_day, base_day + 24)
    ok &= "T1" not in cleaned.first_hour
    ok &= cleaned.n_noise_discarded == 4
    # exactly 3 in the hour is kept
    recs = [OutageRecord("T2", h(10, m)) for m in (0, 10, 20)]
    cleaned = clean_outages(recs, transformers, base_day, base_day + 24)
    ok &= cleaned.first_hour == {"T2": base_day + 10}

    # consolidation to the earliest surviving hour
    recs = [OutageRecord("T3", h(17, 5)), OutageRecord("T3", h(15, 30)),
            OutageRecord("T3", h(19, 59))]
    cleaned = clean_outages(recs, transformers, base_day, base_day + 24)
    ok &= cleaned.first_hour == {"T3": base_day + 15}
    _report(capsys, 11, "data-cleaning conformance", ok,
            "15:30->15:00; >3-per-hour exclusion; earliest-hour")
