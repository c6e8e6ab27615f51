"""Shapley feature attribution over 13 semantically grouped inputs.

The 12-hour window and static features partition into 13 groups: each
dynamic channel splits into its past and future halves (the future O
block is identically zero and belongs to no group), and each static is
its own group.  Attribution uses permutation sampling with paired walks:
a walk starts from one background sample z, inserts the instance's group
values one group at a time in permutation order, and records each
marginal change of the value function.  phi_g is the mean marginal of
group g; by construction the phis sum to explained - baseline.

The value function is the sum of the 6 predicted counts; a custom value
function can be injected for oracle tests.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .dataset import (
    N_DYNAMIC_CHANNELS,
    N_STATIC_FEATURES,
    PAST_HOURS,
    WINDOW_HOURS,
    WindowSet,
)
from .errors import ContractError
from .ingest import CH_D, CH_O, CH_R, CH_W
from .nn import StoCastModel
from .rng import SplitMix64, derive_seed

GROUP_NAMES = (
    "W(-6)", "W(+6)", "R(-6)", "R(+6)", "D(-6)", "D(+6)", "O(-6)",
    "E", "S", "A", "G", "I", "C",
)


@dataclass(frozen=True)
class FeatureGroup:
    """A named slice of the (dynamic, static) feature space."""

    name: str
    dyn_mask: np.ndarray     # [12, 4] bool
    static_mask: np.ndarray  # [6] bool


def standard_groups() -> list[FeatureGroup]:
    """The 13 groups: past/future halves of W, R, D, past O, 6 statics."""
    groups = []
    halves = [("-6", slice(0, PAST_HOURS)), ("+6", slice(PAST_HOURS, WINDOW_HOURS))]
    for ch_name, ch in (("W", CH_W), ("R", CH_R), ("D", CH_D)):
        for tag, rows in halves:
            dyn = np.zeros((WINDOW_HOURS, N_DYNAMIC_CHANNELS), dtype=bool)
            dyn[rows, ch] = True
            groups.append(FeatureGroup(
                name=f"{ch_name}({tag})", dyn_mask=dyn,
                static_mask=np.zeros(N_STATIC_FEATURES, dtype=bool)))
    dyn = np.zeros((WINDOW_HOURS, N_DYNAMIC_CHANNELS), dtype=bool)
    dyn[:PAST_HOURS, CH_O] = True
    groups.append(FeatureGroup(name="O(-6)", dyn_mask=dyn,
                               static_mask=np.zeros(N_STATIC_FEATURES, dtype=bool)))
    for i, name in enumerate(("E", "S", "A", "G", "I", "C")):
        st = np.zeros(N_STATIC_FEATURES, dtype=bool)
        st[i] = True
        groups.append(FeatureGroup(
            name=name,
            dyn_mask=np.zeros((WINDOW_HOURS, N_DYNAMIC_CHANNELS), dtype=bool),
            static_mask=st))
    assert tuple(g.name for g in groups) == GROUP_NAMES
    return groups


@dataclass(frozen=True)
class AttributionReport:
    """Per-group Shapley values for one explained instance."""

    groups: tuple[str, ...]
    phi: np.ndarray
    baseline: float
    explained: float
    n_permutations: int
    n_background: int

    def efficiency_residual(self) -> float:
        return float(self.phi.sum() - (self.explained - self.baseline))

    def as_dict(self) -> dict[str, float]:
        return {g: float(p) for g, p in zip(self.groups, self.phi)}


def model_value_fn(model: StoCastModel, count: float):
    """Sum of the 6 predicted counts as the explained scalar."""
    def value(dyn: np.ndarray, static: np.ndarray) -> np.ndarray:
        out, _ = model.forward(dyn, static)
        return out.sum(axis=1) * count
    return value


def _run_walks(value_fn, groups: list[FeatureGroup],
               instance_dyn: np.ndarray, instance_static: np.ndarray,
               background_dyn: np.ndarray, background_static: np.ndarray,
               perms: np.ndarray, z_idx: np.ndarray
               ) -> tuple[np.ndarray, float, float]:
    """Batched paired walks; returns (phi, baseline, explained)."""
    n_walks, n_groups = perms.shape
    cur_dyn = background_dyn[z_idx].copy()
    cur_static = background_static[z_idx].copy()
    v_prev = np.asarray(value_fn(cur_dyn, cur_static), dtype=np.float64)
    baseline = float(v_prev.mean())
    phi = np.zeros(n_groups, dtype=np.float64)
    for step in range(n_groups):
        inserted = perms[:, step]
        for g in range(n_groups):
            rows = np.flatnonzero(inserted == g)
            if rows.size == 0:
                continue
            dm = groups[g].dyn_mask
            sm = groups[g].static_mask
            if dm.any():
                block = cur_dyn[rows]
                block[:, dm] = instance_dyn[dm]
                cur_dyn[rows] = block
            if sm.any():
                block = cur_static[rows]
                block[:, sm] = instance_static[sm]
                cur_static[rows] = block
        v_new = np.asarray(value_fn(cur_dyn, cur_static), dtype=np.float64)
        contrib = v_new - v_prev
        for g in range(n_groups):
            rows = np.flatnonzero(inserted == g)
            if rows.size:
                phi[g] += contrib[rows].sum()
        v_prev = v_new
    phi /= n_walks
    explained = float(np.asarray(
        value_fn(instance_dyn[None], instance_static[None]))[0])
    return phi, baseline, explained


def shapley_attribution(model: StoCastModel | None, instance_dyn: np.ndarray,
                        instance_static: np.ndarray, count: float,
                        background_dyn: np.ndarray,
                        background_static: np.ndarray,
                        n_permutations, seed: int = 0,
                        groups: list[FeatureGroup] | None = None,
                        value_fn=None) -> AttributionReport:
    """Permutation-sampling Shapley values for one instance.

    `n_permutations` is a positive count of sampled permutations (each
    paired with one background draw, cycling), or the string "all" for
    exact enumeration: every permutation crossed with every background
    draw, in lexicographic-by-permutation order.
    """
    groups = groups if groups is not None else standard_groups()
    k = len(groups)
    instance_dyn = np.asarray(instance_dyn, dtype=np.float64)
    instance_static = np.asarray(instance_static, dtype=np.float64)
    background_dyn = np.asarray(background_dyn, dtype=np.float64)
    background_static = np.asarray(background_static, dtype=np.float64)
    n_bg = background_dyn.shape[0]
    if n_bg == 0 or background_static.shape[0] != n_bg:
        raise ContractError("shapley needs a nonempty, consistent background")
    if value_fn is None:
        if model is None:
            raise ContractError("shapley needs a model or a value_fn")
        value_fn = model_value_fn(model, count)

    if isinstance(n_permutations, str):
        if n_permutations != "all":
            raise ContractError(
                f"n_permutations must be a positive int or 'all', "
                f"got {n_permutations!r}"
            )
        all_perms = np.array(list(itertools.permutations(range(k))),
                             dtype=np.int64)
        perms = np.repeat(all_perms, n_bg, axis=0)
        z_idx = np.tile(np.arange(n_bg), all_perms.shape[0])
        n_perm_label = all_perms.shape[0]
    else:
        n_permutations = int(n_permutations)
        if n_permutations < 1:
            raise ContractError(
                f"n_permutations must be >= 1, got {n_permutations}"
            )
        rng = SplitMix64(derive_seed(seed, "shapley"))
        perms = np.stack([rng.permutation(k) for _ in range(n_permutations)])
        z_idx = np.arange(n_permutations) % n_bg
        n_perm_label = n_permutations

    phi, baseline, explained = _run_walks(
        value_fn, groups, instance_dyn, instance_static,
        background_dyn, background_static, perms, z_idx)
    return AttributionReport(
        groups=tuple(g.name for g in groups), phi=phi, baseline=baseline,
        explained=explained, n_permutations=n_perm_label, n_background=n_bg)


def exact_shapley(model: StoCastModel | None, instance_dyn, instance_static,
                  count, background_dyn, background_static,
                  groups: list[FeatureGroup] | None = None,
                  value_fn=None) -> AttributionReport:
    """Exact enumeration: all permutations x all background draws."""
    return shapley_attribution(
        model, instance_dyn, instance_static, count, background_dyn,
        background_static, n_permutations="all", seed=0, groups=groups,
        value_fn=value_fn)


# ---------------------------------------------------------------------------
# Dataset-level summary
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttributionSummary:
    """Ranked mean |phi| with the per-instance values for export."""

    groups: tuple[str, ...]
    mean_abs_phi: np.ndarray          # [13] in group order
    ranked: tuple[str, ...]           # group names, descending importance
    phi_matrix: np.ndarray            # [n_instances, 13]
    instance_ids: tuple[str, ...]
    residuals: np.ndarray             # [n_instances] efficiency residuals
    baselines: np.ndarray             # [n_instances]
    explaineds: np.ndarray            # [n_instances]


def attribution_summary(model: StoCastModel, background: WindowSet,
                        explained: WindowSet, n_permutations: int = 20,
                        seed: int = 0) -> AttributionSummary:
    """Shapley summary over an explained set against a background set.

    Both sets must already be in model input space (standardized); the
    count scale is taken from each explained window's raw C value.
    Each instance gets its own seeded substream so results do not
    depend on the order instances are processed.
    """
    if len(background) == 0 or len(explained) == 0:
        raise ContractError("attribution needs nonempty background and "
                            "explained sets")
    groups = standard_groups()
    n = len(explained)
    phis = np.zeros((n, len(groups)))
    residuals = np.zeros(n)
    baselines = np.zeros(n)
    explaineds = np.zeros(n)
    ids = []
    for i in range(n):
        report = shapley_attribution(
            model, explained.dynamic[i], explained.static[i],
            float(explained.counts[i]), background.dynamic,
            background.static, n_permutations,
            seed=derive_seed(seed, "instance", i), groups=groups)
        phis[i] = report.phi
        residuals[i] = report.efficiency_residual()
        baselines[i] = report.baseline
        explaineds[i] = report.explained
        ids.append(f"{explained.event_ids[i]}:{explained.cell_ids[i]}"
                   f":{explained.t0s[i]}")
    mean_abs = np.abs(phis).mean(axis=0)
    order = np.argsort(-mean_abs, kind="stable")
    return AttributionSummary(
        groups=tuple(g.name for g in groups),
        mean_abs_phi=mean_abs,
        ranked=tuple(groups[j].name for j in order),
        phi_matrix=phis,
        instance_ids=tuple(ids),
        residuals=residuals,
        baselines=baselines,
        explaineds=explaineds,
    )


def write_attribution_csv(summary: AttributionSummary, phi_path,
                          summary_path) -> None:
    """Beeswarm-style per-instance export plus the ranked summary."""
    with open(phi_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "instance_id", "phi"])
        for g_idx, group in enumerate(summary.groups):
            for i, inst in enumerate(summary.instance_ids):
                writer.writerow([group, inst,
                                 repr(float(summary.phi_matrix[i, g_idx]))])
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "group", "mean_abs_phi"])
        by_name = {g: float(v) for g, v in
                   zip(summary.groups, summary.mean_abs_phi)}
        for rank, group in enumerate(summary.ranked, start=1):
            writer.writerow([rank, group, repr(by_name[group])])


def write_instance_csv(summary: AttributionSummary, path) -> None:
    """Per-instance explained/baseline with the efficiency check column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance_id", "explained", "baseline",
                         "efficiency_residual"])
        for i, inst in enumerate(summary.instance_ids):
            writer.writerow([inst, repr(float(summary.explaineds[i])),
                             repr(float(summary.baselines[i])),
                             repr(float(summary.residuals[i]))])
