"""Pre-processing bias mitigation, applied to training folds only.

Three methods are provided. Reweighing leaves the data untouched and emits
per-row sample weights that make the (group, label) joint distribution
statistically independent. The quantile repairer moves each numeric
non-sensitive feature toward a pooled per-quantile median distribution,
controlled by a repair level in [0, 1]. The intersectional balancer
duplicates or removes rows until every (sensitive-combination, label)
subgroup is observed as often as independence predicts, within a tolerance.

The first two operate on the binary privileged/unprivileged partition; the
balancer is the one place intersectional subgroups (every distinct
combination of sensitive values) are used.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .data import BoundDataset

MITIGATION_KINDS = ("none", "reweighing", "dir", "demv")


@dataclass(frozen=True)
class MitigationSpec:
    kind: str
    repair_level: float = 1.0   # dir
    tolerance: float = 0.05     # demv
    max_iterations: int = 1000  # demv
    seed: int = 0               # demv

    def __post_init__(self):
        if self.kind not in MITIGATION_KINDS:
            raise ValueError(f"unknown mitigation kind '{self.kind}'")
        if not 0.0 <= self.repair_level <= 1.0:
            raise ValueError("repair level must lie in [0, 1]")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 0:
            raise ValueError("max iterations must be non-negative")


@dataclass(frozen=True)
class MitigationOutput:
    """Exactly one of weights / dataset is populated unless passthrough."""

    kind: str
    weights: Optional[np.ndarray] = None
    dataset: Optional[BoundDataset] = None
    passthrough: bool = False
    iterations: int = 0
    converged: bool = True
    notes: tuple[str, ...] = ()


def _binary_labels(bound: BoundDataset) -> np.ndarray:
    if bound.schema.task != "classification":
        raise ValueError("this mitigation requires a classification task")
    return bound.binary_labels()


def reweigh(bound: BoundDataset) -> np.ndarray:
    """Kamiran-Calders style instance weights, w = (n_s * n_y) / (n * n_sy).

    s is the privileged/unprivileged group, y the binary label. Weights of
    occupied cells are always finite (an empty cell is never indexed) and
    they sum to the number of rows.
    """
    y = _binary_labels(bound)
    s = bound.privileged_mask
    n = float(len(y))
    weights = np.empty(len(y))
    for s_val in (True, False):
        for y_val in (1.0, 0.0):
            cell = (s == s_val) & (y == y_val)
            count = cell.sum()
            if count == 0:
                continue
            n_s = float((s == s_val).sum())
            n_y = float((y == y_val).sum())
            weights[cell] = (n_s * n_y) / (n * count)
    return weights


def _quantile_positions(size: int) -> np.ndarray:
    return (np.arange(1, size + 1) - 0.5) / size


def dir_repair(bound: BoundDataset, repair_level: float) -> MitigationOutput:
    """Move numeric non-sensitive features toward the pooled quantile median.

    Per feature and group, the value at within-group quantile q becomes
    (1-level)*x + level*m(q), where m(q) is the midpoint of the two
    group-conditional quantile functions. Sensitive, categorical, and label
    columns are untouched. With an empty group the data passes through
    unchanged, noted in the output.
    """
    if not 0.0 <= repair_level <= 1.0:
        raise ValueError("repair level must lie in [0, 1]")
    mask = bound.privileged_mask
    if mask.sum() == 0 or (~mask).sum() == 0:
        return MitigationOutput("dir", dataset=bound, passthrough=True,
                                notes=("one group is empty; data passed through unrepaired",))
    skip = {bound.schema.label} | {s.column for s in bound.schema.sensitive}
    repairable = [n for n in bound.table.numeric_names() if n not in skip]
    if not repairable:
        return MitigationOutput("dir", dataset=bound, passthrough=True,
                                notes=("no numeric non-sensitive feature to repair",))

    updates: dict[str, np.ndarray] = {}
    groups = [np.where(mask)[0], np.where(~mask)[0]]
    for name in repairable:
        col = bound.table.column(name).astype(float)
        repaired = col.copy()
        sorted_per_group = [np.sort(col[g]) for g in groups]
        grids = [_quantile_positions(len(s)) for s in sorted_per_group]
        for g in groups:
            values = col[g]
            order = np.argsort(values, kind="mergesort")
            qs = _quantile_positions(len(g))
            median_q = 0.5 * (
                np.interp(qs, grids[0], sorted_per_group[0])
                + np.interp(qs, grids[1], sorted_per_group[1])
            )
            repaired[g[order]] = (1.0 - repair_level) * values[order] + repair_level * median_q
        updates[name] = repaired
    table = bound.table.with_columns(updates)
    return MitigationOutput("dir", dataset=replace(bound, table=table))


def subgroup_keys(bound: BoundDataset) -> list[tuple]:
    """(sensitive values..., label) key per row, used by the balancer."""
    cols = [bound.table.column(s.column) for s in bound.schema.sensitive]
    labels = bound.table.column(bound.schema.label)
    return [
        tuple(str(c[i]) for c in cols) + (str(labels[i]),)
        for i in range(bound.table.n_rows)
    ]


def _demv_ratios(keys: list[tuple]) -> dict[tuple, float]:
    """W_exp / W_obs per subgroup over the current table."""
    n = len(keys)
    combos: dict[tuple, int] = {}
    labels: dict[str, int] = {}
    cells: dict[tuple, int] = {}
    for key in keys:
        combo, label = key[:-1], key[-1]
        combos[combo] = combos.get(combo, 0) + 1
        labels[label] = labels.get(label, 0) + 1
        cells[key] = cells.get(key, 0) + 1
    out = {}
    for key, observed in cells.items():
        expected = (combos[key[:-1]] / n) * (labels[key[-1]] / n)
        out[key] = expected / (observed / n)
    return out


def demv_balance(
    bound: BoundDataset, tolerance: float, max_iterations: int, seed: int
) -> MitigationOutput:
    """Balance intersectional subgroup sizes by sampling.

    Each iteration picks the subgroup whose expected/observed ratio is
    farthest from 1 and duplicates (ratio > 1) or removes (ratio < 1) one
    uniformly random member; the process stops when all ratios are within
    the tolerance or the iteration budget runs out. Removal never empties a
    subgroup; such subgroups are skipped and noted. Deterministic given the
    seed.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    _binary_labels(bound)  # classification guard
    rng = np.random.default_rng(seed)
    current = bound
    skipped: set[tuple] = set()
    notes: list[str] = []
    iterations = 0

    while True:
        keys = subgroup_keys(current)
        ratios = _demv_ratios(keys)
        active = {k: r for k, r in ratios.items() if k not in skipped}
        off = {k: r for k, r in active.items() if abs(r - 1.0) > tolerance}
        if not off:
            converged = all(abs(r - 1.0) <= tolerance for r in ratios.values())
            return MitigationOutput(
                "demv", dataset=current, iterations=iterations,
                converged=converged, notes=tuple(notes),
            )
        if iterations >= max_iterations:
            return MitigationOutput(
                "demv", dataset=current, iterations=iterations,
                converged=False, notes=tuple(notes),
            )
        worst = max(sorted(off, key=str), key=lambda k: abs(off[k] - 1.0))
        members = [i for i, key in enumerate(keys) if key == worst]
        if off[worst] > 1.0:
            pick = members[int(rng.integers(len(members)))]
            table = current.table.append_rows([pick])
            mask = np.concatenate([current.privileged_mask, current.privileged_mask[[pick]]])
        else:
            if len(members) == 1:
                skipped.add(worst)
                notes.append(f"subgroup {worst} has a single instance; removal skipped")
                continue
            pick = members[int(rng.integers(len(members)))]
            table = current.table.drop_rows([pick])
            mask = np.delete(current.privileged_mask, pick)
        current = BoundDataset(table, current.schema, mask)
        iterations += 1


def apply_mitigation(spec: MitigationSpec, bound: BoundDataset) -> MitigationOutput:
    """Uniform entry point used by the benchmarking engine."""
    if spec.kind == "none":
        return MitigationOutput("none", dataset=bound, passthrough=True)
    if spec.kind == "reweighing":
        return MitigationOutput("reweighing", weights=reweigh(bound))
    if spec.kind == "dir":
        return dir_repair(bound, spec.repair_level)
    return demv_balance(bound, spec.tolerance, spec.max_iterations, spec.seed)
