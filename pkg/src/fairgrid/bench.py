"""Grid-search benchmarking engine.

Every (scaler, learner, mitigation) combination is evaluated under the
experiment's validation plan: per fold, the scaler is fitted on training
rows only, both sides are transformed, mitigation touches the training side
only (reweighing feeds sample weights into the fit), and metrics are
computed on test rows the pipeline never saw during fitting. Per-unit
randomness derives from (spec seed, combination index, fold index) alone,
so serial and parallel execution orders cannot change results.

Failed combinations become failed report rows instead of aborting the run;
an experiment only errors out when every row failed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import learners as learners_mod
from . import metrics as metrics_mod
from . import mitigation as mitigation_mod
from .data import (
    BoundDataset,
    DataTable,
    DatasetSchema,
    Scaler,
    apply_scaler,
    fit_scaler,
    holdout_split,
    make_folds,
)
from .learners import FittedModel, LearnerSpec, capability
from .metrics import MetricKind, is_undefined, to_goodness
from .mitigation import MitigationSpec

MODEL_MAGIC = "FBM1"
MODEL_FORMAT_VERSION = 1

TRADEOFF_KINDS = ("mean", "weighted-sum", "harmonic-mean", "pareto-front")


class ExperimentError(RuntimeError):
    """The experiment as a whole could not produce a result."""


@dataclass(frozen=True)
class TradeoffSpec:
    kind: str
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in TRADEOFF_KINDS:
            raise ValueError(f"unknown trade-off kind '{self.kind}'")
        if self.kind == "weighted-sum":
            if not self.weights or any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
                raise ValueError("weighted-sum needs non-negative weights with a positive sum")


@dataclass(frozen=True)
class ValidationSpec:
    kind: str  # "holdout" | "k-fold"
    test_fraction: float = 0.3
    folds: int = 5
    stratified: bool = True

    def __post_init__(self):
        if self.kind not in ("holdout", "k-fold"):
            raise ValueError(f"unknown validation kind '{self.kind}'")
        if self.kind == "holdout" and not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test fraction must lie strictly between 0 and 1")
        if self.kind == "k-fold" and self.folds < 2:
            raise ValueError("k-fold needs at least two folds")


@dataclass(frozen=True)
class ExperimentSpec:
    schema: DatasetSchema
    scalers: tuple[str, ...]
    learners: tuple[LearnerSpec, ...]
    mitigations: tuple[MitigationSpec, ...]
    metrics: tuple[MetricKind, ...]
    tradeoff: TradeoffSpec
    validation: ValidationSpec
    seed: int = 0

    def __post_init__(self):
        if not self.learners:
            raise ValueError("at least one learner required")
        if not self.metrics:
            raise ValueError("at least one metric required")
        if not self.scalers:
            raise ValueError("at least one scaler required")
        if not self.mitigations:
            raise ValueError("at least one mitigation entry required (use kind 'none')")
        for s in self.scalers:
            if s not in ("none", "standard", "min-max"):
                raise ValueError(f"unknown scaler '{s}'")
        if self.tradeoff.kind == "weighted-sum" and len(self.tradeoff.weights) != len(self.metrics):
            raise ValueError("weighted-sum needs exactly one weight per metric")
        for m in self.metrics:
            if m.task != self.schema.task:
                raise ValueError(f"metric '{m.value}' does not apply to a {self.schema.task} task")
            if m.needs_groups and not self.schema.sensitive:
                raise ValueError(f"metric '{m.value}' needs at least one sensitive feature")
        for l in self.learners:
            if capability(l.kind).task != self.schema.task:
                raise ValueError(f"learner '{l.kind}' does not fit a {self.schema.task} task")


@dataclass(frozen=True)
class CombinationKey:
    scaler: str
    learner: str
    mitigation: str

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.scaler, self.learner, self.mitigation)


@dataclass(frozen=True)
class MetricCell:
    mean: float
    std: float
    goodness: float


@dataclass(frozen=True)
class ReportRow:
    key: CombinationKey
    cells: dict[MetricKind, MetricCell]
    score: float
    failed: bool = False
    failure: Optional[str] = None


@dataclass(frozen=True)
class QualityReport:
    metrics: tuple[MetricKind, ...]
    rows: tuple[ReportRow, ...]
    best: CombinationKey
    front: tuple[CombinationKey, ...] = ()
    flags: tuple[str, ...] = ()


def plan(spec: ExperimentSpec) -> list[CombinationKey]:
    """Declaration-order cartesian product: scaler x learner x mitigation.

    Capability-incompatible pairs must have been excluded by the feature
    model; hitting one here is a hard error, not a failed row.
    """
    for l in spec.learners:
        for m in spec.mitigations:
            if m.kind == "reweighing" and not capability(l.kind).supports_sample_weight:
                raise ExperimentError(
                    f"learner '{l.kind}' cannot take reweighing sample weights; "
                    "this pair should have been rejected upstream"
                )
    return [
        CombinationKey(s, l.kind, m.kind)
        for s in spec.scalers
        for l in spec.learners
        for m in spec.mitigations
    ]


def _derive_seed(base: int, combo_index: int, fold_index: int, salt: int = 0) -> int:
    mixed = (base & 0xFFFFFFFF) or 0x9E3779B9
    for part in (combo_index + 1, fold_index + 1, salt + 1):
        mixed ^= part * 0x9E3779B9
        mixed = (mixed * 0x85EBCA6B + 0xC2B2AE35) & 0xFFFFFFFF
    return mixed


def _fold_indices(spec: ExperimentSpec, bound: BoundDataset) -> tuple[list, list[str]]:
    flags: list[str] = []
    if spec.validation.kind == "holdout":
        train, test = holdout_split(bound.table.n_rows, spec.validation.test_fraction, spec.seed)
        return [(train, test)], flags
    stratified = spec.validation.stratified and spec.schema.task == "classification"
    plan_folds = make_folds(bound, spec.validation.folds, spec.seed, stratified)
    if plan_folds.downgraded:
        flags.append("stratification downgraded: a label class is smaller than k")
    return [plan_folds.split(i) for i in range(plan_folds.k)], flags


def _feature_table(table: DataTable, label: str) -> DataTable:
    return table.without(label)


def _run_unit(
    spec: ExperimentSpec,
    bound: BoundDataset,
    key: CombinationKey,
    combo_index: int,
    fold_index: int,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    learner_spec: LearnerSpec,
    mit_spec: MitigationSpec,
) -> tuple[dict[MetricKind, float], list[str]]:
    notes: list[str] = []
    label = spec.schema.label
    unit_seed = _derive_seed(spec.seed, combo_index, fold_index)

    scaler = fit_scaler(
        key.scaler, bound.table, train_idx,
        columns=[c for c in bound.table.names if c != label],
    )
    train = BoundDataset(
        apply_scaler(scaler, bound.table.subset(train_idx)),
        spec.schema,
        bound.privileged_mask[train_idx],
    )
    test_table = apply_scaler(scaler, bound.table.subset(test_idx))
    test_mask = bound.privileged_mask[test_idx]

    weights = None
    mit = mitigation_mod.apply_mitigation(
        replace(mit_spec, seed=_derive_seed(spec.seed, combo_index, fold_index, salt=1)),
        train,
    )
    if mit.weights is not None:
        weights = mit.weights
    elif mit.dataset is not None:
        train = mit.dataset
    notes.extend(mit.notes)
    if not mit.converged:
        notes.append(f"{mit_spec.kind} did not converge within its iteration budget")

    model = learners_mod.fit(
        replace(learner_spec, seed=unit_seed),
        _feature_table(train.table, label),
        train.targets(),
        weights,
    )
    predictions = learners_mod.predict(model, _feature_table(test_table, label))
    y_test = BoundDataset(test_table, spec.schema, test_mask).targets()

    values: dict[MetricKind, float] = {}
    for metric in spec.metrics:
        try:
            values[metric] = metrics_mod.compute_metric(metric, y_test, predictions, test_mask)
        except ValueError as exc:
            values[metric] = metrics_mod.UNDEFINED
            notes.append(f"{metric.value}: {exc}")
    return values, notes


def run_experiment(
    spec: ExperimentSpec,
    bound: BoundDataset,
    progress: Optional[Callable[[int], None]] = None,
) -> QualityReport:
    """Evaluate the full grid and select the best combination.

    The progress callback receives one monotone percentage per
    (combination, fold) unit, ending at exactly 100.
    """
    if bound.schema != spec.schema:
        raise ExperimentError("dataset was bound with a different schema than the spec's")
    combos = plan(spec)
    folds, flags = _fold_indices(spec, bound)
    total_units = len(combos) * len(folds)
    done = 0

    rows: list[ReportRow] = []
    for combo_index, key in enumerate(combos):
        learner_spec = next(l for l in spec.learners if l.kind == key.learner)
        mit_spec = next(m for m in spec.mitigations if m.kind == key.mitigation)
        per_fold: list[dict[MetricKind, float]] = []
        failure = None
        for fold_index, (train_idx, test_idx) in enumerate(folds):
            if failure is None:
                try:
                    values, notes = _run_unit(
                        spec, bound, key, combo_index, fold_index,
                        train_idx, test_idx, learner_spec, mit_spec,
                    )
                    per_fold.append(values)
                    for note in notes:
                        flag = f"{_key_str(key)} fold {fold_index}: {note}"
                        if flag not in flags:
                            flags.append(flag)
                except (ValueError, learners_mod.CapabilityError) as exc:
                    failure = str(exc)
            done += 1
            if progress is not None:
                progress((100 * done) // total_units)

        if failure is not None:
            flags.append(f"{_key_str(key)} failed: {failure}")
            rows.append(
                ReportRow(key, {m: MetricCell(math.nan, math.nan, math.nan) for m in spec.metrics},
                          math.nan, failed=True, failure=failure)
            )
            continue
        cells: dict[MetricKind, MetricCell] = {}
        for metric in spec.metrics:
            samples = np.array([f[metric] for f in per_fold])
            defined = samples[~np.isnan(samples)]
            if defined.size == 0:
                cells[metric] = MetricCell(math.nan, math.nan, math.nan)
                flags.append(f"{_key_str(key)}: {metric.value} undefined in every fold")
            else:
                if defined.size < samples.size:
                    flags.append(
                        f"{_key_str(key)}: {metric.value} undefined in "
                        f"{samples.size - defined.size} of {samples.size} folds"
                    )
                mean = float(np.mean(defined))
                std = float(np.sqrt(np.mean((defined - mean) ** 2)))  # population formula
                cells[metric] = MetricCell(mean, std, to_goodness(metric, mean))
        rows.append(ReportRow(key, cells, math.nan))

    if all(r.failed for r in rows):
        raise ExperimentError("every combination failed; no result to report")

    best, scores, front = aggregate(rows, spec.tradeoff, spec.metrics)
    if all(is_undefined(s) for s in scores):
        flags.append(
            "no combination produced a defined aggregate score; "
            "best combination fell back to plan order"
        )
    scored = tuple(
        replace(row, score=scores[i]) if not row.failed else row for i, row in enumerate(rows)
    )
    return QualityReport(spec.metrics, scored, best, front, tuple(flags))


def _key_str(key: CombinationKey) -> str:
    return f"({key.scaler}, {key.learner}, {key.mitigation})"


def _goodness_vector(row: ReportRow, metrics: Sequence[MetricKind]) -> list[float]:
    return [row.cells[m].goodness for m in metrics]


def pareto_front(points: Sequence[Sequence[float]]) -> list[int]:
    """Indices of non-dominated points (maximization on every axis).

    a dominates b when a >= b everywhere and a > b somewhere. Duplicate
    non-dominated points all stay on the front.
    """
    front = []
    for i, p in enumerate(points):
        dominated = False
        for j, q in enumerate(points):
            if i == j:
                continue
            if all(qc >= pc for qc, pc in zip(q, p)) and any(qc > pc for qc, pc in zip(q, p)):
                dominated = True
                break
        if not dominated:
            front.append(i)
    return front


def aggregate(
    rows: Sequence[ReportRow],
    tradeoff: TradeoffSpec,
    metrics: Sequence[MetricKind],
) -> tuple[CombinationKey, list[float], tuple[CombinationKey, ...]]:
    """Score rows by the trade-off strategy and pick the best combination.

    Undefined metric cells are excluded from scalar aggregates (weights
    renormalized over the defined metrics); in Pareto mode an undefined
    axis counts as goodness zero so it can never help a row. Ties break
    toward plan order. Returns (best key, per-row scores, front keys);
    the front is empty unless the strategy is pareto-front.
    """
    live = [(i, r) for i, r in enumerate(rows) if not r.failed]
    if not live:
        raise ExperimentError("cannot aggregate: every row failed")

    scores = [math.nan] * len(rows)
    if tradeoff.kind == "pareto-front":
        points = []
        for _, row in live:
            points.append([0.0 if is_undefined(g) else g for g in _goodness_vector(row, metrics)])
        front_local = pareto_front(points)
        for pos in front_local:
            i, row = live[pos]
            scores[i] = _safe_hmean(points[pos])
        for pos, (i, row) in enumerate(live):
            if is_undefined(scores[i]):
                scores[i] = _safe_hmean(points[pos])
        best_pos = max(front_local, key=lambda pos: (scores[live[pos][0]], -live[pos][0]))
        best = live[best_pos][1].key
        front_keys = tuple(live[pos][1].key for pos in front_local)
        return best, scores, front_keys

    weights = tradeoff.weights if tradeoff.kind == "weighted-sum" else tuple([1.0] * len(metrics))
    for i, row in live:
        pairs = [
            (g, w)
            for g, w in zip(_goodness_vector(row, metrics), weights)
            if not is_undefined(g)
        ]
        if not pairs:
            continue  # score stays NaN; row cannot win
        gs = [p[0] for p in pairs]
        ws = [p[1] for p in pairs]
        if sum(ws) <= 0:
            continue
        if tradeoff.kind == "harmonic-mean":
            scores[i] = metrics_mod.harmonic_mean(gs)
        else:
            scores[i] = float(np.average(gs, weights=ws))
    candidates = [i for i, _ in live if not is_undefined(scores[i])]
    if not candidates:
        # every metric was undefined on this sample; the experiment still
        # completes, with best falling back to plan order (flagged upstream)
        return live[0][1].key, scores, ()
    best_i = max(candidates, key=lambda i: (scores[i], -i))
    return rows[best_i].key, scores, ()


def _safe_hmean(values: Sequence[float]) -> float:
    return metrics_mod.harmonic_mean([min(max(v, 0.0), 1.0) for v in values])


# ---------------------------------------------------------------------------
# Final model training and artifacts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FinalModel:
    """Best combination retrained on the full dataset, with its scaler.

    Predictions on raw (unscaled) feature tables are self-contained:
    ``predict`` applies the stored scaler before the learner. Classifiers
    return the 0/1 positive-class indicator.
    """

    key: CombinationKey
    scaler: Scaler
    model: FittedModel
    label: str

    def predict(self, table: DataTable) -> np.ndarray:
        scaled = apply_scaler(self.scaler, table)
        features = scaled.without(self.label) if self.label in scaled.names else scaled
        return learners_mod.predict(self.model, features)


def finalize(spec: ExperimentSpec, bound: BoundDataset, best: CombinationKey) -> FinalModel:
    """Retrain the winning combination on all rows."""
    label = spec.schema.label
    learner_spec = next(l for l in spec.learners if l.kind == best.learner)
    mit_spec = next(m for m in spec.mitigations if m.kind == best.mitigation)
    all_rows = np.arange(bound.table.n_rows)

    scaler = fit_scaler(
        best.scaler, bound.table, all_rows,
        columns=[c for c in bound.table.names if c != label],
    )
    full = BoundDataset(apply_scaler(scaler, bound.table), spec.schema, bound.privileged_mask)
    weights = None
    mit = mitigation_mod.apply_mitigation(
        replace(mit_spec, seed=_derive_seed(spec.seed, 0, 0, salt=2)), full
    )
    if mit.weights is not None:
        weights = mit.weights
    elif mit.dataset is not None:
        full = mit.dataset
    model = learners_mod.fit(
        replace(learner_spec, seed=_derive_seed(spec.seed, 0, 0, salt=3)),
        _feature_table(full.table, label),
        full.targets(),
        weights,
    )
    return FinalModel(best, scaler, model, label)


# ---------------------------------------------------------------------------
# Report CSV
# ---------------------------------------------------------------------------


def _fmt6(value: float) -> str:
    if is_undefined(value):
        return "NA"
    out = f"{value:.6f}"
    return "0.000000" if out == "-0.000000" else out


def report_csv(report: QualityReport) -> bytes:
    """Exact quality-report CSV: plan-ordered rows, 6-digit fixed floats."""
    header = ["scaler", "model", "method"]
    for metric in report.metrics:
        code = metric.short_code
        header += [f"{code}_mean", f"{code}_std"]
    header.append("score")
    lines = [",".join(header)]
    for row in report.rows:
        cells = [row.key.scaler, row.key.learner, row.key.mitigation]
        for metric in report.metrics:
            cell = row.cells[metric]
            cells += [_fmt6(cell.mean), _fmt6(cell.std)]
        cells.append(_fmt6(row.score))
        lines.append(",".join(cells))
    return ("\n".join(lines) + "\n").encode("utf-8")


def report_to_dict(report: QualityReport) -> dict:
    """JSON-friendly result document (the server's /result body)."""
    return {
        "metrics": [m.value for m in report.metrics],
        "rows": [
            {
                "scaler": r.key.scaler,
                "model": r.key.learner,
                "method": r.key.mitigation,
                "failed": r.failed,
                "failure": r.failure,
                "score": None if is_undefined(r.score) else r.score,
                "cells": {
                    m.value: {
                        "mean": None if is_undefined(c.mean) else c.mean,
                        "std": None if is_undefined(c.std) else c.std,
                        "goodness": None if is_undefined(c.goodness) else c.goodness,
                    }
                    for m, c in ((m, r.cells[m]) for m in report.metrics)
                },
            }
            for r in report.rows
        ],
        "best": dict(zip(("scaler", "model", "method"), report.best.as_tuple())),
        "front": [dict(zip(("scaler", "model", "method"), k.as_tuple())) for k in report.front],
        "flags": list(report.flags),
    }


# ---------------------------------------------------------------------------
# Model artifact serialization (portable versioned text, magic FBM1)
# ---------------------------------------------------------------------------


def _encode_tree(node: dict) -> dict:
    if "leaf" in node:
        return {"leaf": node["leaf"]}
    return {
        "feature": node["feature"],
        "threshold": node["threshold"],
        "left": _encode_tree(node["left"]),
        "right": _encode_tree(node["right"]),
    }


def serialize_model(final: FinalModel) -> bytes:
    params = {}
    for name, value in final.model.params.items():
        if isinstance(value, np.ndarray):
            params[name] = value.tolist()
        elif isinstance(value, dict):
            params[name] = _encode_tree(value)
        else:
            params[name] = value
    payload = {
        "version": MODEL_FORMAT_VERSION,
        "combination": final.key.as_tuple(),
        "label": final.label,
        "scaler": {"kind": final.scaler.kind, "params": final.scaler.params},
        "model": {
            "kind": final.model.kind,
            "threshold": final.model.threshold,
            "constant": final.model.constant,
            "flags": list(final.model.flags),
            "encoder": [
                {"name": e.name, "numeric": e.numeric, "levels": list(e.levels)}
                for e in final.model.encoder
            ],
            "params": params,
        },
    }
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return (MODEL_MAGIC + "\n" + body + "\n").encode("utf-8")


def deserialize_model(blob: bytes) -> FinalModel:
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValueError("not a model artifact: undecodable bytes") from exc
    lines = text.split("\n", 1)
    if not lines or lines[0].strip() != MODEL_MAGIC:
        got = lines[0].strip()[:16] if lines else ""
        if got.startswith("FBM"):
            raise ValueError(
                f"unsupported model format '{got}'; this reader supports version "
                f"{MODEL_FORMAT_VERSION} ('{MODEL_MAGIC}')"
            )
        raise ValueError("not a model artifact: bad magic")
    if len(lines) < 2 or not lines[1].strip():
        raise ValueError("truncated model artifact: missing payload")
    try:
        payload = json.loads(lines[1])
    except json.JSONDecodeError as exc:
        raise ValueError(f"truncated or corrupt model artifact: {exc}") from exc
    if payload.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(
            f"unsupported model format version {payload.get('version')}; "
            f"this reader supports version {MODEL_FORMAT_VERSION}"
        )
    scaler = Scaler(
        payload["scaler"]["kind"],
        {k: tuple(v) for k, v in payload["scaler"]["params"].items()},
    )
    m = payload["model"]
    encoder = tuple(
        learners_mod.ColumnEncoding(e["name"], e["numeric"], tuple(e["levels"]))
        for e in m["encoder"]
    )
    params = {}
    for name, value in m["params"].items():
        if isinstance(value, list):
            params[name] = np.array(value, dtype=float)
        else:
            params[name] = value
    model = FittedModel(
        m["kind"], encoder, params,
        threshold=m["threshold"],
        constant=m["constant"],
        flags=tuple(m["flags"]),
    )
    key = CombinationKey(*payload["combination"])
    return FinalModel(key, scaler, model, payload["label"])
