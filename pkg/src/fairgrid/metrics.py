"""Effectiveness and fairness metrics, goodness normalization, and rank statistics.

Group metrics follow the binary privileged/unprivileged convention: ``mask``
is a boolean vector, True for privileged rows, and all differences are
computed as unprivileged minus privileged (ratios as unprivileged over
privileged), so a negative statistical parity means the unprivileged group
receives fewer positive predictions.

Metrics that cannot be computed on a given sample (a group with no actual
positives, a zero privileged selection rate under a nonzero unprivileged
one) evaluate to the ``UNDEFINED`` sentinel instead of raising; callers are
expected to exclude such values from aggregation and flag them.
"""

from __future__ import annotations

import json
import math
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

UNDEFINED = float("nan")


def is_undefined(value: float) -> bool:
    return isinstance(value, float) and math.isnan(value)


class Orientation(Enum):
    HIGHER_BETTER = "higher-better"
    LOWER_BETTER = "lower-better"
    TARGET_ZERO = "target-zero"
    TARGET_ONE = "target-one"


class MetricKind(str, Enum):
    STATISTICAL_PARITY = "statistical-parity"
    DISPARATE_IMPACT = "disparate-impact"
    AVERAGE_ODDS = "average-odds"
    EQUAL_OPPORTUNITY = "equal-opportunity"
    ACCURACY = "accuracy"
    ZERO_ONE_LOSS = "zero-one-loss"
    MEAN_ABSOLUTE_ERROR = "mean-absolute-error"
    MEAN_SQUARED_ERROR = "mean-squared-error"

    @property
    def orientation(self) -> Orientation:
        return _ORIENTATIONS[self]

    @property
    def short_code(self) -> str:
        """Column prefix used in quality-report CSV headers."""
        return _SHORT_CODES[self]

    @property
    def task(self) -> str:
        """Task this metric applies to: "classification" or "regression"."""
        if self in (MetricKind.MEAN_ABSOLUTE_ERROR, MetricKind.MEAN_SQUARED_ERROR):
            return "regression"
        return "classification"

    @property
    def needs_groups(self) -> bool:
        """True for group-fairness metrics that require a privileged mask."""
        return self in (
            MetricKind.STATISTICAL_PARITY,
            MetricKind.DISPARATE_IMPACT,
            MetricKind.AVERAGE_ODDS,
            MetricKind.EQUAL_OPPORTUNITY,
        )


_ORIENTATIONS = {
    MetricKind.ACCURACY: Orientation.HIGHER_BETTER,
    MetricKind.ZERO_ONE_LOSS: Orientation.LOWER_BETTER,
    MetricKind.MEAN_ABSOLUTE_ERROR: Orientation.LOWER_BETTER,
    MetricKind.MEAN_SQUARED_ERROR: Orientation.LOWER_BETTER,
    MetricKind.STATISTICAL_PARITY: Orientation.TARGET_ZERO,
    MetricKind.AVERAGE_ODDS: Orientation.TARGET_ZERO,
    MetricKind.EQUAL_OPPORTUNITY: Orientation.TARGET_ZERO,
    MetricKind.DISPARATE_IMPACT: Orientation.TARGET_ONE,
}

_SHORT_CODES = {
    MetricKind.STATISTICAL_PARITY: "sp",
    MetricKind.DISPARATE_IMPACT: "di",
    MetricKind.AVERAGE_ODDS: "ao",
    MetricKind.EQUAL_OPPORTUNITY: "eo",
    MetricKind.ACCURACY: "acc",
    MetricKind.ZERO_ONE_LOSS: "zo",
    MetricKind.MEAN_ABSOLUTE_ERROR: "mae",
    MetricKind.MEAN_SQUARED_ERROR: "mse",
}


def _as_vector(values: Sequence, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr


def _paired(y: Sequence, y_pred: Sequence) -> tuple[np.ndarray, np.ndarray]:
    a = _as_vector(y, "y")
    b = _as_vector(y_pred, "y_pred")
    if a.size == 0:
        raise ValueError("empty vectors")
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return a, b


def accuracy(y: Sequence, y_pred: Sequence) -> float:
    a, b = _paired(y, y_pred)
    return float(np.mean(a == b))


def zero_one_loss(y: Sequence, y_pred: Sequence) -> float:
    return 1.0 - accuracy(y, y_pred)


def _group_masks(mask: Sequence) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(mask, dtype=bool)
    priv = m
    unpriv = ~m
    if priv.sum() == 0 or unpriv.sum() == 0:
        raise ValueError("both privileged and unprivileged groups must be non-empty")
    return priv, unpriv


def statistical_parity(y_pred: Sequence, mask: Sequence) -> float:
    """P(pred positive | unprivileged) - P(pred positive | privileged)."""
    pred = _as_vector(y_pred, "y_pred")
    priv, unpriv = _group_masks(mask)
    if pred.size != priv.size:
        raise ValueError("prediction and mask lengths differ")
    rate_priv = float(np.mean(pred[priv] == 1))
    rate_unpriv = float(np.mean(pred[unpriv] == 1))
    return rate_unpriv - rate_priv


def disparate_impact(y_pred: Sequence, mask: Sequence) -> float:
    """Ratio of unprivileged to privileged positive-prediction rates.

    Both rates zero is treated as parity (1.0). A zero privileged rate under
    a nonzero unprivileged rate has no finite ratio and yields ``UNDEFINED``.
    """
    pred = _as_vector(y_pred, "y_pred")
    priv, unpriv = _group_masks(mask)
    if pred.size != priv.size:
        raise ValueError("prediction and mask lengths differ")
    rate_priv = float(np.mean(pred[priv] == 1))
    rate_unpriv = float(np.mean(pred[unpriv] == 1))
    if rate_priv == 0.0 and rate_unpriv == 0.0:
        return 1.0
    if rate_priv == 0.0:
        return UNDEFINED
    return rate_unpriv / rate_priv


def _rates(y: np.ndarray, pred: np.ndarray, sel: np.ndarray) -> tuple[float, float]:
    """(TPR, FPR) within ``sel``; either is UNDEFINED when its base is empty."""
    pos = (y == 1) & sel
    neg = (y != 1) & sel
    tpr = float(np.mean(pred[pos] == 1)) if pos.any() else UNDEFINED
    fpr = float(np.mean(pred[neg] == 1)) if neg.any() else UNDEFINED
    return tpr, fpr


def equal_opportunity(y: Sequence, y_pred: Sequence, mask: Sequence) -> float:
    """TPR difference, unprivileged minus privileged."""
    a, b = _paired(y, y_pred)
    priv, unpriv = _group_masks(mask)
    tpr_p, _ = _rates(a, b, priv)
    tpr_u, _ = _rates(a, b, unpriv)
    if is_undefined(tpr_p) or is_undefined(tpr_u):
        return UNDEFINED
    return tpr_u - tpr_p


def average_odds(y: Sequence, y_pred: Sequence, mask: Sequence) -> float:
    """Mean of the FPR and TPR differences, unprivileged minus privileged."""
    a, b = _paired(y, y_pred)
    priv, unpriv = _group_masks(mask)
    tpr_p, fpr_p = _rates(a, b, priv)
    tpr_u, fpr_u = _rates(a, b, unpriv)
    if any(is_undefined(v) for v in (tpr_p, fpr_p, tpr_u, fpr_u)):
        return UNDEFINED
    return 0.5 * ((fpr_u - fpr_p) + (tpr_u - tpr_p))


def mean_absolute_error(y: Sequence, y_pred: Sequence) -> float:
    a, b = _paired(y, y_pred)
    return float(np.mean(np.abs(a - b)))


def mean_squared_error(y: Sequence, y_pred: Sequence) -> float:
    a, b = _paired(y, y_pred)
    return float(np.mean((a - b) ** 2))


def to_goodness(kind: MetricKind, raw: float) -> float:
    """Map a raw metric value onto a common higher-is-better [0, 1] scale.

    Losses without a natural upper bound (MAE, MSE) use 1/(1+raw); bounded
    lower-is-better metrics use the clamped complement; target-zero metrics
    use closeness to zero; disparate impact uses min(v, 1/v), which is
    symmetric in the two groups.
    """
    if is_undefined(raw):
        raise ValueError(f"cannot normalize undefined {kind.value} value")
    orientation = kind.orientation
    if orientation is Orientation.HIGHER_BETTER:
        return min(max(raw, 0.0), 1.0)
    if orientation is Orientation.LOWER_BETTER:
        if kind in (MetricKind.MEAN_ABSOLUTE_ERROR, MetricKind.MEAN_SQUARED_ERROR):
            return 1.0 / (1.0 + max(raw, 0.0))
        return min(max(1.0 - raw, 0.0), 1.0)
    if orientation is Orientation.TARGET_ZERO:
        return 1.0 - min(abs(raw), 1.0)
    if raw <= 0.0:
        return 0.0
    return min(raw, 1.0 / raw)


def harmonic_mean(values: Sequence[float], weights: Optional[Sequence[float]] = None) -> float:
    vals = _as_vector(values, "values")
    if vals.size == 0:
        raise ValueError("harmonic mean of an empty list")
    if np.any(vals < 0) or np.any(vals > 1):
        raise ValueError("harmonic mean expects goodness values in [0, 1]")
    if np.any(vals == 0):
        return 0.0
    if weights is None:
        return float(vals.size / np.sum(1.0 / vals))
    w = _as_vector(weights, "weights")
    if w.size != vals.size:
        raise ValueError("one weight per value required")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be non-negative with a positive sum")
    return float(np.sum(w) / np.sum(w / vals))


def compute_metric(
    kind: MetricKind,
    y: Sequence,
    y_pred: Sequence,
    mask: Optional[Sequence] = None,
) -> float:
    """Dispatch a metric by kind; group metrics require ``mask``."""
    if kind.needs_groups and mask is None:
        raise ValueError(f"{kind.value} requires a privileged mask")
    if kind is MetricKind.ACCURACY:
        return accuracy(y, y_pred)
    if kind is MetricKind.ZERO_ONE_LOSS:
        return zero_one_loss(y, y_pred)
    if kind is MetricKind.STATISTICAL_PARITY:
        return statistical_parity(y_pred, mask)
    if kind is MetricKind.DISPARATE_IMPACT:
        return disparate_impact(y_pred, mask)
    if kind is MetricKind.AVERAGE_ODDS:
        return average_odds(y, y_pred, mask)
    if kind is MetricKind.EQUAL_OPPORTUNITY:
        return equal_opportunity(y, y_pred, mask)
    if kind is MetricKind.MEAN_ABSOLUTE_ERROR:
        return mean_absolute_error(y, y_pred)
    return mean_squared_error(y, y_pred)


# ---------------------------------------------------------------------------
# Kruskal-Wallis H test
# ---------------------------------------------------------------------------

_GAMMA_TOL = 1e-12
_GAMMA_MAX_ITER = 500


def _gamma_q_series(a: float, x: float) -> float:
    # Q(a, x) = 1 - P(a, x) with P from the power series; converges for x < a+1.
    term = 1.0 / a
    total = term
    n = a
    for _ in range(_GAMMA_MAX_ITER):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * _GAMMA_TOL:
            break
    p = total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    return 1.0 - p


def _gamma_q_contfrac(a: float, x: float) -> float:
    # Lentz's continued fraction for Q(a, x); converges for x >= a+1.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_TOL:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma function Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return min(max(_gamma_q_series(a, x), 0.0), 1.0)
    return min(max(_gamma_q_contfrac(a, x), 0.0), 1.0)


def chi_square_sf(x: float, dof: int) -> float:
    """Upper-tail probability of the chi-square distribution."""
    if dof < 1:
        raise ValueError("dof must be at least 1")
    return regularized_gamma_q(dof / 2.0, x / 2.0)


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(pooled.size, dtype=float)
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        # tied block [i, j] shares the average of ranks i+1 .. j+1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Kruskal-Wallis H statistic with tie correction and chi-square p-value.

    Returns (H, p). When every pooled value is identical the tie correction
    degenerates; that case is reported as H=0, p=1.
    """
    if len(groups) < 2:
        raise ValueError("at least two groups required")
    arrays = [_as_vector(g, "group") for g in groups]
    if any(a.size == 0 for a in arrays):
        raise ValueError("every group must be non-empty")
    pooled = np.concatenate(arrays)
    n_total = pooled.size
    if n_total < 3:
        raise ValueError("at least three observations required")

    ranks = _midranks(pooled)
    h = 0.0
    offset = 0
    for a in arrays:
        mean_rank = float(np.mean(ranks[offset : offset + a.size]))
        h += a.size * (mean_rank - (n_total + 1) / 2.0) ** 2
        offset += a.size
    h *= 12.0 / (n_total * (n_total + 1))

    _, counts = np.unique(pooled, return_counts=True)
    correction = 1.0 - float(np.sum(counts**3 - counts)) / (n_total**3 - n_total)
    if correction <= 0.0:
        return 0.0, 1.0
    h /= correction
    p = chi_square_sf(h, len(arrays) - 1)
    return float(h), float(p)


# ---------------------------------------------------------------------------
# Metric-selection questionnaire
# ---------------------------------------------------------------------------


def questionnaire_schema() -> dict:
    """Questions and the answer-to-metric mapping, shipped as package data."""
    text = resources.files("fairgrid").joinpath("data/questionnaire.json").read_text("utf-8")
    return json.loads(text)


def recommend_metrics(answers: Mapping[str, str]) -> set[MetricKind]:
    """Resolve questionnaire answers to a recommended fairness-metric set.

    The mapping lives in the questionnaire data file; this function only
    evaluates its rules. Raises ValueError on a missing required answer or
    an answer outside the question's options.
    """
    schema = questionnaire_schema()
    resolved: dict[str, str] = {}
    for question in schema["questions"]:
        qid = question["id"]
        answer = answers.get(qid)
        if answer is None and "default" in question:
            answer = question["default"]
        required = question.get("required", False)
        condition = question.get("required_when")
        if condition:
            required = all(resolved.get(k) in v for k, v in condition.items())
        if answer is None:
            if required:
                raise ValueError(f"question '{qid}' requires an answer")
            continue
        if answer not in question["options"]:
            raise ValueError(f"'{answer}' is not an option for question '{qid}'")
        resolved[qid] = answer

    recommended: set[MetricKind] = set()
    for rule in schema["rules"]:
        if all(resolved.get(k) in v for k, v in rule["when"].items()):
            recommended.update(MetricKind(m) for m in rule["recommend"])
    return recommended


def metric_ids(metrics: Iterable[MetricKind]) -> list[str]:
    return [m.value for m in metrics]
