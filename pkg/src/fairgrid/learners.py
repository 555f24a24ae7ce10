"""Trainable models with declared sample-weight capabilities.

All learners are implemented directly on numpy so that fitting is exactly
deterministic given the spec seed: fixed iteration counts, fixed tie-breaks,
no data-dependent stopping. Categorical inputs are one-hot encoded inside
``fit`` and the encoding travels with the fitted model, so ``predict`` is
self-contained.

The MLP deliberately has no sample-weight support; that gap is what makes
the reweighing/MLP exclusion in the workflow model a real capability
constraint rather than a convention.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import DataTable

LEARNER_KINDS = (
    "logistic-regression",
    "decision-tree",
    "mlp",
    "linear-regression",
    "decision-tree-regressor",
)


class CapabilityError(ValueError):
    """A learner was asked for something its capability table rules out."""


class UnseenLevelWarning(UserWarning):
    """A categorical level absent at fit time appeared at predict time."""


@dataclass(frozen=True)
class Capability:
    supports_sample_weight: bool
    task: str  # "classification" | "regression"


_CAPABILITIES = {
    "logistic-regression": Capability(True, "classification"),
    "decision-tree": Capability(True, "classification"),
    "mlp": Capability(False, "classification"),
    "linear-regression": Capability(True, "regression"),
    "decision-tree-regressor": Capability(True, "regression"),
}


def capability(kind: str) -> Capability:
    try:
        return _CAPABILITIES[kind]
    except KeyError:
        raise CapabilityError(f"unknown learner kind '{kind}'") from None


@dataclass(frozen=True)
class LearnerSpec:
    """A learner choice plus its (fixed, documented) hyperparameters.

    learning_rate/iterations apply to the gradient-descent learners
    (logistic regression defaults to 0.1/500, the MLP to 0.05/500);
    max_depth/min_leaf_weight to the trees; l2 to logistic regression;
    hidden_units to the MLP; ridge to linear regression's diagonal jitter.
    """

    kind: str
    seed: int = 0
    learning_rate: Optional[float] = None
    iterations: int = 500
    l2: float = 0.0
    max_depth: int = 5
    min_leaf_weight: float = 1.0
    hidden_units: int = 16
    ridge: float = 1e-8

    def __post_init__(self):
        if self.kind not in _CAPABILITIES:
            raise CapabilityError(f"unknown learner kind '{self.kind}'")
        if self.iterations < 1 or self.max_depth < 1 or self.hidden_units < 1:
            raise ValueError("iterations, max_depth and hidden_units must be positive")
        if self.l2 < 0 or self.ridge < 0 or self.min_leaf_weight <= 0:
            raise ValueError("l2 and ridge must be non-negative, min_leaf_weight positive")

    @property
    def effective_learning_rate(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return 0.05 if self.kind == "mlp" else 0.1


# ---------------------------------------------------------------------------
# One-hot encoding of table features
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnEncoding:
    name: str
    numeric: bool
    levels: tuple[str, ...] = ()


def _build_encoder(table: DataTable) -> tuple[ColumnEncoding, ...]:
    enc = []
    for name in table.names:
        if table.is_numeric(name):
            enc.append(ColumnEncoding(name, True))
        else:
            levels = tuple(sorted({str(v) for v in table.column(name)}))
            enc.append(ColumnEncoding(name, False, levels))
    return tuple(enc)


def _encode(table: DataTable, encoder: Sequence[ColumnEncoding]) -> np.ndarray:
    blocks = []
    for col in encoder:
        if col.name not in table.names:
            raise ValueError(f"column '{col.name}' missing at predict time")
        values = table.column(col.name)
        if col.numeric:
            if values.dtype.kind != "f":
                raise ValueError(f"column '{col.name}' was numeric at fit time")
            blocks.append(values.astype(float).reshape(-1, 1))
        else:
            strings = np.array([str(v) for v in values])
            block = np.zeros((len(strings), len(col.levels)))
            known = np.zeros(len(strings), dtype=bool)
            for j, level in enumerate(col.levels):
                hit = strings == level
                block[hit, j] = 1.0
                known |= hit
            if not known.all():
                unseen = sorted(set(strings[~known]))
                warnings.warn(
                    f"column '{col.name}': unseen level(s) {unseen} encoded as all-zero",
                    UnseenLevelWarning,
                    stacklevel=3,
                )
            blocks.append(block)
    return np.hstack(blocks) if blocks else np.zeros((table.n_rows, 0))


# ---------------------------------------------------------------------------
# Fitted model container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FittedModel:
    kind: str
    encoder: tuple[ColumnEncoding, ...]
    params: dict = field(repr=False)
    threshold: float = 0.5
    constant: Optional[float] = None
    flags: tuple[str, ...] = ()
    loss_history: tuple[float, ...] = field(default=(), repr=False)

    def predict(self, features: DataTable) -> np.ndarray:
        return predict(self, features)


def _check_fit_inputs(spec, features, targets, weights):
    cap = capability(spec.kind)
    y = np.asarray(targets, dtype=float)
    if y.ndim != 1 or y.size != features.n_rows:
        raise ValueError("targets must be one value per feature row")
    if y.size == 0:
        raise ValueError("cannot fit on an empty dataset")
    w = None
    if weights is not None:
        if not cap.supports_sample_weight:
            raise CapabilityError(f"{spec.kind} does not support sample weights")
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape:
            raise ValueError("one weight per row required")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if w.sum() <= 0:
            raise ValueError("weights must not all be zero")
    if cap.task == "classification" and not np.all(np.isin(y, (0.0, 1.0))):
        raise ValueError("classification targets must be 0/1")
    return y, w


def fit(
    spec: LearnerSpec,
    features: DataTable,
    targets: Sequence[float],
    weights: Optional[Sequence[float]] = None,
) -> FittedModel:
    """Train a model; deterministic given spec (including its seed).

    Weighted learners minimize the weight-normalized loss, so duplicating a
    row and doubling its weight are equivalent. A single-class classification
    target yields a flagged constant predictor rather than an error.
    """
    y, w = _check_fit_inputs(spec, features, targets, weights)
    encoder = _build_encoder(features)
    x = _encode(features, encoder)

    if capability(spec.kind).task == "classification" and np.unique(y).size == 1:
        return FittedModel(
            spec.kind, encoder, {}, constant=float(y[0]), flags=("constant:single-class",)
        )

    if spec.kind == "logistic-regression":
        params, losses = _fit_logistic(spec, x, y, w)
        return FittedModel(spec.kind, encoder, params, loss_history=losses)
    if spec.kind == "mlp":
        params, losses = _fit_mlp(spec, x, y)
        return FittedModel(spec.kind, encoder, params, loss_history=losses)
    if spec.kind == "linear-regression":
        return FittedModel(spec.kind, encoder, _fit_linear(spec, x, y, w))
    params = {"tree": _grow_tree(spec, x, y, w, classification=spec.kind == "decision-tree")}
    return FittedModel(spec.kind, encoder, params)


def predict(model: FittedModel, features: DataTable) -> np.ndarray:
    """Labels (0/1) for classifiers, values for regressors; pure function."""
    if model.constant is not None:
        return np.full(features.n_rows, model.constant)
    x = _encode(features, model.encoder)
    if model.kind == "logistic-regression":
        p = _sigmoid(x @ model.params["w"] + model.params["b"])
        return (p > model.threshold).astype(float)
    if model.kind == "mlp":
        p = _mlp_forward(model.params, x)
        return (p > model.threshold).astype(float)
    if model.kind == "linear-regression":
        return x @ model.params["w"] + model.params["b"]
    return np.array([_tree_predict(model.params["tree"], row) for row in x])


def decision_scores(model: FittedModel, features: DataTable) -> np.ndarray:
    """Raw scores before thresholding (probabilities for the classifiers)."""
    if model.constant is not None:
        return np.full(features.n_rows, model.constant)
    x = _encode(features, model.encoder)
    if model.kind == "logistic-regression":
        return _sigmoid(x @ model.params["w"] + model.params["b"])
    if model.kind == "mlp":
        return _mlp_forward(model.params, x)
    return predict(model, features)


# ---------------------------------------------------------------------------
# Logistic regression: full-batch gradient descent, zero init
# ---------------------------------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(x: np.ndarray, y: np.ndarray, w_vec: np.ndarray, b: float,
                  weights: Optional[np.ndarray] = None, l2: float = 0.0) -> float:
    """Weight-normalized binary cross-entropy plus the L2 penalty."""
    norm = np.ones_like(y) if weights is None else weights
    norm = norm / norm.sum()
    p = np.clip(_sigmoid(x @ w_vec + b), 1e-12, 1 - 1e-12)
    ll = -(y * np.log(p) + (1 - y) * np.log(1 - p))
    return float(norm @ ll + 0.5 * l2 * (w_vec @ w_vec))


def logistic_gradient(x: np.ndarray, y: np.ndarray, w_vec: np.ndarray, b: float,
                      weights: Optional[np.ndarray] = None, l2: float = 0.0
                      ) -> tuple[np.ndarray, float]:
    norm = np.ones_like(y) if weights is None else weights
    norm = norm / norm.sum()
    err = (_sigmoid(x @ w_vec + b) - y) * norm
    return x.T @ err + l2 * w_vec, float(err.sum())


def _fit_logistic(spec, x, y, weights):
    w_vec = np.zeros(x.shape[1])
    b = 0.0
    lr = spec.effective_learning_rate
    norm = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    norm = norm / norm.sum()
    losses = []
    for _ in range(spec.iterations):
        p = _sigmoid(x @ w_vec + b)
        clipped = np.clip(p, 1e-12, 1 - 1e-12)
        losses.append(
            float(norm @ -(y * np.log(clipped) + (1 - y) * np.log(1 - clipped))
                  + 0.5 * spec.l2 * (w_vec @ w_vec))
        )
        err = (p - y) * norm
        w_vec = w_vec - lr * (x.T @ err + spec.l2 * w_vec)
        b = b - lr * float(err.sum())
    return {"w": w_vec, "b": b}, tuple(losses)


# ---------------------------------------------------------------------------
# Linear regression: normal equations with diagonal jitter
# ---------------------------------------------------------------------------


def _fit_linear(spec, x, y, weights):
    design = np.hstack([x, np.ones((x.shape[0], 1))])
    w = np.ones_like(y) if weights is None else weights
    xtw = design.T * w
    gram = xtw @ design + spec.ridge * np.eye(design.shape[1])
    beta = np.linalg.solve(gram, xtw @ y)
    return {"w": beta[:-1], "b": float(beta[-1])}


# ---------------------------------------------------------------------------
# CART decision trees (classification: gini, regression: weighted variance)
# ---------------------------------------------------------------------------


def _gini(y: np.ndarray, w: np.ndarray) -> float:
    total = w.sum()
    if total == 0:
        return 0.0
    impurity = 1.0
    for cls in np.unique(y):
        frac = w[y == cls].sum() / total
        impurity -= frac * frac
    return impurity


def _variance(y: np.ndarray, w: np.ndarray) -> float:
    total = w.sum()
    if total == 0:
        return 0.0
    mean = float(w @ y) / total
    return float(w @ (y - mean) ** 2) / total


def _leaf_value(y: np.ndarray, w: np.ndarray, classification: bool) -> float:
    if not classification:
        return float(w @ y) / float(w.sum())
    best_cls, best_weight = None, -1.0
    for cls in sorted(np.unique(y)):  # ties break toward the smaller label
        weight = float(w[y == cls].sum())
        if weight > best_weight:
            best_cls, best_weight = cls, weight
    return float(best_cls)


def _grow_tree(spec, x, y, weights, classification):
    w = np.ones_like(y) if weights is None else weights.astype(float)
    impurity = _gini if classification else _variance

    def build(idx: np.ndarray, depth: int) -> dict:
        sub_y, sub_w = y[idx], w[idx]
        node_impurity = impurity(sub_y, sub_w)
        leaf = {"leaf": _leaf_value(sub_y, sub_w, classification)}
        if depth >= spec.max_depth or node_impurity == 0.0:
            return leaf
        total = sub_w.sum()
        best = None  # (child_impurity, feature, threshold, left_mask)
        for j in range(x.shape[1]):
            col = x[idx, j]
            distinct = np.unique(col)
            if distinct.size < 2:
                continue
            for lo, hi in zip(distinct[:-1], distinct[1:]):
                thr = (lo + hi) / 2.0
                left = col <= thr
                wl, wr = sub_w[left].sum(), sub_w[~left].sum()
                if wl < spec.min_leaf_weight or wr < spec.min_leaf_weight:
                    continue
                child = (
                    wl * impurity(sub_y[left], sub_w[left])
                    + wr * impurity(sub_y[~left], sub_w[~left])
                ) / total
                # strict < keeps the lowest (feature, threshold) pair on ties
                if child < node_impurity + 1e-15 and (best is None or child < best[0] - 1e-15):
                    best = (child, j, thr, left)
        if best is None:
            return leaf
        _, j, thr, left = best
        return {
            "feature": int(j),
            "threshold": float(thr),
            "left": build(idx[left], depth + 1),
            "right": build(idx[~left], depth + 1),
        }

    return build(np.arange(len(y)), 0)


def _tree_predict(node: dict, row: np.ndarray) -> float:
    while "leaf" not in node:
        node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
    return float(node["leaf"])


# ---------------------------------------------------------------------------
# MLP: one hidden ReLU layer, sigmoid output, full-batch gradient descent
# ---------------------------------------------------------------------------


def _mlp_forward(params: dict, x: np.ndarray) -> np.ndarray:
    hidden = np.maximum(x @ params["w1"] + params["b1"], 0.0)
    return _sigmoid(hidden @ params["w2"] + params["b2"]).ravel()


def _fit_mlp(spec, x, y):
    rng = np.random.default_rng(spec.seed)
    h = spec.hidden_units
    params = {
        "w1": rng.uniform(-0.5, 0.5, size=(x.shape[1], h)),
        "b1": rng.uniform(-0.5, 0.5, size=h),
        "w2": rng.uniform(-0.5, 0.5, size=(h, 1)),
        "b2": rng.uniform(-0.5, 0.5, size=1),
    }
    lr = spec.effective_learning_rate
    n = x.shape[0]
    losses = []
    for _ in range(spec.iterations):
        pre = x @ params["w1"] + params["b1"]
        hidden = np.maximum(pre, 0.0)
        p = _sigmoid(hidden @ params["w2"] + params["b2"]).ravel()
        clipped = np.clip(p, 1e-12, 1 - 1e-12)
        losses.append(float(-np.mean(y * np.log(clipped) + (1 - y) * np.log(1 - clipped))))
        delta_out = ((p - y) / n).reshape(-1, 1)
        grad_w2 = hidden.T @ delta_out
        grad_b2 = delta_out.sum(axis=0)
        delta_hidden = (delta_out @ params["w2"].T) * (pre > 0)
        grad_w1 = x.T @ delta_hidden
        grad_b1 = delta_hidden.sum(axis=0)
        params = {
            "w1": params["w1"] - lr * grad_w1,
            "b1": params["b1"] - lr * grad_b1,
            "w2": params["w2"] - lr * grad_w2,
            "b2": params["b2"] - lr * grad_b2,
        }
    return params, tuple(losses)
