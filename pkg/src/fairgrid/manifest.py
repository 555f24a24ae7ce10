"""Declarative experiment manifests.

A manifest is a TOML document that captures one validated configuration of
the workflow model: dataset schema, the mitigation/learner/metric grid,
trade-off, validation, and seed, plus a provenance block. Manifests are
the portable "downloaded experiment": the CLI and the server both execute
them with the same engine, and parsing always re-validates the selection
against the feature model so a hand-edited manifest fails with the exact
constraint messages the form would show.

Emission is deterministic (fixed key order, shortest-round-trip floats)
except for the creation timestamp, which callers can pin.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import __version__
from .bench import ExperimentSpec, TradeoffSpec, ValidationSpec
from .data import DatasetSchema, SensitiveFeature
from .extfm import (
    Configuration,
    FeatureModel,
    Violation,
    model_checksum,
    validate_configuration,
)
from .learners import LearnerSpec
from .metrics import MetricKind
from .mitigation import MitigationSpec

MANIFEST_VERSION = 1

DEFAULT_SEED = 42
DEFAULT_TEST_FRACTION = 0.3
DEFAULT_FOLDS = 5
DEFAULT_REPAIR_LEVEL = 1.0
DEFAULT_TOLERANCE = 0.05
DEFAULT_MAX_ITERATIONS = 1000

_SCALER_FEATURES = {"no-scaler": "none", "standard-scaler": "standard", "min-max-scaler": "min-max"}
_SCALERS_TO_FEATURE = {v: k for k, v in _SCALER_FEATURES.items()}
_MITIGATION_FEATURES = {"no-method": "none", "reweighing": "reweighing", "dir": "dir", "demv": "demv"}
_MITIGATIONS_TO_FEATURE = {v: k for k, v in _MITIGATION_FEATURES.items()}
_LEARNER_FEATURES = (
    "logistic-regression",
    "mlp-classifier",
    "decision-tree",
    "linear-regression",
    "decision-tree-regressor",
)
_LEARNER_KIND_OF_FEATURE = {
    "logistic-regression": "logistic-regression",
    "mlp-classifier": "mlp",
    "decision-tree": "decision-tree",
    "linear-regression": "linear-regression",
    "decision-tree-regressor": "decision-tree-regressor",
}
_FEATURE_OF_LEARNER_KIND = {v: k for k, v in _LEARNER_KIND_OF_FEATURE.items()}
# canonical metric order = workflow-model declaration order; manifests may
# list metrics in any order but weights always follow this canonical order
_METRIC_FEATURES = (
    "accuracy",
    "zero-one-loss",
    "statistical-parity",
    "disparate-impact",
    "average-odds",
    "equal-opportunity",
    "mean-absolute-error",
    "mean-squared-error",
)
_TRADEOFF_FEATURES = ("mean", "weighted-sum", "harmonic-mean", "pareto-front")


class ManifestError(ValueError):
    """Invalid manifest or configuration; carries constraint messages."""

    def __init__(self, message: str, violations: tuple[str, ...] = ()):
        super().__init__(message)
        self.violations = violations


def _violation_error(violations: list[Violation]) -> ManifestError:
    msgs = tuple(v.reason for v in violations)
    return ManifestError("configuration violates the workflow model: " + "; ".join(msgs), msgs)


# ---------------------------------------------------------------------------
# Configuration -> ExperimentSpec
# ---------------------------------------------------------------------------


def _attr(config: Configuration, fid: str, name: str) -> Optional[str]:
    value = config.attributes.get((fid, name))
    if value is None or str(value).strip() == "":
        return None
    return str(value).strip()


def parse_sensitive_spec(text: str) -> tuple[SensitiveFeature, ...]:
    """Parse the compact sensitive-feature syntax: "col=v1|v2;col2=v3"."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ManifestError(
                f"cannot parse sensitive feature '{chunk}': expected column=value[|value...]"
            )
        column, _, values = chunk.partition("=")
        privileged = tuple(v.strip() for v in values.split("|") if v.strip())
        if not column.strip() or not privileged:
            raise ManifestError(f"sensitive feature '{chunk}' needs a column and privileged values")
        out.append(SensitiveFeature(column.strip(), privileged))
    if not out:
        raise ManifestError("at least one sensitive feature is required")
    return tuple(out)


def spec_from_configuration(
    model: FeatureModel, config: Configuration, seed_override: Optional[int] = None
) -> ExperimentSpec:
    """Compile a validated configuration into an executable spec.

    Raises ManifestError (with the violation messages) when the
    configuration does not validate, and for attribute payloads the model
    cannot check itself, like a weight list whose length does not match the
    selected metrics.
    """
    violations = validate_configuration(model, config)
    if violations:
        raise _violation_error(violations)
    sel = config.selected

    task = "classification" if "classification" in sel else "regression"
    label = _attr(config, "dataset", "label-name")
    sensitive = parse_sensitive_spec(_attr(config, "dataset", "sensitive-features") or "")
    positive = _attr(config, "classification", "positive-value") if task == "classification" else None
    schema = DatasetSchema(label=label, task=task, positive=positive, sensitive=sensitive)

    scalers = tuple(_SCALER_FEATURES[f] for f in _SCALER_FEATURES if f in sel)
    seed = seed_override
    if seed is None:
        raw_seed = _attr(config, "experiment", "seed")
        seed = int(float(raw_seed)) if raw_seed is not None else DEFAULT_SEED

    learner_specs = tuple(
        LearnerSpec(_LEARNER_KIND_OF_FEATURE[f], seed=seed)
        for f in _LEARNER_FEATURES
        if f in sel
    )

    mitigations = []
    for fid, kind in _MITIGATION_FEATURES.items():
        if fid not in sel:
            continue
        if kind == "dir":
            level = _attr(config, "dir", "repair-level")
            mitigations.append(
                MitigationSpec("dir", repair_level=float(level) if level else DEFAULT_REPAIR_LEVEL)
            )
        elif kind == "demv":
            tol = _attr(config, "demv", "tolerance")
            max_iter = _attr(config, "demv", "max-iterations")
            mitigations.append(
                MitigationSpec(
                    "demv",
                    tolerance=float(tol) if tol else DEFAULT_TOLERANCE,
                    max_iterations=int(float(max_iter)) if max_iter else DEFAULT_MAX_ITERATIONS,
                    seed=seed,
                )
            )
        else:
            mitigations.append(MitigationSpec(kind))

    metric_kinds = tuple(MetricKind(f) for f in _METRIC_FEATURES if f in sel)

    tradeoff_kind = next(f for f in _TRADEOFF_FEATURES if f in sel)
    weights: tuple[float, ...] = ()
    if tradeoff_kind == "weighted-sum":
        raw = _attr(config, "weighted-sum", "weights") or ""
        try:
            weights = tuple(float(w) for w in raw.split(",") if w.strip())
        except ValueError:
            raise ManifestError(f"cannot parse trade-off weights '{raw}'") from None
        if len(weights) != len(metric_kinds):
            raise ManifestError(
                f"weighted-sum needs one weight per selected metric: got {len(weights)} "
                f"weight(s) for {len(metric_kinds)} metric(s)"
            )

    if "holdout" in sel:
        fraction = _attr(config, "holdout", "test-fraction")
        validation = ValidationSpec(
            "holdout", test_fraction=float(fraction) if fraction else DEFAULT_TEST_FRACTION
        )
    else:
        folds = _attr(config, "k-fold", "folds")
        stratified = _attr(config, "k-fold", "stratified")
        validation = ValidationSpec(
            "k-fold",
            folds=int(float(folds)) if folds else DEFAULT_FOLDS,
            stratified=(stratified != "false") if stratified else task == "classification",
        )

    try:
        return ExperimentSpec(
            schema=schema,
            scalers=scalers,
            learners=learner_specs,
            mitigations=tuple(mitigations),
            metrics=metric_kinds,
            tradeoff=TradeoffSpec(tradeoff_kind, weights),
            validation=validation,
            seed=seed,
        )
    except ValueError as exc:
        raise ManifestError(str(exc)) from exc


def configuration_from_spec_parts(doc: dict) -> Configuration:
    """Rebuild the feature-model configuration a manifest describes."""
    selected = {
        "experiment", "dataset", "scalers", "ml-model", "fairness-methods",
        "metrics", "tradeoff", "validation",
    }
    attributes: dict[tuple[str, str], str] = {}

    dataset = doc["dataset"]
    attributes[("dataset", "label-name")] = str(dataset["label"])
    attributes[("dataset", "sensitive-features")] = ";".join(
        f"{s['column']}=" + "|".join(str(v) for v in s["privileged"]) for s in dataset["sensitive"]
    )
    task = dataset["task"]
    if task == "classification":
        selected.add("classification")
        selected.add("classification-methods")
        attributes[("classification", "positive-value")] = str(dataset.get("positive", ""))
    else:
        selected.add("regression")
        selected.add("regression-methods")

    experiment = doc["experiment"]
    for scaler in experiment["scalers"]:
        feature = _SCALERS_TO_FEATURE.get(str(scaler))
        if feature is None:
            raise ManifestError(f"unknown scaler '{scaler}'")
        selected.add(feature)
    for learner in experiment["learners"]:
        feature = _FEATURE_OF_LEARNER_KIND.get(str(learner))
        if feature is None:
            raise ManifestError(f"unknown learner '{learner}'")
        selected.add(feature)
    for mit in experiment["mitigations"]:
        feature = _MITIGATIONS_TO_FEATURE.get(str(mit))
        if feature is None:
            raise ManifestError(f"unknown mitigation '{mit}'")
        selected.add(feature)
    for metric in experiment["metrics"]:
        if str(metric) not in _METRIC_FEATURES:
            raise ManifestError(f"unknown metric '{metric}'")
        selected.add(str(metric))
        selected.add(
            "classification-metrics"
            if MetricKind(str(metric)).task == "classification"
            else "regression-metrics"
        )
    attributes[("experiment", "seed")] = str(int(experiment.get("seed", DEFAULT_SEED)))

    params = experiment.get("mitigation-params", {})
    if "dir" in experiment["mitigations"]:
        attributes[("dir", "repair-level")] = _num_str(params.get("repair-level", DEFAULT_REPAIR_LEVEL))
    if "demv" in experiment["mitigations"]:
        attributes[("demv", "tolerance")] = _num_str(params.get("tolerance", DEFAULT_TOLERANCE))
        attributes[("demv", "max-iterations")] = str(int(params.get("max-iterations", DEFAULT_MAX_ITERATIONS)))

    tradeoff = doc["tradeoff"]
    if tradeoff["kind"] not in _TRADEOFF_FEATURES:
        raise ManifestError(f"unknown trade-off kind '{tradeoff['kind']}'")
    selected.add(tradeoff["kind"])
    if tradeoff["kind"] == "weighted-sum":
        weights = tradeoff.get("weights", [])
        attributes[("weighted-sum", "weights")] = ",".join(_num_str(w) for w in weights)

    validation = doc["validation"]
    if validation["kind"] == "holdout":
        selected.add("holdout")
        attributes[("holdout", "test-fraction")] = _num_str(
            validation.get("test-fraction", DEFAULT_TEST_FRACTION)
        )
    elif validation["kind"] == "k-fold":
        selected.add("k-fold")
        attributes[("k-fold", "folds")] = str(int(validation.get("folds", DEFAULT_FOLDS)))
        if "stratified" in validation:
            attributes[("k-fold", "stratified")] = "true" if validation["stratified"] else "false"
    else:
        raise ManifestError(f"unknown validation kind '{validation['kind']}'")

    return Configuration(frozenset(selected), attributes)


def _num_str(value) -> str:
    f = float(value)
    return str(int(f)) if f == int(f) else repr(f)


# ---------------------------------------------------------------------------
# TOML emission (deterministic, fixed key order)
# ---------------------------------------------------------------------------


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot emit TOML value of type {type(value)!r}")


def _emit_table(lines: list[str], name: str, table: dict) -> None:
    lines.append(f"[{name}]")
    for key, value in table.items():
        if isinstance(value, dict):
            continue
        lines.append(f"{key} = {_toml_value(value)}")
    for key, value in table.items():
        if isinstance(value, dict):
            lines.append("")
            _emit_table(lines, f"{name}.{key}", value)


def _emit_manifest_toml(doc: dict) -> str:
    lines: list[str] = [f"version = {doc['version']}"]
    for section in ("provenance", "dataset", "experiment", "tradeoff", "validation"):
        table = doc[section]
        lines.append("")
        if section == "dataset":
            sensitive = table.pop("sensitive")
            _emit_table(lines, section, table)
            for s in sensitive:
                lines.append("")
                lines.append("[[dataset.sensitive]]")
                for key, value in s.items():
                    lines.append(f"{key} = {_toml_value(value)}")
            table["sensitive"] = sensitive
        else:
            _emit_table(lines, section, table)
    return "\n".join(lines) + "\n"


def generate_manifest(
    model: FeatureModel, config: Configuration, created: Optional[str] = None
) -> bytes:
    """Serialize a validated configuration to manifest bytes.

    ``created`` pins the provenance timestamp (ISO-8601); omit it for the
    current time. Everything else is deterministic.
    """
    spec = spec_from_configuration(model, config)  # validates, raises with messages
    if created is None:
        created = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")

    doc: dict = {
        "version": MANIFEST_VERSION,
        "provenance": {
            "tool": f"fairgrid {__version__}",
            "created": created,
            "model-checksum": model_checksum(model),
        },
        "dataset": {
            "label": spec.schema.label,
            "task": spec.schema.task,
            **({"positive": spec.schema.positive} if spec.schema.positive is not None else {}),
            "sensitive": [
                {"column": s.column, "privileged": list(s.privileged)} for s in spec.schema.sensitive
            ],
        },
        "experiment": {
            "scalers": list(spec.scalers),
            "learners": [l.kind for l in spec.learners],
            "mitigations": [m.kind for m in spec.mitigations],
            "metrics": [m.value for m in spec.metrics],
            "seed": spec.seed,
        },
        "tradeoff": {
            "kind": spec.tradeoff.kind,
            **({"weights": list(spec.tradeoff.weights)} if spec.tradeoff.weights else {}),
        },
        "validation": (
            {"kind": "holdout", "test-fraction": spec.validation.test_fraction}
            if spec.validation.kind == "holdout"
            else {
                "kind": "k-fold",
                "folds": spec.validation.folds,
                "stratified": spec.validation.stratified,
            }
        ),
    }
    mit_params = {}
    for m in spec.mitigations:
        if m.kind == "dir":
            mit_params["repair-level"] = m.repair_level
        elif m.kind == "demv":
            mit_params["tolerance"] = m.tolerance
            mit_params["max-iterations"] = m.max_iterations
    if mit_params:
        doc["experiment"]["mitigation-params"] = mit_params
    return _emit_manifest_toml(doc).encode("utf-8")


def _require(doc: dict, path: str):
    cur = doc
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise ManifestError(f"manifest is missing required field '{path}'")
        cur = cur[part]
    return cur


def read_configuration(data: bytes | str) -> Configuration:
    """Parse manifest bytes back into a feature-model configuration."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ManifestError(f"cannot parse manifest: {exc}") from exc
    version = doc.get("version")
    if version != MANIFEST_VERSION:
        raise ManifestError(
            f"unknown manifest version {version!r}; this tool reads version {MANIFEST_VERSION}"
        )
    for path in (
        "dataset.label", "dataset.task", "dataset.sensitive", "experiment.scalers",
        "experiment.learners", "experiment.mitigations", "experiment.metrics",
        "tradeoff.kind", "validation.kind",
    ):
        _require(doc, path)
    return configuration_from_spec_parts(doc)


def parse_manifest(
    data: bytes | str, model: FeatureModel, seed_override: Optional[int] = None
) -> ExperimentSpec:
    """Parse and re-validate a manifest into an executable spec."""
    config = read_configuration(data)
    return spec_from_configuration(model, config, seed_override=seed_override)
