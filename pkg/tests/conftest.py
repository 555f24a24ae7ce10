"""Shared fixtures: synthetic datasets and random feature-model generation."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fairgrid import extfm
from fairgrid.data import DataTable, DatasetSchema, SensitiveFeature, bind_schema

settings.register_profile(
    "ci", derandomize=True, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ci")


def synthetic_biased_dataset(
    n: int, seed: int, bias_strength: float = 1.2, label: str = "outcome"
) -> tuple[str, DatasetSchema]:
    """CSV text for a binary task whose label is correlated with a sensitive
    attribute: two standard-normal features x1, x2, a group column in
    {A (privileged), B}, and outcome = 1 when
    x1 + x2 + bias_strength * (group == A) + noise(sd 0.5) > 0.6.
    Group membership is a fair coin, so the privileged group receives
    systematically more positive labels at the configured strength.
    """
    rng = np.random.default_rng(seed)
    group = np.where(rng.random(n) < 0.5, "A", "B")
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    noise = rng.normal(scale=0.5, size=n)
    score = x1 + x2 + bias_strength * (group == "A") + noise
    y = np.where(score > 0.6, "1", "0")
    lines = [f"group,x1,x2,{label}"]
    lines += [f"{g},{a:.6f},{b:.6f},{t}" for g, a, b, t in zip(group, x1, x2, y)]
    schema = DatasetSchema(
        label=label,
        task="classification",
        positive="1",
        sensitive=(SensitiveFeature("group", ("A",)),),
    )
    return "\n".join(lines) + "\n", schema


@pytest.fixture
def biased_bound():
    from fairgrid.data import parse_csv

    csv_text, schema = synthetic_biased_dataset(80, seed=11)
    return bind_schema(parse_csv(csv_text), schema)


def skew_table_8rows() -> tuple[DataTable, DatasetSchema]:
    """The 8-row reweighing fixture: 4 privileged / 4 positive with cell
    counts (priv,pos)=3, (priv,neg)=1, (unpriv,pos)=1, (unpriv,neg)=3."""
    s = np.array(["p", "p", "p", "p", "u", "u", "u", "u"], dtype=object)
    y = np.array(["1", "1", "1", "0", "1", "0", "0", "0"], dtype=object)
    table = DataTable(("s", "y"), {"s": s, "y": y})
    schema = DatasetSchema(
        label="y", task="classification", positive="1",
        sensitive=(SensitiveFeature("s", ("p",)),),
    )
    return table, schema


def random_feature_model(rng: np.random.Generator, n_features: int) -> extfm.FeatureModel:
    """A random valid feature model: tree + groups + requires/excludes."""
    features = [extfm.Feature("f0", "F0", None, True)]
    for i in range(1, n_features):
        parent = f"f{rng.integers(i)}"
        mandatory = bool(rng.random() < 0.25)
        features.append(extfm.Feature(f"f{i}", f"F{i}", parent, mandatory))

    children: dict[str, list[str]] = {f.id: [] for f in features}
    for f in features:
        if f.parent:
            children[f.parent].append(f.id)

    groups = []
    grouped: set[str] = set()
    for fid, kids in children.items():
        free = [k for k in kids if k not in grouped and not next(
            f for f in features if f.id == k).mandatory]
        if len(free) >= 2 and rng.random() < 0.5:
            size = int(rng.integers(2, len(free) + 1))
            members = tuple(free[:size])
            kind = "alternative" if rng.random() < 0.5 else "or"
            groups.append(extfm.Group(fid, kind, members))
            grouped.update(members)

    constraints = []
    n_constraints = int(rng.integers(0, max(2, n_features // 3)))
    for c in range(n_constraints):
        a, b = rng.choice(n_features, size=2, replace=False)
        kind = "requires" if rng.random() < 0.5 else "excludes"
        constraints.append(
            extfm.CrossConstraint(kind, f"f{a}", f"f{b}", f"C{c}: f{a} {kind} f{b}")
        )
    return extfm.FeatureModel(features, groups, constraints=constraints)
