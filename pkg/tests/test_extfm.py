"""Feature model: document parsing, validation, propagation soundness."""

import numpy as np
import pytest

from fairgrid import extfm
from fairgrid.extfm import (
    Configuration,
    FeatureStatus,
    UnknownFeatureError,
    builtin_model,
    closure,
    enumerate_valid,
    load_feature_model,
    propagate,
    validate_configuration,
)

from conftest import random_feature_model

REGRESSION_MSG = "Regression task is not compatible with fairness methods"
MLP_MSG = "Not compatible with MLP Classifier or MLP Regressor"


def _valid_classification_selection():
    return {
        "experiment", "dataset", "scalers", "no-scaler", "ml-model", "classification",
        "classification-methods", "logistic-regression", "fairness-methods", "no-method",
        "metrics", "classification-metrics", "accuracy", "statistical-parity",
        "tradeoff", "mean", "validation", "holdout",
    }


def _label_attrs():
    return {
        "dataset": {"label-name": "y", "sensitive-features": "sex=M"},
        "classification": {"positive-value": "1"},
    }


class TestLoadModel:
    def test_builtin_has_seven_sections(self):
        model = load_feature_model(None)
        assert len(model.children(model.root.id)) == 7

    def test_single_root_document(self):
        model = load_feature_model('feature solo mandatory "Solo"\n')
        assert len(model.features) == 1
        assert model.root.id == "solo"

    def test_constraint_with_unknown_id(self):
        doc = 'feature r mandatory "R"\n  feature a optional "A"\n  feature b optional "B"\n' \
              'requires a ghost "a needs ghost"\n'
        with pytest.raises(extfm.ModelError, match="ghost"):
            load_feature_model(doc)

    def test_duplicate_ids(self):
        doc = 'feature r mandatory "R"\n  feature a optional\n  feature a optional\n'
        with pytest.raises(extfm.ModelError, match="duplicate"):
            load_feature_model(doc)

    def test_dangling_parent_rejected_by_type(self):
        with pytest.raises(extfm.ModelError, match="parent"):
            extfm.FeatureModel([
                extfm.Feature("r", "R", None, True),
                extfm.Feature("a", "A", "missing", False),
            ])

    def test_two_roots_rejected(self):
        doc = 'feature r mandatory "R"\nfeature s mandatory "S"\n'
        with pytest.raises(extfm.ModelError, match="root"):
            load_feature_model(doc)

    def test_unparseable_line(self):
        with pytest.raises(extfm.ModelError, match="line 2"):
            load_feature_model('feature r mandatory "R"\n  banana\n')

    def test_group_needs_two_members(self):
        doc = 'feature r mandatory "R"\n  group or\n    feature only optional\n'
        with pytest.raises(extfm.ModelError, match="two member"):
            load_feature_model(doc)

    def test_dump_parse_round_trip_stable(self):
        model = builtin_model()
        dumped = extfm.dump_model_document(model)
        assert extfm.dump_model_document(load_feature_model(dumped)) == dumped


class TestValidateConfiguration:
    def test_valid_classification_config(self):
        model = builtin_model()
        cfg = Configuration.of(_valid_classification_selection(), _label_attrs())
        assert validate_configuration(model, cfg) == []

    def test_regression_with_reweighing(self):
        model = builtin_model()
        sel = {
            "experiment", "dataset", "scalers", "no-scaler", "ml-model", "regression",
            "regression-methods", "linear-regression", "fairness-methods", "reweighing",
            "metrics", "regression-metrics", "mean-absolute-error",
            "tradeoff", "mean", "validation", "holdout",
        }
        cfg = Configuration.of(sel, {"dataset": {"label-name": "y", "sensitive-features": "s=a"}})
        reasons = [v.reason for v in validate_configuration(model, cfg)]
        assert REGRESSION_MSG in reasons

    def test_both_tasks_selected(self):
        model = builtin_model()
        sel = _valid_classification_selection() | {"regression", "regression-methods",
                                                   "linear-regression"}
        cfg = Configuration.of(sel, _label_attrs())
        reasons = [v.reason for v in validate_configuration(model, cfg)]
        assert any("Exactly one of" in r for r in reasons)

    def test_unknown_feature_raises_not_violates(self):
        model = builtin_model()
        with pytest.raises(UnknownFeatureError, match="warp-drive"):
            validate_configuration(model, Configuration.of({"warp-drive"}))

    def test_unknown_attribute_raises(self):
        model = builtin_model()
        cfg = Configuration.of(_valid_classification_selection(),
                               {"dataset": {"wrong-attr": "x"}})
        with pytest.raises(UnknownFeatureError, match="wrong-attr"):
            validate_configuration(model, cfg)

    def test_required_attribute_missing(self):
        model = builtin_model()
        cfg = Configuration.of(_valid_classification_selection())
        reasons = [v.reason for v in validate_configuration(model, cfg)]
        assert any("label-name" in r for r in reasons)
        assert any("positive-value" in r for r in reasons)

    def test_number_attribute_validated(self):
        model = builtin_model()
        sel = (_valid_classification_selection() - {"holdout"}) | {"k-fold"}
        attrs = _label_attrs() | {"k-fold": {"folds": "many"}}
        reasons = [v.reason for v in validate_configuration(model, Configuration.of(sel, attrs))]
        assert any("must be a number" in r for r in reasons)

    def test_enum_attribute_validated(self):
        model = builtin_model()
        sel = (_valid_classification_selection() - {"holdout"}) | {"k-fold"}
        attrs = _label_attrs() | {"k-fold": {"stratified": "maybe"}}
        reasons = [v.reason for v in validate_configuration(model, Configuration.of(sel, attrs))]
        assert any("must be one of" in r for r in reasons)

    def test_missing_root_and_orphan(self):
        model = builtin_model()
        reasons = [v.reason for v in validate_configuration(
            model, Configuration.of({"accuracy"}), check_attributes=False)]
        assert any("Root feature" in r for r in reasons)
        assert any("requires its parent" in r for r in reasons)

    def test_or_group_needs_a_member(self):
        model = builtin_model()
        sel = _valid_classification_selection() - {"no-method"}
        reasons = [v.reason for v in validate_configuration(
            model, Configuration.of(sel), check_attributes=False)]
        assert any("At least one of" in r and "Fairness Methods" in r for r in reasons)


class TestPropagate:
    def test_mlp_disables_reweighing_with_exact_message(self):
        model = builtin_model()
        state = propagate(model, Configuration.of({"classification", "mlp-classifier"}))
        assert state.is_disabled("reweighing")
        assert state.reason("reweighing") == MLP_MSG

    def test_fairness_method_disables_regression_learners(self):
        model = builtin_model()
        for method in ("reweighing", "dir", "demv"):
            state = propagate(model, Configuration.of({method}))
            for learner in ("linear-regression", "decision-tree-regressor"):
                assert state.is_disabled(learner)
                assert state.reason(learner) == REGRESSION_MSG

    def test_empty_partial_disables_nothing(self):
        model = builtin_model()
        state = propagate(model, Configuration.of(set()))
        assert not any(s is FeatureStatus.DISABLED for s in state.status.values())

    def test_mandatory_descendants_implied(self):
        model = builtin_model()
        state = propagate(model, Configuration.of({"classification"}))
        assert state.status["classification-methods"] is FeatureStatus.IMPLIED
        assert state.status["ml-model"] is FeatureStatus.IMPLIED

    def test_alternative_sibling_disabled_with_group_message(self):
        model = builtin_model()
        state = propagate(model, Configuration.of({"classification"}))
        assert state.is_disabled("regression")
        assert "Exactly one of" in state.reason("regression")

    def test_constraint_message_wins_over_group_message(self):
        # both the task group and the exclusion forbid regression here; the
        # web form showed the cross-constraint text, so it takes precedence
        model = builtin_model()
        state = propagate(model, Configuration.of({"classification", "reweighing"}))
        assert state.reason("regression") == REGRESSION_MSG

    def test_requires_chain_reason(self):
        model = builtin_model()
        state = propagate(model, Configuration.of({"regression"}))
        assert state.is_disabled("disparate-impact")
        assert state.reason("disparate-impact") == (
            "Disparate Impact is only defined for the classification task"
        )
        assert state.is_disabled("accuracy")
        assert state.reason("accuracy") == (
            "Classification metrics require the classification task"
        )

    def test_unknown_feature_raises(self):
        with pytest.raises(UnknownFeatureError):
            propagate(builtin_model(), Configuration.of({"ghost"}))


class TestEnumerate:
    def test_two_optional_leaves(self):
        model = load_feature_model('feature r mandatory\n  feature a optional\n  feature b optional\n')
        assert len(enumerate_valid(model)) == 4

    def test_alternative_of_three(self):
        doc = ('feature r mandatory\n  group alternative\n'
               '    feature a optional\n    feature b optional\n    feature c optional\n')
        assert len(enumerate_valid(load_feature_model(doc))) == 3

    def test_excludes_pair(self):
        doc = ('feature r mandatory\n  feature a optional\n  feature b optional\n'
               'excludes a b "a and b clash"\n')
        assert len(enumerate_valid(load_feature_model(doc))) == 3

    def test_too_large_guarded(self):
        features = [extfm.Feature("f0", "F0", None, True)] + [
            extfm.Feature(f"f{i}", f"F{i}", "f0", False) for i in range(1, 32)
        ]
        with pytest.raises(extfm.ModelError, match="too large"):
            enumerate_valid(extfm.FeatureModel(features))

    def test_matches_validate_on_random_models(self):
        rng = np.random.default_rng(77)
        for _ in range(15):
            model = random_feature_model(rng, int(rng.integers(4, 11)))
            valid = set(enumerate_valid(model))
            n = len(model.features)
            # brute force over all subsets, independently of the search
            for bits in range(2**n):
                selection = frozenset(
                    f"f{i}" for i in range(n) if bits & (1 << i)
                )
                ok = not validate_configuration(
                    model, Configuration(selection), check_attributes=False
                )
                assert ok == (selection in valid)


class TestSoundness:
    def test_disabled_iff_no_valid_superset(self):
        rng = np.random.default_rng(101)
        for _ in range(12):
            model = random_feature_model(rng, int(rng.integers(5, 12)))
            valid = enumerate_valid(model)
            ids = [f.id for f in model.features]
            for _ in range(6):
                size = int(rng.integers(0, 3))
                partial = frozenset(rng.choice(ids, size=size, replace=False))
                state = propagate(model, Configuration(partial))
                base = closure(model, partial)
                for fid in ids:
                    if fid in base:
                        continue
                    has_superset = any(
                        partial | {fid} <= sol for sol in valid
                    )
                    assert state.is_disabled(fid) == (not has_superset), (
                        f"feature {fid}, partial {sorted(partial)}"
                    )

    def test_monotone_under_growing_selection(self):
        rng = np.random.default_rng(55)
        for _ in range(8):
            model = random_feature_model(rng, int(rng.integers(5, 11)))
            ids = [f.id for f in model.features]
            first = frozenset(rng.choice(ids, size=1))
            second = first | frozenset(rng.choice(ids, size=1))
            before = propagate(model, Configuration(first))
            after = propagate(model, Configuration(second))
            for fid in ids:
                if before.status[fid] is FeatureStatus.DISABLED:
                    assert after.status[fid] is not FeatureStatus.FREE

    def test_disabled_reasons_are_model_messages(self):
        model = builtin_model()
        known = {c.message for c in model.constraints} | {
            extfm.group_message(model, g) for g in model.groups
        }
        for partial in ({"mlp-classifier"}, {"regression"}, {"demv", "classification"},
                        {"classification", "logistic-regression"}):
            state = propagate(model, Configuration.of(partial))
            for fid, status in state.status.items():
                if status is FeatureStatus.DISABLED:
                    assert state.reason(fid) in known

    def test_validate_equals_enumeration_membership(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            model = random_feature_model(rng, int(rng.integers(4, 10)))
            valid = set(enumerate_valid(model))
            ids = [f.id for f in model.features]
            for _ in range(20):
                size = int(rng.integers(0, len(ids) + 1))
                selection = frozenset(rng.choice(ids, size=size, replace=False))
                ok = not validate_configuration(
                    model, Configuration(selection), check_attributes=False
                )
                assert ok == (selection in valid)
