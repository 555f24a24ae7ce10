"""Extended feature model of the benchmarking workflow.

The model is a feature tree with typed attributes, alternative/or groups,
and requires/excludes cross constraints. Any configuration accepted by
``validate_configuration`` maps onto an executable experiment; that is the
whole point of the model, so propagation (``propagate``) is implemented as
per-feature satisfiability probing rather than heuristics: a feature is
disabled exactly when no valid complete configuration extends the current
selection with it. Models are small (well under sixty features), which
keeps exhaustive probing cheap and makes soundness structural.

Model documents are a line-based text format (an indented feature tree
followed by a constraint list); see docs/formats.md. The built-in workflow
model ships as package data in the same format, so the server, the CLI,
the tests, and the web form all consume one source of truth.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping, Optional, Sequence


class ModelError(ValueError):
    """Malformed model document or violated model invariant."""


class UnknownFeatureError(ValueError):
    """A configuration referenced a feature or attribute the model lacks."""


@dataclass(frozen=True)
class Feature:
    id: str
    name: str
    parent: Optional[str]
    mandatory: bool


@dataclass(frozen=True)
class Group:
    parent: str
    kind: str  # "alternative" | "or"
    members: tuple[str, ...]


@dataclass(frozen=True)
class AttributeDecl:
    owner: str
    name: str
    kind: str  # "text" | "number" | "enum"
    required: bool
    choices: tuple[str, ...] = ()


@dataclass(frozen=True)
class CrossConstraint:
    kind: str  # "requires" | "excludes"
    a: str
    b: str
    message: str


class FeatureModel:
    """Validated feature model; immutable after construction."""

    def __init__(
        self,
        features: Sequence[Feature],
        groups: Sequence[Group] = (),
        attributes: Sequence[AttributeDecl] = (),
        constraints: Sequence[CrossConstraint] = (),
    ):
        self.features = tuple(features)
        self.groups = tuple(groups)
        self.attributes = tuple(attributes)
        self.constraints = tuple(constraints)
        self.by_id = {f.id: f for f in self.features}
        self._children: dict[str, list[str]] = {f.id: [] for f in self.features}
        self._group_of: dict[str, Group] = {}
        self._attrs_of: dict[str, list[AttributeDecl]] = {f.id: [] for f in self.features}
        self._validate()

    def _validate(self) -> None:
        if len(self.by_id) != len(self.features):
            seen, dupes = set(), set()
            for f in self.features:
                (dupes if f.id in seen else seen).add(f.id)
            raise ModelError(f"duplicate feature id(s): {', '.join(sorted(dupes))}")
        roots = [f for f in self.features if f.parent is None]
        if len(roots) != 1:
            raise ModelError(f"exactly one root feature required, found {len(roots)}")
        self.root = roots[0]
        if not self.root.mandatory:
            raise ModelError("the root feature must be mandatory")
        for f in self.features:
            if f.parent is not None:
                if f.parent not in self.by_id:
                    raise ModelError(f"feature '{f.id}' has unknown parent '{f.parent}'")
                self._children[f.parent].append(f.id)
        # parent links must form a tree: every feature reaches the root
        for f in self.features:
            seen: set[str] = set()
            cur: Optional[str] = f.id
            while cur is not None:
                if cur in seen:
                    raise ModelError(f"parent cycle through '{f.id}'")
                seen.add(cur)
                cur = self.by_id[cur].parent
        for g in self.groups:
            if g.parent not in self.by_id:
                raise ModelError(f"group references unknown parent '{g.parent}'")
            if g.kind not in ("alternative", "or"):
                raise ModelError(f"unknown group kind '{g.kind}'")
            if len(g.members) < 2:
                raise ModelError(f"group under '{g.parent}' needs at least two members")
            for m in g.members:
                if m not in self.by_id:
                    raise ModelError(f"group under '{g.parent}' references unknown id '{m}'")
                if self.by_id[m].parent != g.parent:
                    raise ModelError(f"group member '{m}' is not a child of '{g.parent}'")
                if m in self._group_of:
                    raise ModelError(f"feature '{m}' belongs to more than one group")
                self._group_of[m] = g
        seen_attrs: set[tuple[str, str]] = set()
        for a in self.attributes:
            if a.owner not in self.by_id:
                raise ModelError(f"attribute '{a.name}' has unknown owner '{a.owner}'")
            if (a.owner, a.name) in seen_attrs:
                raise ModelError(f"duplicate attribute '{a.name}' on '{a.owner}'")
            if a.kind not in ("text", "number", "enum"):
                raise ModelError(f"unknown attribute kind '{a.kind}'")
            if a.kind == "enum" and not a.choices:
                raise ModelError(f"enum attribute '{a.name}' needs choices")
            seen_attrs.add((a.owner, a.name))
            self._attrs_of[a.owner].append(a)
        for c in self.constraints:
            for fid in (c.a, c.b):
                if fid not in self.by_id:
                    raise ModelError(f"constraint references unknown id '{fid}'")
            if c.kind not in ("requires", "excludes"):
                raise ModelError(f"unknown constraint kind '{c.kind}'")
            if not c.message.strip():
                raise ModelError(f"constraint {c.kind}({c.a}, {c.b}) needs a message")

    def children(self, fid: str) -> list[str]:
        return self._children[fid]

    def group_of(self, fid: str) -> Optional[Group]:
        return self._group_of.get(fid)

    def attributes_of(self, fid: str) -> list[AttributeDecl]:
        return self._attrs_of[fid]

    def attribute(self, fid: str, name: str) -> Optional[AttributeDecl]:
        for a in self._attrs_of.get(fid, []):
            if a.name == name:
                return a
        return None

    def leaves(self) -> list[str]:
        return [f.id for f in self.features if not self._children[f.id]]


@dataclass(frozen=True)
class Configuration:
    """A (possibly partial) selection plus attribute values.

    Attribute values are keyed by (feature id, attribute name) and stored
    as strings, matching what a form or manifest supplies.
    """

    selected: frozenset[str]
    attributes: Mapping[tuple[str, str], str] = field(default_factory=dict)

    @classmethod
    def of(cls, selected: Iterable[str], attributes: Optional[Mapping] = None) -> "Configuration":
        attrs: dict[tuple[str, str], str] = {}
        if attributes:
            for key, value in attributes.items():
                if isinstance(key, tuple):
                    attrs[key] = str(value)
                else:  # nested form: {feature: {name: value}}
                    for name, v in value.items():
                        attrs[(key, name)] = str(v)
        return cls(frozenset(selected), attrs)


@dataclass(frozen=True)
class Violation:
    reason: str


class FeatureStatus(Enum):
    SELECTED = "selected"
    IMPLIED = "implied"
    DISABLED = "disabled"
    FREE = "free"


@dataclass(frozen=True)
class PropagationState:
    status: dict[str, FeatureStatus]
    reasons: dict[str, str]

    def is_disabled(self, fid: str) -> bool:
        return self.status[fid] is FeatureStatus.DISABLED

    def reason(self, fid: str) -> Optional[str]:
        return self.reasons.get(fid)


# ---------------------------------------------------------------------------
# Selection semantics
# ---------------------------------------------------------------------------


def closure(model: FeatureModel, selected: Iterable[str]) -> frozenset[str]:
    """Features implied by a selection: the root, all ancestors of selected
    features, and mandatory children of anything selected, to fixpoint."""
    out = set(selected)
    out.add(model.root.id)
    changed = True
    while changed:
        changed = False
        for fid in list(out):
            parent = model.by_id[fid].parent
            if parent is not None and parent not in out:
                out.add(parent)
                changed = True
            for child in model.children(fid):
                if model.by_id[child].mandatory and child not in out:
                    out.add(child)
                    changed = True
    return frozenset(out)


def _check_known(model: FeatureModel, config: Configuration) -> None:
    for fid in config.selected:
        if fid not in model.by_id:
            raise UnknownFeatureError(f"unknown feature id '{fid}'")
    for fid, name in config.attributes:
        if fid not in model.by_id:
            raise UnknownFeatureError(f"attribute value for unknown feature id '{fid}'")
        if model.attribute(fid, name) is None:
            raise UnknownFeatureError(f"feature '{fid}' has no attribute '{name}'")


def group_message(model: FeatureModel, group: Group) -> str:
    names = ", ".join(model.by_id[m].name for m in group.members)
    parent = model.by_id[group.parent].name
    if group.kind == "alternative":
        return f"Exactly one of [{names}] must be selected under {parent}"
    return f"At least one of [{names}] must be selected under {parent}"


def validate_configuration(
    model: FeatureModel, config: Configuration, *, check_attributes: bool = True
) -> list[Violation]:
    """Check a complete configuration; an empty list means it is valid.

    Violations carry the exact user-facing message: cross-constraint
    messages verbatim, generated messages for tree and group rules.
    References to unknown ids raise ``UnknownFeatureError`` instead.
    """
    _check_known(model, config)
    sel = config.selected
    violations: list[Violation] = []

    if model.root.id not in sel:
        violations.append(Violation(f"Root feature '{model.root.name}' must be selected"))
    for fid in sorted(sel):
        f = model.by_id[fid]
        if f.parent is not None and f.parent not in sel:
            violations.append(
                Violation(f"'{f.name}' requires its parent '{model.by_id[f.parent].name}' to be selected")
            )
    for f in model.features:
        if f.parent in sel and f.mandatory and f.id not in sel and f.parent is not None:
            violations.append(
                Violation(f"'{f.name}' is mandatory under '{model.by_id[f.parent].name}' and must be selected")
            )
    for g in model.groups:
        if g.parent not in sel:
            continue
        count = sum(1 for m in g.members if m in sel)
        if g.kind == "alternative" and count != 1:
            violations.append(Violation(group_message(model, g)))
        elif g.kind == "or" and count == 0:
            violations.append(Violation(group_message(model, g)))
    for c in model.constraints:
        if c.kind == "requires" and c.a in sel and c.b not in sel:
            violations.append(Violation(c.message))
        elif c.kind == "excludes" and c.a in sel and c.b in sel:
            violations.append(Violation(c.message))

    if check_attributes:
        for a in model.attributes:
            if a.owner not in sel:
                continue
            value = config.attributes.get((a.owner, a.name))
            present = value is not None and str(value).strip() != ""
            if a.required and not present:
                violations.append(
                    Violation(f"Attribute '{a.name}' of '{model.by_id[a.owner].name}' is required")
                )
            if present:
                if a.kind == "number" and not _NUMBER_RE.match(str(value).strip()):
                    violations.append(
                        Violation(f"Attribute '{a.name}' of '{model.by_id[a.owner].name}' must be a number")
                    )
                elif a.kind == "enum" and str(value) not in a.choices:
                    violations.append(
                        Violation(
                            f"Attribute '{a.name}' of '{model.by_id[a.owner].name}' must be one of: "
                            + ", ".join(a.choices)
                        )
                    )
    return violations


_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


# ---------------------------------------------------------------------------
# Satisfiability probing
# ---------------------------------------------------------------------------


def _propagate_units(model: FeatureModel, assign: dict[str, Optional[bool]]) -> bool:
    """Unit-propagate tree, group, and cross-constraint rules in place.

    Returns False on contradiction. Assignment maps feature id to
    True/False/None (None = undecided).
    """

    def set_value(fid: str, value: bool) -> bool:
        cur = assign[fid]
        if cur is None:
            assign[fid] = value
            pending.append(fid)
            return True
        return cur == value

    pending = [fid for fid, v in assign.items() if v is not None]
    if not set_value(model.root.id, True):
        return False
    while pending:
        fid = pending.pop()
        value = assign[fid]
        f = model.by_id[fid]
        if value:
            if f.parent is not None and not set_value(f.parent, True):
                return False
            for child in model.children(fid):
                if model.by_id[child].mandatory and not set_value(child, True):
                    return False
        else:
            for child in model.children(fid):
                if not set_value(child, False):
                    return False
            if f.mandatory and f.parent is not None and not set_value(f.parent, False):
                return False
        for c in model.constraints:
            if c.kind == "requires":
                if assign[c.a] is True and not set_value(c.b, True):
                    return False
                if assign[c.b] is False and assign[c.a] is not None and assign[c.a]:
                    return False
                if assign[c.b] is False and not set_value(c.a, False):
                    return False
            else:
                if assign[c.a] is True and assign[c.b] is True:
                    return False
                if assign[c.a] is True and not set_value(c.b, False):
                    return False
                if assign[c.b] is True and not set_value(c.a, False):
                    return False
        for g in model.groups:
            if fid not in g.members and fid != g.parent:
                continue
            selected = [m for m in g.members if assign[m] is True]
            undecided = [m for m in g.members if assign[m] is None]
            parent_val = assign[g.parent]
            if g.kind == "alternative":
                if len(selected) > 1:
                    return False
                if selected and parent_val is not False:
                    for m in g.members:
                        if m != selected[0] and not set_value(m, False):
                            return False
                if parent_val is True and not undecided and len(selected) != 1:
                    return False
                if parent_val is True and len(selected) == 0 and len(undecided) == 1:
                    if not set_value(undecided[0], True):
                        return False
            else:  # or
                if parent_val is True and not undecided and not selected:
                    return False
                if parent_val is True and not selected and len(undecided) == 1:
                    if not set_value(undecided[0], True):
                        return False
    return True


def _search(
    model: FeatureModel,
    assign: dict[str, Optional[bool]],
    collect: Optional[list[frozenset[str]]] = None,
) -> bool:
    """Backtracking search for valid completions.

    With ``collect`` set, explores exhaustively and appends every valid
    complete selection; otherwise returns on the first solution.
    """
    state = dict(assign)
    if not _propagate_units(model, state):
        return False
    undecided = [fid for fid, v in state.items() if v is None]
    if not undecided:
        selection = frozenset(fid for fid, v in state.items() if v)
        ok = not validate_configuration(
            model, Configuration(selection), check_attributes=False
        )
        if ok and collect is not None:
            collect.append(selection)
        return ok
    pivot = undecided[0]
    found = False
    for value in (True, False):
        trial = dict(state)
        trial[pivot] = value
        if _search(model, trial, collect):
            found = True
            if collect is None:
                return True
    return found


def _satisfiable(model: FeatureModel, required: Iterable[str]) -> bool:
    assign: dict[str, Optional[bool]] = {f.id: None for f in model.features}
    for fid in required:
        assign[fid] = True
    return _search(model, assign)


def enumerate_valid(model: FeatureModel, max_features: int = 30) -> list[frozenset[str]]:
    """Every selection set accepted by ``validate_configuration``
    (attribute checks disabled). Guarded against large models."""
    if len(model.features) > max_features:
        raise ModelError(
            f"model too large to enumerate: {len(model.features)} features (limit {max_features})"
        )
    solutions: list[frozenset[str]] = []
    assign: dict[str, Optional[bool]] = {f.id: None for f in model.features}
    _search(model, assign, collect=solutions)
    # de-duplicate while keeping search order deterministic
    seen: set[frozenset[str]] = set()
    unique = []
    for s in solutions:
        if s not in seen:
            seen.add(s)
            unique.append(s)
    return unique


# ---------------------------------------------------------------------------
# Propagation with reasons
# ---------------------------------------------------------------------------


def _direct_conflict(model: FeatureModel, selected: frozenset[str]) -> bool:
    for c in model.constraints:
        if c.kind == "excludes" and c.a in selected and c.b in selected:
            return True
    for g in model.groups:
        if g.kind == "alternative" and sum(1 for m in g.members if m in selected) > 1:
            return True
    return False


def _attribute_reason(model: FeatureModel, base: frozenset[str], fid: str) -> str:
    """Pick the user-facing reason a feature cannot join the selection.

    Checks cross constraints in declaration order first (matching the
    web-form behavior where constraint messages win over group messages),
    then alternative groups, then a requires-forced closure as a fallback.
    """
    extended = closure(model, set(base) | {fid})

    def scan(sel: frozenset[str]) -> Optional[str]:
        for c in model.constraints:
            if c.kind == "excludes":
                if c.a in sel and c.b in sel:
                    return c.message
            else:
                if c.a in sel and c.b not in sel:
                    if _direct_conflict(model, closure(model, set(sel) | {c.b})):
                        return c.message
        for g in model.groups:
            if g.kind == "alternative" and sum(1 for m in g.members if m in sel) > 1:
                return group_message(model, g)
        return None

    reason = scan(extended)
    if reason:
        return reason
    # force requires chains and rescan
    forced = set(extended)
    changed = True
    while changed:
        changed = False
        for c in model.constraints:
            if c.kind == "requires" and c.a in forced and c.b not in forced:
                forced |= closure(model, forced | {c.b})
                changed = True
    reason = scan(frozenset(forced))
    if reason:
        return reason
    for c in model.constraints:
        if fid in (c.a, c.b):
            return c.message
    return f"No valid configuration extends the current selection with '{model.by_id[fid].name}'"


def propagate(model: FeatureModel, partial: Configuration) -> PropagationState:
    """Status per feature given a partial selection.

    Selected features keep their status, implied ones (ancestors and
    mandatory descendants) are marked implied, and every other feature is
    probed: it is disabled exactly when no valid complete configuration
    extends the partial selection with it. Attribute values are ignored
    here; they are validated only on complete configurations.
    """
    _check_known(model, partial)
    implied = closure(model, partial.selected)
    status: dict[str, FeatureStatus] = {}
    reasons: dict[str, str] = {}
    for f in model.features:
        if f.id in partial.selected:
            status[f.id] = FeatureStatus.SELECTED
        elif f.id in implied:
            status[f.id] = FeatureStatus.IMPLIED
        elif _satisfiable(model, implied | {f.id}):
            status[f.id] = FeatureStatus.FREE
        else:
            status[f.id] = FeatureStatus.DISABLED
            reasons[f.id] = _attribute_reason(model, implied, f.id)
    return PropagationState(status, reasons)


# ---------------------------------------------------------------------------
# Model document format
# ---------------------------------------------------------------------------

_FEATURE_LINE = re.compile(
    r"^feature\s+(?P<id>[A-Za-z0-9][A-Za-z0-9_-]*)"
    r"(?:\s+(?P<var>mandatory|optional))?"
    r'(?:\s+"(?P<name>[^"]*)")?\s*$'
)
_GROUP_LINE = re.compile(r"^group\s+(?P<kind>alternative|or)\s*$")
_ATTR_LINE = re.compile(
    r"^attr\s+(?P<name>[A-Za-z0-9][A-Za-z0-9_-]*)\s+"
    r"(?P<kind>text|number|enum:[A-Za-z0-9_,-]+)\s+(?P<req>required|optional)\s*$"
)
_CONSTRAINT_LINE = re.compile(
    r"^(?P<kind>requires|excludes)\s+(?P<a>[A-Za-z0-9][A-Za-z0-9_-]*)\s+"
    r'(?P<b>[A-Za-z0-9][A-Za-z0-9_-]*)\s+"(?P<msg>[^"]+)"\s*$'
)


def parse_model_document(text: str) -> FeatureModel:
    """Parse the indented tree + constraint list format (docs/formats.md)."""
    features: list[Feature] = []
    groups: list[Group] = []
    attributes: list[AttributeDecl] = []
    constraints: list[CrossConstraint] = []
    # stack of (indent, kind, payload); payload is a feature id or group ref
    stack: list[tuple[int, str, object]] = []
    open_groups: dict[int, dict] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.lstrip().startswith("#") or not raw.strip():
            continue
        stripped = raw.rstrip()
        indent_str = stripped[: len(stripped) - len(stripped.lstrip())]
        if "\t" in indent_str:
            raise ModelError(f"line {lineno}: tabs are not allowed in indentation")
        indent = len(indent_str)
        if indent % 2 != 0:
            raise ModelError(f"line {lineno}: indentation must use two spaces per level")
        line = stripped.strip()

        m = _CONSTRAINT_LINE.match(line)
        if m and indent == 0:
            constraints.append(
                CrossConstraint(m.group("kind"), m.group("a"), m.group("b"), m.group("msg"))
            )
            continue

        while stack and stack[-1][0] >= indent:
            popped = stack.pop()
            if popped[1] == "group":
                _close_group(popped[2], groups, lineno)

        m = _FEATURE_LINE.match(line)
        if m:
            fid = m.group("id")
            parent: Optional[str] = None
            in_group: Optional[dict] = None
            for depth, kind, payload in reversed(stack):
                if kind == "feature":
                    parent = payload  # type: ignore[assignment]
                    break
                if kind == "group" and in_group is None:
                    in_group = payload  # type: ignore[assignment]
            if in_group is not None:
                parent = in_group["parent"]
                in_group["members"].append(fid)
            mandatory = m.group("var") == "mandatory"
            name = m.group("name") or fid.replace("-", " ").title()
            if parent is None and features:
                raise ModelError(f"line {lineno}: multiple root features ('{fid}')")
            features.append(Feature(fid, name, parent, mandatory if parent else True))
            stack.append((indent, "feature", fid))
            continue

        m = _GROUP_LINE.match(line)
        if m:
            owner = None
            for depth, kind, payload in reversed(stack):
                if kind == "feature":
                    owner = payload
                    break
            if owner is None:
                raise ModelError(f"line {lineno}: group outside any feature")
            g = {"parent": owner, "kind": m.group("kind"), "members": [], "line": lineno}
            stack.append((indent, "group", g))
            continue

        m = _ATTR_LINE.match(line)
        if m:
            owner = None
            for depth, kind, payload in reversed(stack):
                if kind == "feature":
                    owner = payload
                    break
            if owner is None:
                raise ModelError(f"line {lineno}: attribute outside any feature")
            kind_spec = m.group("kind")
            if kind_spec.startswith("enum:"):
                choices = tuple(kind_spec[5:].split(","))
                attributes.append(
                    AttributeDecl(owner, m.group("name"), "enum", m.group("req") == "required", choices)
                )
            else:
                attributes.append(
                    AttributeDecl(owner, m.group("name"), kind_spec, m.group("req") == "required")
                )
            continue

        raise ModelError(f"line {lineno}: cannot parse '{line}'")

    while stack:
        popped = stack.pop()
        if popped[1] == "group":
            _close_group(popped[2], groups, None)
    if not features:
        raise ModelError("document declares no features")
    return FeatureModel(features, groups, attributes, constraints)


def _close_group(g: dict, groups: list[Group], lineno: Optional[int]) -> None:
    if len(g["members"]) < 2:
        raise ModelError(f"line {g['line']}: group needs at least two member features")
    groups.append(Group(g["parent"], g["kind"], tuple(g["members"])))


def dump_model_document(model: FeatureModel) -> str:
    """Serialize back to the document format, deterministically."""
    lines: list[str] = []

    def emit_feature(fid: str, depth: int) -> None:
        f = model.by_id[fid]
        var = "mandatory" if f.mandatory else "optional"
        lines.append("  " * depth + f'feature {f.id} {var} "{f.name}"')
        for a in model.attributes_of(fid):
            kind = a.kind if a.kind != "enum" else "enum:" + ",".join(a.choices)
            req = "required" if a.required else "optional"
            lines.append("  " * (depth + 1) + f"attr {a.name} {kind} {req}")
        grouped: set[str] = set()
        for g in model.groups:
            if g.parent == fid:
                lines.append("  " * (depth + 1) + f"group {g.kind}")
                for m in g.members:
                    emit_feature(m, depth + 2)
                grouped.update(g.members)
        for child in model.children(fid):
            if child not in grouped:
                emit_feature(child, depth + 1)

    emit_feature(model.root.id, 0)
    if model.constraints:
        lines.append("")
        for c in model.constraints:
            lines.append(f'{c.kind} {c.a} {c.b} "{c.message}"')
    return "\n".join(lines) + "\n"


def load_feature_model(source: Optional[str | bytes] = None) -> FeatureModel:
    """Parse a model document, or return the built-in workflow model."""
    if source is None:
        source = builtin_model_document()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    return parse_model_document(source)


def builtin_model_document() -> str:
    return resources.files("fairgrid").joinpath("data/workflow_model.fm").read_text("utf-8")


def builtin_model() -> FeatureModel:
    return load_feature_model(None)


def model_checksum(model: FeatureModel) -> str:
    digest = hashlib.sha256(dump_model_document(model).encode("utf-8")).hexdigest()
    return f"sha256:{digest}"


def model_to_dict(model: FeatureModel) -> dict:
    """JSON-friendly structure consumed by the web form."""
    return {
        "root": model.root.id,
        "features": [
            {
                "id": f.id,
                "name": f.name,
                "parent": f.parent,
                "mandatory": f.mandatory,
                "children": model.children(f.id),
            }
            for f in model.features
        ],
        "groups": [
            {"parent": g.parent, "kind": g.kind, "members": list(g.members)} for g in model.groups
        ],
        "attributes": [
            {
                "owner": a.owner,
                "name": a.name,
                "kind": a.kind,
                "required": a.required,
                "choices": list(a.choices),
            }
            for a in model.attributes
        ],
        "constraints": [
            {"kind": c.kind, "a": c.a, "b": c.b, "message": c.message} for c in model.constraints
        ],
    }
