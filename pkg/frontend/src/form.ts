// Renders the guided form: one <section> per top-level subtree of the
// workflow model, alternative groups as radios, or-groups and free leaves
// as checkboxes, attributes as inputs. Disabled flags and their reasons are
// whatever the last /validate response said; nothing is decided locally.

import type { FormState } from "./state.js";
import type { AttributeInfo, FeatureInfo, WorkflowModel } from "./types.js";

export interface FormHandlers {
  onToggle(featureId: string, on: boolean): void;
  onChoose(featureId: string, siblings: string[]): void;
  onAttribute(owner: string, name: string, value: string): void;
}

function byId(model: WorkflowModel): Map<string, FeatureInfo> {
  return new Map(model.features.map((f) => [f.id, f]));
}

function groupOf(model: WorkflowModel, featureId: string) {
  return model.groups.find((g) => g.members.includes(featureId));
}

function attributesOf(model: WorkflowModel, featureId: string): AttributeInfo[] {
  return model.attributes.filter((a) => a.owner === featureId);
}

export function renderForm(
  model: WorkflowModel,
  state: FormState,
  handlers: FormHandlers,
): HTMLElement {
  const features = byId(model);
  const root = features.get(model.root)!;
  const container = document.createElement("div");
  container.className = "workflow-form";

  for (const attr of attributesOf(model, root.id)) {
    container.appendChild(renderAttribute(root.id, attr, state, handlers));
  }
  root.children.forEach((sectionId, index) => {
    container.appendChild(renderSection(model, features, sectionId, index + 1, state, handlers));
  });
  return container;
}

function renderSection(
  model: WorkflowModel,
  features: Map<string, FeatureInfo>,
  sectionId: string,
  ordinal: number,
  state: FormState,
  handlers: FormHandlers,
): HTMLElement {
  const section = features.get(sectionId)!;
  const box = document.createElement("section");
  box.className = "form-section";
  box.dataset.feature = sectionId;
  const heading = document.createElement("h2");
  heading.textContent = `${ordinal}. ${section.name}`;
  box.appendChild(heading);
  renderChildren(model, features, sectionId, box, state, handlers);
  return box;
}

function renderChildren(
  model: WorkflowModel,
  features: Map<string, FeatureInfo>,
  parentId: string,
  into: HTMLElement,
  state: FormState,
  handlers: FormHandlers,
): void {
  for (const attr of attributesOf(model, parentId)) {
    into.appendChild(renderAttribute(parentId, attr, state, handlers));
  }
  const parent = features.get(parentId)!;
  const rendered = new Set<string>();
  for (const group of model.groups.filter((g) => g.parent === parentId)) {
    for (const member of group.members) {
      into.appendChild(
        renderFeature(model, features, member, state, handlers, group.kind === "alternative"
          ? group.members
          : null),
      );
      rendered.add(member);
    }
  }
  for (const childId of parent.children) {
    if (rendered.has(childId)) continue;
    const child = features.get(childId)!;
    if (child.mandatory) {
      // structural container: render its contents inline
      const wrap = document.createElement("div");
      wrap.className = "subgroup";
      wrap.dataset.feature = childId;
      const label = document.createElement("h3");
      label.textContent = child.name;
      wrap.appendChild(label);
      renderChildren(model, features, childId, wrap, state, handlers);
      into.appendChild(wrap);
    } else {
      into.appendChild(renderFeature(model, features, childId, state, handlers, null));
    }
  }
}

function renderFeature(
  model: WorkflowModel,
  features: Map<string, FeatureInfo>,
  featureId: string,
  state: FormState,
  handlers: FormHandlers,
  alternativeSiblings: string[] | null,
): HTMLElement {
  const feature = features.get(featureId)!;
  const field = state.field(featureId);
  const wrap = document.createElement("div");
  wrap.className = "feature";
  wrap.dataset.feature = featureId;
  wrap.dataset.status = field.status;

  const label = document.createElement("label");
  const input = document.createElement("input");
  input.type = alternativeSiblings ? "radio" : "checkbox";
  if (alternativeSiblings) {
    const group = groupOf(model, featureId)!;
    input.name = `group-${group.parent}`;
  }
  input.dataset.feature = featureId;
  input.checked = field.status === "selected" || field.status === "implied";
  input.disabled = field.status === "disabled" || field.status === "implied";
  input.addEventListener("change", () => {
    if (alternativeSiblings) handlers.onChoose(featureId, alternativeSiblings);
    else handlers.onToggle(featureId, input.checked);
  });
  label.appendChild(input);
  label.appendChild(document.createTextNode(` ${feature.name}`));
  wrap.appendChild(label);

  if (field.status === "disabled" && field.reason) {
    const reason = document.createElement("span");
    reason.className = "reason";
    reason.dataset.reasonFor = featureId;
    reason.textContent = field.reason;
    wrap.appendChild(reason);
  }

  if (state.selected.has(featureId) || field.status === "implied") {
    const nested = document.createElement("div");
    nested.className = "nested";
    renderChildren(model, features, featureId, nested, state, handlers);
    if (nested.childNodes.length > 0) wrap.appendChild(nested);
  }
  return wrap;
}

function renderAttribute(
  owner: string,
  attr: AttributeInfo,
  state: FormState,
  handlers: FormHandlers,
): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "attribute";
  wrap.dataset.attribute = `${owner}.${attr.name}`;
  const label = document.createElement("label");
  label.textContent = `${attr.name}${attr.required ? " *" : ""} `;
  let input: HTMLInputElement | HTMLSelectElement;
  if (attr.kind === "enum") {
    input = document.createElement("select");
    const blank = document.createElement("option");
    blank.value = "";
    blank.textContent = "(default)";
    input.appendChild(blank);
    for (const choice of attr.choices) {
      const option = document.createElement("option");
      option.value = choice;
      option.textContent = choice;
      input.appendChild(option);
    }
  } else {
    input = document.createElement("input");
    input.type = "text";
    if (attr.kind === "number") input.inputMode = "decimal";
  }
  input.dataset.owner = owner;
  input.dataset.name = attr.name;
  input.value = state.attribute(owner, attr.name);
  input.addEventListener("change", () =>
    handlers.onAttribute(owner, attr.name, input.value),
  );
  label.appendChild(input);
  wrap.appendChild(label);
  return wrap;
}
