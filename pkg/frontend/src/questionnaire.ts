// Metric-selection questionnaire. The questions and the answer-to-metric
// mapping both come from the server's questionnaire schema; this module
// only evaluates the shipped rules and pre-ticks the recommendation.

import type { QuestionnaireSchema } from "./types.js";

export function evaluateRecommendation(
  schema: QuestionnaireSchema,
  answers: Record<string, string>,
): string[] {
  const resolved: Record<string, string> = {};
  for (const question of schema.questions) {
    const answer = answers[question.id] ?? question.default;
    if (answer !== undefined && question.options.includes(answer)) {
      resolved[question.id] = answer;
    }
  }
  const recommended = new Set<string>();
  for (const rule of schema.rules) {
    const matches = Object.entries(rule.when).every(
      ([qid, accepted]) => accepted.includes(resolved[qid]),
    );
    if (matches) rule.recommend.forEach((m) => recommended.add(m));
  }
  return [...recommended].sort();
}

export function renderQuestionnaire(
  schema: QuestionnaireSchema,
  onRecommendation: (metricIds: string[]) => void,
): HTMLElement {
  const box = document.createElement("div");
  box.className = "questionnaire";
  const answers: Record<string, string> = {};

  const heading = document.createElement("h3");
  heading.textContent = "Not sure which fairness metrics to pick?";
  box.appendChild(heading);

  for (const question of schema.questions) {
    const row = document.createElement("div");
    row.className = "question";
    row.dataset.question = question.id;
    const text = document.createElement("p");
    text.textContent = question.text;
    row.appendChild(text);
    for (const option of question.options) {
      const label = document.createElement("label");
      const input = document.createElement("input");
      input.type = "radio";
      input.name = `q-${question.id}`;
      input.value = option;
      input.addEventListener("change", () => {
        answers[question.id] = option;
        onRecommendation(evaluateRecommendation(schema, answers));
      });
      label.appendChild(input);
      label.appendChild(document.createTextNode(` ${option}`));
      row.appendChild(label);
    }
    box.appendChild(row);
  }
  return box;
}
