// Results console: grouped goodness bar chart, a sortable table whose cell
// text is lifted character-for-character from the report CSV, best-row
// highlight, Pareto badges, and artifact downloads.

import type { ApiClient } from "./api.js";
import type { CombinationRef, ResultDocument } from "./types.js";

export function parseReportCsv(text: string): { header: string[]; rows: string[][] } {
  const lines = text.trim().split("\n");
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  return { header, rows };
}

function sameCombination(a: CombinationRef, row: string[]): boolean {
  return a.scaler === row[0] && a.model === row[1] && a.method === row[2];
}

function inFront(front: CombinationRef[], row: string[]): boolean {
  return front.some((f) => sameCombination(f, row));
}

export function renderResults(
  api: ApiClient,
  jobId: string,
  result: ResultDocument,
  reportCsv: string,
): HTMLElement {
  const box = document.createElement("div");
  box.className = "results";

  const heading = document.createElement("h2");
  const b = result.best;
  heading.textContent = `Best combination: ${b.scaler} / ${b.model} / ${b.method}`;
  box.appendChild(heading);

  box.appendChild(renderChart(result));
  box.appendChild(renderTable(result, reportCsv));

  if (result.flags.length > 0) {
    const flags = document.createElement("ul");
    flags.className = "flags";
    for (const flag of result.flags) {
      const item = document.createElement("li");
      item.textContent = flag;
      flags.appendChild(item);
    }
    box.appendChild(flags);
  }

  const downloads = document.createElement("div");
  downloads.className = "downloads";
  const report = document.createElement("a");
  report.href = api.reportUrl(jobId);
  report.download = "report.csv";
  report.textContent = "Download report CSV";
  const model = document.createElement("a");
  model.href = api.modelUrl(jobId);
  model.download = "model.fbm";
  model.textContent = "Download trained model";
  downloads.appendChild(report);
  downloads.appendChild(model);
  box.appendChild(downloads);
  return box;
}

function renderChart(result: ResultDocument): HTMLElement {
  const chart = document.createElement("div");
  chart.className = "chart";
  for (const row of result.rows) {
    const group = document.createElement("div");
    group.className = "chart-group";
    group.dataset.combination = `${row.scaler}/${row.model}/${row.method}`;
    const bars = document.createElement("div");
    bars.className = "chart-bars";
    for (const metric of result.metrics) {
      const cell = row.cells[metric];
      const bar = document.createElement("div");
      bar.className = "bar";
      bar.dataset.metric = metric;
      if (row.failed || cell.goodness === null) {
        bar.classList.add("bar-missing");
        bar.title = row.failed
          ? `combination failed: ${row.failure ?? "unknown error"}`
          : `${metric} was undefined on this data`;
      } else {
        bar.style.height = `${Math.round(cell.goodness * 100)}%`;
        bar.title = `${metric}: goodness ${cell.goodness.toFixed(3)}`;
      }
      bars.appendChild(bar);
    }
    const caption = document.createElement("div");
    caption.className = "chart-caption";
    caption.textContent = `${row.model} + ${row.method}` +
      (row.scaler === "none" ? "" : ` (${row.scaler})`);
    group.appendChild(bars);
    group.appendChild(caption);
    chart.appendChild(group);
  }
  return chart;
}

function renderTable(result: ResultDocument, reportCsv: string): HTMLElement {
  const { header, rows } = parseReportCsv(reportCsv);
  const table = document.createElement("table");
  table.className = "report-table";
  const thead = document.createElement("thead");
  const headRow = document.createElement("tr");
  header.forEach((name, column) => {
    const th = document.createElement("th");
    th.textContent = name;
    th.tabIndex = 0;
    th.addEventListener("click", () => sortBy(column));
    headRow.appendChild(th);
  });
  const badgeTh = document.createElement("th");
  badgeTh.textContent = "";
  headRow.appendChild(badgeTh);
  thead.appendChild(headRow);
  table.appendChild(thead);

  const tbody = document.createElement("tbody");
  table.appendChild(tbody);
  let current = rows.slice();
  let ascending = false;
  let sortColumn = -1;

  const paint = () => {
    tbody.textContent = "";
    for (const row of current) {
      const tr = document.createElement("tr");
      if (sameCombination(result.best, row)) tr.classList.add("best");
      for (const cell of row) {
        const td = document.createElement("td");
        td.textContent = cell; // character-for-character from the CSV
        if (cell === "NA") {
          td.classList.add("na");
          td.title = "undefined on this data";
        }
        tr.appendChild(td);
      }
      const badge = document.createElement("td");
      if (result.front.length > 0 && inFront(result.front, row)) {
        badge.textContent = "pareto";
        badge.className = "badge";
      }
      tr.appendChild(badge);
      tbody.appendChild(tr);
    }
  };

  const sortBy = (column: number) => {
    ascending = sortColumn === column ? !ascending : false;
    sortColumn = column;
    current = current.slice().sort((a, b) => {
      const [x, y] = [a[column], b[column]];
      const nx = Number(x);
      const ny = Number(y);
      let order: number;
      if (x === "NA" || y === "NA") order = x === y ? 0 : x === "NA" ? 1 : -1;
      else if (!Number.isNaN(nx) && !Number.isNaN(ny)) order = ny - nx;
      else order = x.localeCompare(y);
      return ascending ? -order : order;
    });
    paint();
  };

  paint();
  return table;
}
