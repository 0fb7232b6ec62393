// Browser shell: wires the constraint editor, job polling and the two
// views to the HTTP API. All data shown comes from service payloads.

import { Api } from "./api.js";
import { buildJobBody, defaultConstraints, validateBounds, validateTarget, ConstraintState } from "./constraints.js";
import { RunHistory } from "./history.js";
import { buildParallelCoords, fmt, renderParallelCoords } from "./parallelCoordinates.js";
import { pollJob } from "./poller.js";
import { buildSurfaceModel, renderSurface } from "./responseSurface.js";
import { buildObjectiveTable, sortRows, SortColumn, TableRow } from "./table.js";
import type { DatasetInfo, ParetoPayload } from "./types.js";
import { describeTarget } from "./types.js";

const api = new Api((window as any).MOCO_API_URL ?? "http://127.0.0.1:8080");
const history = new RunHistory();

const el = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

let datasets: DatasetInfo[] = [];
let state: ConstraintState = defaultConstraints();
let running = false;
let showAllAxes = false;
let currentPayload: ParetoPayload | null = null;
let tableRows: TableRow[] = [];
let tableSort: { column: SortColumn; ascending: boolean } = { column: "o1", ascending: true };

function selectedDataset(): DatasetInfo | undefined {
  return datasets.find((d) => d.id === el<HTMLSelectElement>("dataset").value);
}

function status(text: string, isError = false) {
  const node = el<HTMLDivElement>("status");
  node.textContent = text;
  node.className = isError ? "status error" : "status";
}

async function loadDatasets() {
  datasets = await api.datasets();
  const select = el<HTMLSelectElement>("dataset");
  select.innerHTML = datasets
    .map((d) => `<option value="${d.id}">${d.id} (${d.rows} rows)</option>`)
    .join("");
  select.onchange = () => {
    state = defaultConstraints();
    renderEditor();
    void previewRow();
  };
  renderEditor();
  await previewRow();
}

async function previewRow() {
  const ds = selectedDataset();
  if (!ds) return;
  const row = Number(el<HTMLInputElement>("row").value);
  try {
    const info = await api.row(ds.id, row);
    const cells = Object.entries(info.values)
      .map(([k, v]) => `<span class="chip"><b>${k}</b> ${fmt(v)}</span>`)
      .join(" ");
    el<HTMLDivElement>("row-preview").innerHTML =
      `${cells} <span class="chip pred">prediction ${fmt(info.prediction)}</span>`;
  } catch (err) {
    el<HTMLDivElement>("row-preview").textContent = String(err);
  }
}

function renderEditor() {
  const ds = selectedDataset();
  if (!ds) return;
  const rowsHtml = ds.features
    .map((f) => {
      const frozen = state.freeze.includes(f.name) ? "checked" : "";
      const numeric = f.kind === "numerical" || f.kind === "integer";
      const bounds = state.bounds[f.name];
      const boundsHtml = numeric
        ? `<input class="bound" data-feature="${f.name}" data-side="lo" placeholder="${f.observed_range?.[0] ?? ""}"
             value="${bounds ? bounds[0] : ""}" size="6">
           <input class="bound" data-feature="${f.name}" data-side="hi" placeholder="${f.observed_range?.[1] ?? ""}"
             value="${bounds ? bounds[1] : ""}" size="6">`
        : `<span class="muted">${(f.levels ?? []).join(", ")}</span>`;
      return `<tr>
        <td>${f.name}</td><td class="muted">${f.kind}</td>
        <td><label><input type="checkbox" class="freeze" data-feature="${f.name}" ${frozen}> freeze</label></td>
        <td>${boundsHtml}</td>
      </tr>`;
    })
    .join("");
  el<HTMLTableSectionElement>("editor-body").innerHTML = rowsHtml;
  for (const box of document.querySelectorAll<HTMLInputElement>("input.freeze")) {
    box.onchange = () => {
      const name = box.dataset.feature!;
      state.freeze = box.checked ? [...state.freeze, name] : state.freeze.filter((n) => n !== name);
    };
  }
  for (const input of document.querySelectorAll<HTMLInputElement>("input.bound")) {
    input.onchange = () => updateBounds(input.dataset.feature!);
  }
}

function updateBounds(name: string) {
  const ds = selectedDataset();
  if (!ds) return;
  const feature = ds.features.find((f) => f.name === name)!;
  const lo = document.querySelector<HTMLInputElement>(`input.bound[data-feature="${name}"][data-side="lo"]`)!;
  const hi = document.querySelector<HTMLInputElement>(`input.bound[data-feature="${name}"][data-side="hi"]`)!;
  if (lo.value.trim() === "" && hi.value.trim() === "") {
    delete state.bounds[name];
    status("");
    return;
  }
  const lower = Number(lo.value);
  const upper = Number(hi.value);
  const problem = validateBounds(feature, lower, upper);
  if (problem) {
    status(`${name}: ${problem}`, true);
    return;
  }
  state.bounds[name] = [lower, upper];
  status("");
}

function readRunSettings(): string | null {
  state.target = el<HTMLInputElement>("target").value.trim() || "auto";
  const targetProblem = validateTarget(state.target);
  if (targetProblem) return targetProblem;
  state.seed = Number(el<HTMLInputElement>("seed").value) || 0;
  state.generations = Number(el<HTMLInputElement>("generations").value) || 175;
  state.pop = Number(el<HTMLInputElement>("pop").value) || 20;
  return null;
}

async function run() {
  if (running) return;
  const ds = selectedDataset();
  if (!ds) return;
  const problem = readRunSettings();
  if (problem) {
    status(problem, true);
    return;
  }
  const row = Number(el<HTMLInputElement>("row").value);
  const body = buildJobBody(ds.id, row, state);
  running = true;
  el<HTMLButtonElement>("run").disabled = true;
  try {
    const submitted = await api.submitJob(body);
    status(`job ${submitted.job} queued`);
    await pollJob(api, submitted.job, {
      intervalMs: 1000,
      onTick: (s) => status(`job ${submitted.job}: ${s.state}`),
    });
    const payload = await api.pareto(submitted.job);
    history.add({ jobId: submitted.job, body, payload });
    renderHistory();
    await showRun(submitted.job);
    status(`job ${submitted.job} done`);
  } catch (err) {
    status(String(err), true);
  } finally {
    running = false;
    el<HTMLButtonElement>("run").disabled = false;
  }
}

function renderHistory() {
  const items = history
    .list()
    .map(
      (r) =>
        `<li><a href="#" data-job="${r.jobId}">${r.jobId}</a>
         <span class="muted">target ${r.body.target}, seed ${r.body.config.seed},
         frozen [${r.body.freeze.join(", ")}]</span></li>`
    )
    .join("");
  el<HTMLUListElement>("history").innerHTML = items;
  for (const link of document.querySelectorAll<HTMLAnchorElement>("#history a")) {
    link.onclick = (ev) => {
      ev.preventDefault();
      void showRun(link.dataset.job!);
    };
  }
}

function numericFeatures(payload: ParetoPayload): string[] {
  return payload.features.filter((f) => f.kind === "numerical" || f.kind === "integer").map((f) => f.name);
}

async function showRun(jobId: string) {
  const record = history.get(jobId);
  if (!record) return;
  currentPayload = record.payload;
  renderParetoViews();
  const numeric = numericFeatures(record.payload);
  const aSel = el<HTMLSelectElement>("surface-a");
  const bSel = el<HTMLSelectElement>("surface-b");
  if (!aSel.options.length || aSel.dataset.job !== jobId) {
    aSel.innerHTML = numeric.map((n) => `<option>${n}</option>`).join("");
    bSel.innerHTML = numeric.map((n) => `<option>${n}</option>`).join("");
    aSel.selectedIndex = 0;
    bSel.selectedIndex = Math.min(1, numeric.length - 1);
    aSel.dataset.job = jobId;
  }
  aSel.onchange = bSel.onchange = () => void refreshSurface(jobId);
  await refreshSurface(jobId);
}

async function refreshSurface(jobId: string) {
  const a = el<HTMLSelectElement>("surface-a").value;
  const b = el<HTMLSelectElement>("surface-b").value;
  if (!a || !b) return;
  if (a === b) {
    el<HTMLDivElement>("surface").innerHTML = `<p class="muted">Pick two different numeric features.</p>`;
    return;
  }
  try {
    const surface = await api.surface({ job: jobId, feature_a: a, feature_b: b, resolution: 60 });
    el<HTMLDivElement>("surface").innerHTML = renderSurface(buildSurfaceModel(surface));
  } catch (err) {
    el<HTMLDivElement>("surface").innerHTML = `<p class="error">${String(err)}</p>`;
  }
}

function renderParetoViews() {
  if (!currentPayload) return;
  const payload = currentPayload;
  el<HTMLDivElement>("target-label").textContent =
    `target ${describeTarget(payload.target)}, prediction of x*: ${fmt(payload.x_star.prediction)}`;
  const model = buildParallelCoords(payload, { showAll: showAllAxes });
  el<HTMLDivElement>("parcoords").innerHTML = renderParallelCoords(model);
  for (const line of document.querySelectorAll<SVGPolylineElement>("#parcoords polyline.pc-line")) {
    line.addEventListener("mouseenter", () => {
      const idx = Number(line.dataset.index);
      const hovered = model.lines[idx];
      line.classList.add("hover");
      el<HTMLDivElement>("hover-info").textContent = hovered.objectives
        ? `${hovered.label}: prediction ${fmt(hovered.prediction)}, o1 ${fmt(hovered.objectives.o1)}, ` +
          `o2 ${fmt(hovered.objectives.o2)}, o3 ${hovered.objectives.o3}, o4 ${fmt(hovered.objectives.o4)}`
        : `${hovered.label}: prediction ${fmt(hovered.prediction)}`;
    });
    line.addEventListener("mouseleave", () => line.classList.remove("hover"));
  }
  tableRows = sortRows(buildObjectiveTable(payload), tableSort.column, tableSort.ascending);
  renderTable();
}

function renderTable() {
  const head = (["prediction", "o1", "o2", "o3", "o4", "generation"] as SortColumn[])
    .map((c) => `<th data-col="${c}">${c}${tableSort.column === c ? (tableSort.ascending ? " ▲" : " ▼") : ""}</th>`)
    .join("");
  const body = tableRows
    .map(
      (r) =>
        `<tr><td>${r.label}</td><td>${fmt(r.prediction)}</td><td>${fmt(r.o1)}</td>` +
        `<td>${fmt(r.o2)}</td><td>${r.o3}</td><td>${fmt(r.o4)}</td><td>${r.generation}</td></tr>`
    )
    .join("");
  el<HTMLTableElement>("objective-table").innerHTML =
    `<thead><tr><th>id</th>${head}</tr></thead><tbody>${body}</tbody>`;
  for (const th of document.querySelectorAll<HTMLTableCellElement>("#objective-table th[data-col]")) {
    th.onclick = () => {
      const column = th.dataset.col as SortColumn;
      tableSort = {
        column,
        ascending: tableSort.column === column ? !tableSort.ascending : true,
      };
      tableRows = sortRows(tableRows, tableSort.column, tableSort.ascending);
      renderTable();
    };
  }
}

export function start() {
  el<HTMLButtonElement>("run").onclick = () => void run();
  el<HTMLInputElement>("row").onchange = () => void previewRow();
  el<HTMLInputElement>("show-all").onchange = (ev) => {
    showAllAxes = (ev.target as HTMLInputElement).checked;
    renderParetoViews();
  };
  loadDatasets().catch((err) => status(`cannot reach the service: ${err}`, true));
}

if (typeof document !== "undefined" && document.getElementById("run")) {
  start();
}
