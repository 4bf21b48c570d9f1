/** Page bootstrap: wires the controller to the document. */

import { Client } from "./api.js";
import { App } from "./app.js";
import { renderGallery } from "./gallery.js";
import type { AppState } from "./app.js";

function el<T extends HTMLElement>(doc: Document, id: string): T {
  const node = doc.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function mount(doc: Document, app: App): void {
  const galleryHost = el<HTMLDivElement>(doc, "gallery");
  const ticker = el<HTMLUListElement>(doc, "job-ticker");
  const pinList = el<HTMLUListElement>(doc, "pin-list");
  const reportPanel = el<HTMLDivElement>(doc, "report");
  const errorBar = el<HTMLDivElement>(doc, "error-bar");
  const datasetInfo = el<HTMLSpanElement>(doc, "dataset-info");

  const render = (state: AppState) => {
    datasetInfo.textContent = state.dataset
      ? `${state.dataset.features.length} points, ` +
        `${state.dataset.feature_names.length} features` +
        (state.dataset.ground_truth ? ", ground truth available" : "")
      : "no dataset";

    errorBar.textContent = state.error ?? "";
    errorBar.hidden = !state.error;

    ticker.replaceChildren(
      ...state.jobs.slice(-6).map((job) => {
        const li = doc.createElement("li");
        li.className = `job ${job.state}`;
        li.textContent =
          `${job.kind} ${job.state}` +
          (job.state === "running" ? ` ${(job.progress * 100).toFixed(0)}%` : "") +
          (job.error ? ` — ${job.error}` : "");
        return li;
      }),
    );

    pinList.replaceChildren(
      ...state.pins.map((pin) => {
        const li = doc.createElement("li");
        li.textContent = `column ${pin.column_index}` + (pin.label ? ` — ${pin.label}` : "");
        return li;
      }),
    );

    if (state.dataset) {
      galleryHost.replaceChildren(
        renderGallery(doc, state.gallery, state.dataset, {
          onPin: (member, column) => {
            void app.pinFromMember(member.rank, column).then((ok) => {
              if (ok) void app.complete();
            });
          },
        }),
      );
    }

    reportPanel.replaceChildren();
    if (state.report) {
      const head = doc.createElement("h3");
      head.textContent = `Coverage (${state.report.mode})`;
      const body = doc.createElement("p");
      body.textContent =
        `found ${state.report.found}` +
        (state.report.min_M !== null ? `, min M = ${state.report.min_M}` : "");
      reportPanel.append(head, body);
    }
  };

  app.subscribe(render);
  render(app.state);

  el<HTMLButtonElement>(doc, "btn-hexagon").addEventListener("click", () => {
    void app
      .generateAndOpen("hexagon")
      .then(() => app.sampleProposals({ n_concepts: 3 }));
  });
  el<HTMLButtonElement>(doc, "btn-vitals").addEventListener("click", () => {
    void app
      .generateAndOpen("vitals")
      .then(() => app.sampleProposals({ n_concepts: 5 }));
  });
  el<HTMLButtonElement>(doc, "btn-resample").addEventListener("click", () => {
    void app.sampleProposals({
      n_concepts: app.state.dataset?.ground_truth?.concepts.length ?? 3,
    });
  });
}

declare global {
  interface Window {
    conceptscopeApp?: App;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  const app = new App(new Client(""));
  window.conceptscopeApp = app;
  document.addEventListener("DOMContentLoaded", () => mount(document, app));
}
