/** Proposal gallery: one card per selected proposal. */

import { renderScatter, renderWeightBars } from "./scatter.js";
import type { DatasetDoc, Gallery, GalleryMember } from "./types.js";

export interface GalleryCallbacks {
  onPin?: (member: GalleryMember, column: number) => void;
}

function f1Badge(doc: Document, member: GalleryMember, column: number): HTMLElement {
  const badge = doc.createElement("span");
  const hit = member.concept_f1[column];
  if (!hit) {
    badge.className = "f1 none";
    badge.textContent = "no match";
  } else {
    badge.className = hit.matched ? "f1 matched" : "f1 weak";
    badge.textContent =
      `c${hit.concept}${hit.negated ? "¬" : ""} f1=${hit.f1.toFixed(2)}`;
  }
  return badge;
}

export function renderCard(
  doc: Document,
  member: GalleryMember,
  dataset: DatasetDoc,
  pinnedColumn: number | null,
  cb: GalleryCallbacks,
): HTMLElement {
  const card = doc.createElement("div");
  card.className = "card";
  card.dataset.rank = String(member.rank);

  const head = doc.createElement("div");
  head.className = "card-head";
  head.textContent = `#${member.rank + 1}  accuracy ${member.accuracy.toFixed(3)}`;
  card.appendChild(head);

  const is2d = dataset.feature_names.length === 2 && member.boundaries !== null;
  if (is2d) {
    card.appendChild(
      renderScatter(doc, dataset.features, dataset.labels, member.boundaries, {
        maxPoints: 400,
      }),
    );
  } else {
    member.weight_profiles.forEach((w) => {
      card.appendChild(renderWeightBars(doc, w, dataset.feature_names));
    });
  }

  const concepts = doc.createElement("div");
  concepts.className = "card-concepts";
  member.concept_f1.forEach((_, k) => {
    const row = doc.createElement("div");
    row.className = "concept-row";
    const label = doc.createElement("span");
    label.textContent = member.concept_f1.length === 1 ? "concept" : `col ${k}`;
    row.appendChild(label);
    const rate = doc.createElement("span");
    rate.className = "firing";
    rate.textContent = `fires ${(member.firing_rates[k] * 100).toFixed(0)}%`;
    row.appendChild(rate);
    row.appendChild(f1Badge(doc, member, k));
    if (pinnedColumn !== null && k === pinnedColumn) {
      const mark = doc.createElement("span");
      mark.className = "pinned-mark";
      mark.textContent = "pinned";
      row.appendChild(mark);
    } else if (cb.onPin) {
      const btn = doc.createElement("button");
      btn.className = "pin-btn";
      btn.textContent = "pin";
      btn.addEventListener("click", () => cb.onPin!(member, k));
      row.appendChild(btn);
    }
    concepts.appendChild(row);
  });
  card.appendChild(concepts);
  return card;
}

export function renderGallery(
  doc: Document,
  gallery: Gallery | null,
  dataset: DatasetDoc,
  cb: GalleryCallbacks = {},
): HTMLElement {
  const root = doc.createElement("div");
  root.className = "gallery";
  if (!gallery || gallery.members.length === 0) {
    const empty = doc.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No proposals yet — run sampling or relax the accuracy filter.";
    root.appendChild(empty);
    return root;
  }
  for (const member of gallery.members) {
    root.appendChild(renderCard(doc, member, dataset, gallery.pinned_column, cb));
  }
  return root;
}
