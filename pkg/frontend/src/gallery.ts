// Band-sample gallery: the tiles are exactly what the API returned for
// the current slider bounds, with similarity badges.

import { SearchHit } from "./api";

export interface GalleryModel {
  requested: number;
  shown: SearchHit[];
  note: string | null;
}

export function validBand(lo: number, hi: number): boolean {
  return -1 <= lo && lo < hi && hi <= 1;
}

// Deterministic sample: evenly spaced over the (score-ordered) response
// when it holds more candidates than requested; everything otherwise.
export function sampleBand(hits: SearchHit[], n: number): GalleryModel {
  if (hits.length <= n) {
    const note = hits.length < n ? `only ${hits.length} candidates in band` : null;
    return { requested: n, shown: hits.slice(), note };
  }
  const shown: SearchHit[] = [];
  for (let i = 0; i < n; i++) {
    shown.push(hits[Math.floor((i * hits.length) / n)]);
  }
  return { requested: n, shown, note: null };
}

export function renderGallery(root: HTMLElement, model: GalleryModel): void {
  root.replaceChildren();
  for (const hit of model.shown) {
    const tile = document.createElement("figure");
    tile.className = "tile";
    tile.dataset.id = String(hit.id);
    const img = document.createElement("img");
    img.src = `/media/${hit.id}`;
    img.alt = `candidate ${hit.id}`;
    const badge = document.createElement("figcaption");
    badge.className = "badge";
    badge.textContent = `#${hit.id} · ${hit.score.toFixed(4)}`;
    tile.append(img, badge);
    root.append(tile);
  }
  if (model.note) {
    const note = document.createElement("p");
    note.className = "gallery-note";
    note.textContent = model.note;
    root.append(note);
  }
}

export function renderedIds(root: HTMLElement): number[] {
  return Array.from(root.querySelectorAll<HTMLElement>(".tile")).map((el) =>
    Number(el.dataset.id),
  );
}
