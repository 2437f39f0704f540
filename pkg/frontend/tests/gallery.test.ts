import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { renderGallery, renderedIds, sampleBand, validBand } from "../src/gallery";
import { MockService, fixture } from "./mock_service";

describe("band gallery against the mocked service", () => {
  let service: MockService;
  let api: ApiClient;
  let root: HTMLElement;

  beforeEach(() => {
    service = new MockService(fixture());
    api = new ApiClient("", service.fetch);
    root = document.createElement("div");
    document.body.replaceChildren(root);
  });

  it("slider re-query renders exactly the API ids", async () => {
    const hits = await api.searchVariants(1, 0.85, 0.91);
    renderGallery(root, sampleBand(hits, 16));
    expect(renderedIds(root)).toEqual(hits.map((h) => h.id));
    expect(renderedIds(root)).toEqual([11, 12, 13, 14, 15]);

    // narrow the band: the gallery must track the new response exactly
    const narrower = await api.searchVariants(1, 0.87, 0.91);
    renderGallery(root, sampleBand(narrower, 16));
    expect(renderedIds(root)).toEqual([11, 12, 13]);
  });

  it("shows similarity badges straight from the response", async () => {
    const hits = await api.searchVariants(1, 0.85, 0.91);
    renderGallery(root, sampleBand(hits, 16));
    const badges = Array.from(root.querySelectorAll(".badge")).map(
      (b) => b.textContent,
    );
    expect(badges[0]).toBe("#11 · 0.9050");
  });

  it("notes when fewer candidates exist than requested", async () => {
    const hits = await api.searchVariants(1, 0.85, 0.91);
    const model = sampleBand(hits, 16);
    expect(model.shown).toHaveLength(5);
    expect(model.note).toMatch(/only 5 candidates/);
    renderGallery(root, model);
    expect(root.querySelector(".gallery-note")?.textContent).toMatch(/only 5/);
  });

  it("samples deterministically when over-full", () => {
    const hits = Array.from({ length: 40 }, (_, i) => ({ id: i, score: 1 - i / 100 }));
    const a = sampleBand(hits, 8);
    const b = sampleBand(hits, 8);
    expect(a.shown).toEqual(b.shown);
    expect(a.shown).toHaveLength(8);
  });

  it("blocks inverted bounds client-side", () => {
    expect(validBand(0.9, 0.85)).toBe(false);
    expect(validBand(0.85, 0.91)).toBe(true);
    expect(validBand(-1.5, 0.5)).toBe(false);
  });
});
