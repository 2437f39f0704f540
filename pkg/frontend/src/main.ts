// Page wiring for the moderator console: band tuning with live samples,
// triplet review with optimistic verdicts, and timeline overlays.

import { ApiClient, TimelineSeries } from "./api";
import { renderGallery, sampleBand, validBand } from "./gallery";
import { ReviewSession } from "./session";
import { renderTimeline } from "./timeline";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export class App {
  private session: ReviewSession | null = null;
  private overlays: TimelineSeries[] = [];

  constructor(private api: ApiClient) {}

  bind(): void {
    for (const id of ["lo", "hi", "sample-n"]) {
      el<HTMLInputElement>(id).addEventListener("input", () => void this.refreshBand());
    }
    el<HTMLButtonElement>("load-session").addEventListener("click", () => void this.loadSession());
    el<HTMLButtonElement>("accept").addEventListener("click", () => void this.review("accept"));
    el<HTMLButtonElement>("reject").addEventListener("click", () => void this.review("reject"));
    el<HTMLButtonElement>("add-timeline").addEventListener("click", () => void this.addTimeline());
  }

  private bounds(): { lo: number; hi: number } {
    return {
      lo: Number(el<HTMLInputElement>("lo").value),
      hi: Number(el<HTMLInputElement>("hi").value),
    };
  }

  async refreshBand(): Promise<void> {
    const origin = Number(el<HTMLInputElement>("origin").value);
    const { lo, hi } = this.bounds();
    const banner = el("banner");
    if (!validBand(lo, hi)) {
      banner.textContent = "lower bound must stay below upper bound";
      banner.classList.add("error");
      return; // block the query, keep the current gallery
    }
    banner.classList.remove("error");
    banner.textContent = `band [${lo.toFixed(2)}, ${hi.toFixed(2)})`;
    try {
      const hits = await this.api.searchVariants(origin, lo, hi);
      const n = Number(el<HTMLInputElement>("sample-n").value) || 16;
      renderGallery(el("gallery"), sampleBand(hits, n));
    } catch (err) {
      banner.textContent = `service unreachable, retry: ${String(err)}`;
      banner.classList.add("error"); // previous gallery stays intact
    }
  }

  async loadSession(): Promise<void> {
    const origin = Number(el<HTMLInputElement>("origin").value);
    const { lo, hi } = this.bounds();
    const accept = Number(el<HTMLInputElement>("accept-threshold").value);
    this.session = await ReviewSession.load(this.api, origin, { lo, hi, accept },
      el<HTMLInputElement>("annotator").value || "anonymous");
    this.renderReview("");
  }

  async review(verdict: "accept" | "reject"): Promise<void> {
    if (!this.session || !this.session.current()) return;
    const outcome = await this.session.review(verdict);
    this.renderReview(outcome.ok ? "" : `verdict requeued: ${outcome.error}`);
  }

  private renderReview(notice: string): void {
    const session = this.session;
    if (!session) return;
    const tally = session.tally;
    el("tally").textContent =
      `accepted ${tally.accepted} · rejected ${tally.rejected} · pending ${tally.pending}`;
    const note = el("review-notice");
    note.textContent = notice;
    note.classList.toggle("error", notice !== "");
    const current = session.current();
    const panel = el("triplet");
    panel.replaceChildren();
    if (!current) {
      panel.textContent = "queue empty";
      return;
    }
    for (const [label, id] of [
      ["origin", current.origin_id],
      ["variant", current.variant_id],
      ["influencer", current.influencer_id],
    ] as const) {
      const card = document.createElement("figure");
      card.className = `card ${label}`;
      const img = document.createElement("img");
      img.src = `/media/${id}`;
      img.alt = `${label} ${id}`;
      const cap = document.createElement("figcaption");
      cap.textContent = `${label} #${id}`;
      card.append(img, cap);
      panel.append(card);
    }
    el("triplet-sims").textContent =
      `cos(origin, variant) ${current.sim_origin_variant.toFixed(4)} · ` +
      `cos(origin+influencer, variant) ${current.sim_sum_variant.toFixed(4)}`;
  }

  async addTimeline(): Promise<void> {
    const group = Number(el<HTMLInputElement>("timeline-group").value);
    try {
      const series = await this.api.timeline(group);
      this.overlays = [...this.overlays.filter((s) => s.group !== group), series];
      renderTimeline(el("timeline"), this.overlays);
    } catch (err) {
      el("timeline").textContent = `no series for group ${group}: ${String(err)}`;
    }
  }
}

if (typeof document !== "undefined" && document.getElementById("gallery")) {
  const app = new App(new ApiClient("/api"));
  app.bind();
  void app.refreshBand();
}
