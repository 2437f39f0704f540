// Review session state: a queue of unreviewed triplets plus a verdict
// tally. Reviews advance the queue optimistically and roll back (item
// returns to the queue head) when the POST fails, so no verdict is ever
// dropped silently.

import { ApiClient, Triplet } from "./api";

export interface Thresholds {
  lo: number;
  hi: number;
  accept: number;
}

export interface Tally {
  accepted: number;
  rejected: number;
  pending: number;
}

export type ReviewOutcome =
  | { ok: true; triplet: Triplet }
  | { ok: false; triplet: Triplet; requeued: true; error: string };

export class ReviewSession {
  queue: Triplet[] = [];
  accepted = 0;
  rejected = 0;

  constructor(
    private api: ApiClient,
    public origin: number,
    public thresholds: Thresholds,
    public annotator: string,
  ) {}

  static async load(
    api: ApiClient,
    origin: number,
    thresholds: Thresholds,
    annotator: string,
  ): Promise<ReviewSession> {
    const session = new ReviewSession(api, origin, thresholds, annotator);
    const triplets = await api.triplets(origin);
    for (const t of triplets) {
      if (t.verdict === "accept") session.accepted += 1;
      else if (t.verdict === "reject") session.rejected += 1;
      else session.queue.push(t);
    }
    return session;
  }

  get tally(): Tally {
    return { accepted: this.accepted, rejected: this.rejected, pending: this.queue.length };
  }

  current(): Triplet | undefined {
    return this.queue[0];
  }

  async review(verdict: "accept" | "reject"): Promise<ReviewOutcome> {
    const triplet = this.queue.shift();
    if (!triplet) throw new Error("nothing to review");
    try {
      await this.api.postVerdict({
        origin: triplet.origin_id,
        variant: triplet.variant_id,
        influencer: triplet.influencer_id,
        verdict,
        annotator: this.annotator,
        context: { ...this.thresholds },
      });
    } catch (err) {
      this.queue.unshift(triplet); // never drop a verdict: back to the head
      return { ok: false, triplet, requeued: true, error: String(err) };
    }
    if (verdict === "accept") this.accepted += 1;
    else this.rejected += 1;
    return { ok: true, triplet };
  }
}
