// In-memory mock of the review service speaking the documented HTTP API
// through the fetch interface. Supports failure injection so offline and
// error paths are testable.

import { SearchHit, TimelineBin, Triplet } from "../src/api";

export interface MockData {
  hits: SearchHit[]; // corpus of candidates with cosine to the origin
  triplets: Triplet[];
  timeline: Record<number, TimelineBin[]>;
}

export class MockService {
  verdicts = new Map<string, string>();
  failNextVerdicts = 0; // -1 = network error, >0 = count of 500s
  offline = false;
  requests: string[] = [];

  constructor(private data: MockData) {}

  fetch = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const url = new URL(input, "http://mock");
    const path = url.pathname;
    this.requests.push(`${method} ${path}`);
    if (this.offline) throw new TypeError("network unreachable");

    if (method === "POST" && path === "/variants/search") {
      const body = JSON.parse(String(init?.body));
      if (!(body.lo < body.hi)) {
        return json({ detail: "invalid band" }, 422);
      }
      const hits = this.data.hits
        .filter((h) => h.score >= body.lo && h.score < body.hi)
        .sort((a, b) => b.score - a.score || a.id - b.id);
      return json(hits);
    }

    const tripletMatch = path.match(/^\/variants\/(\d+)\/triplets$/);
    if (method === "GET" && tripletMatch) {
      const origin = Number(tripletMatch[1]);
      const rows = this.data.triplets
        .filter((t) => t.origin_id === origin)
        .map((t) => ({ ...t, verdict: this.verdicts.get(keyOf(t)) ?? null }));
      return json(rows);
    }

    if (method === "POST" && path === "/verdicts") {
      if (this.failNextVerdicts === -1) {
        this.failNextVerdicts = 0;
        throw new TypeError("network unreachable");
      }
      if (this.failNextVerdicts > 0) {
        this.failNextVerdicts -= 1;
        return json({ detail: "boom" }, 500);
      }
      const body = JSON.parse(String(init?.body));
      const key = `triplet:${body.origin}:${body.variant}:${body.influencer}`;
      this.verdicts.set(key, body.verdict);
      return json({ item_key: key, position: this.verdicts.size - 1 });
    }

    if (method === "GET" && path === "/timeline") {
      const group = Number(url.searchParams.get("group"));
      const bins = this.data.timeline[group];
      if (!bins) return json({ detail: "unknown group" }, 404);
      return json({ group, bins });
    }

    return json({ detail: `no route ${method} ${path}` }, 404);
  };
}

function keyOf(t: Triplet): string {
  return `triplet:${t.origin_id}:${t.variant_id}:${t.influencer_id}`;
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export function fixture(): MockData {
  const hits: SearchHit[] = [
    { id: 11, score: 0.905 },
    { id: 12, score: 0.893 },
    { id: 13, score: 0.874 },
    { id: 14, score: 0.861 },
    { id: 15, score: 0.852 },
    { id: 16, score: 0.793 }, // below the default band
  ];
  const triplets: Triplet[] = [11, 12, 13].map((variant, i) => ({
    origin_id: 1,
    variant_id: variant,
    influencer_id: 100 + i,
    sim_origin_variant: 0.88 - i * 0.01,
    sim_sum_variant: 0.96 - i * 0.005,
    rank: 1,
    verdict: null,
  }));
  return {
    hits,
    triplets,
    timeline: {
      11: [
        { week_start: "2016-07-04", count: 3 },
        { week_start: "2016-07-11", count: 0 },
        { week_start: "2016-07-18", count: 5 },
      ],
      12: [
        { week_start: "2016-07-04", count: 1 },
        { week_start: "2016-07-11", count: 2 },
        { week_start: "2016-07-18", count: 0 },
      ],
    },
  };
}
