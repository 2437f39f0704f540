// Typed client for the review service HTTP API. The UI performs no
// analysis of its own: every number it shows comes from these calls.

export interface SearchHit {
  id: number;
  score: number;
}

export interface Triplet {
  origin_id: number;
  variant_id: number;
  influencer_id: number;
  sim_origin_variant: number;
  sim_sum_variant: number;
  rank: number;
  verdict?: string | null;
}

export interface TimelineBin {
  week_start: string;
  count: number;
}

export interface TimelineSeries {
  group: number;
  bins: TimelineBin[];
}

export interface VerdictRequest {
  origin: number;
  variant: number;
  influencer: number | null;
  verdict: "accept" | "reject";
  annotator: string;
  context: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      throw new ApiError(resp.status, `${init?.method ?? "GET"} ${path}: ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  searchVariants(origin: number, lo: number, hi: number): Promise<SearchHit[]> {
    return this.request("/variants/search", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ origin, lo, hi }),
    });
  }

  triplets(origin: number): Promise<Triplet[]> {
    return this.request(`/variants/${origin}/triplets`);
  }

  postVerdict(verdict: VerdictRequest): Promise<{ item_key: string; position: number }> {
    return this.request("/verdicts", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(verdict),
    });
  }

  timeline(group: number): Promise<TimelineSeries> {
    return this.request(`/timeline?group=${group}`);
  }
}
