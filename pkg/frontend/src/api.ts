import type { FeedbackResponse, ResultResponse } from "./types.js";

export interface HttpResponse {
  status: number;
  json(): Promise<unknown>;
}

/** Minimal transport so tests can swap in a mocked service. */
export type Transport = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<HttpResponse>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function parseOrThrow<T>(response: HttpResponse): Promise<T> {
  const body = (await response.json()) as Record<string, unknown>;
  if (response.status !== 200) {
    const detail = typeof body?.error === "string" ? body.error : `HTTP ${response.status}`;
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly transport: Transport = (url, init) => fetch(url, init),
  ) {}

  async getResult(seriesId: string, alpha?: number): Promise<ResultResponse> {
    const query = alpha === undefined ? "" : `?alpha=${encodeURIComponent(alpha)}`;
    const url = `${this.baseUrl}/series/${encodeURIComponent(seriesId)}/result${query}`;
    return parseOrThrow<ResultResponse>(await this.transport(url));
  }

  async postFeedback(
    seriesId: string,
    index: number,
    isAnomaly: boolean,
  ): Promise<FeedbackResponse> {
    const url = `${this.baseUrl}/series/${encodeURIComponent(seriesId)}/feedback`;
    return parseOrThrow<FeedbackResponse>(
      await this.transport(url, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ index, is_anomaly: isAnomaly }),
      }),
    );
  }
}

/**
 * Serializes /result reads: every request takes a ticket and only the
 * newest ticket may apply its response, so out-of-order responses from a
 * dragged slider are dropped instead of clobbering fresher renders.
 */
export class SequencedResultFetcher {
  private ticket = 0;

  constructor(
    private readonly client: ApiClient,
    private readonly onResult: (result: ResultResponse) => void,
    private readonly onError: (error: Error) => void = () => undefined,
  ) {}

  async fetch(seriesId: string, alpha?: number): Promise<void> {
    const mine = ++this.ticket;
    try {
      const result = await this.client.getResult(seriesId, alpha);
      if (mine === this.ticket) {
        this.onResult(result);
      }
    } catch (error) {
      if (mine === this.ticket) {
        this.onError(error instanceof Error ? error : new Error(String(error)));
      }
    }
  }
}
