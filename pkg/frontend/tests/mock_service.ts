import type { Transport } from "../src/api.js";
import type { FeedbackResponse, ResultResponse } from "../src/types.js";

/** Mirror of the service's tolerance multiplier. */
export function factor(alpha: number): number {
  return 2 ** ((50 - alpha) / 10);
}

export interface MockSeries {
  id: string;
  values: number[];
  trend: number[];
  seasonal: number[];
  rawLabels: boolean[];
}

export interface MockOptions {
  /** Responses to feedback posts, consumed in order. */
  feedbackTriggers?: boolean[];
}

export function buildResult(series: MockSeries, alpha: number): ResultResponse {
  const n = series.values.length;
  const meanAbsTrend = series.trend.reduce((acc, g) => acc + Math.abs(g), 0) / n;
  const lower: number[] = [];
  const upper: number[] = [];
  const labels: boolean[] = [];
  const scores: number[] = [];
  for (let i = 0; i < n; i += 1) {
    const mu = 0.5 * Math.abs(series.trend[i]) + 0.5 * meanAbsTrend;
    const delta = factor(alpha) * mu;
    const baseline = series.trend[i] + series.seasonal[i];
    const residual = series.values[i] - baseline;
    lower.push(baseline - delta);
    upper.push(baseline + delta);
    labels.push(series.rawLabels[i] && Math.abs(residual) > delta);
    scores.push(Math.abs(residual));
  }
  return {
    schema_version: 1,
    series_id: series.id,
    alpha,
    choice: { kind: "shesd", param: 0.05, confidence: 0.9, source: "classifier" },
    points: series.values.map((value, i) => ({ timestamp: i * 3600, value })),
    labels,
    scores,
    band: { lower, upper },
  };
}

/** An in-memory stand-in for the detection service. */
export function makeMockService(series: MockSeries, options: MockOptions = {}): Transport {
  const triggers = [...(options.feedbackTriggers ?? [])];
  let feedbackCount = 0;
  return async (url, init) => {
    const method = init?.method ?? "GET";
    const resultMatch = url.match(/\/series\/([^/]+)\/result(?:\?alpha=([\d.]+))?$/);
    if (method === "GET" && resultMatch) {
      if (decodeURIComponent(resultMatch[1]) !== series.id) {
        return { status: 404, json: async () => ({ schema_version: 1, error: "series not found" }) };
      }
      const alpha = resultMatch[2] === undefined ? 50 : Number(resultMatch[2]);
      return { status: 200, json: async () => buildResult(series, alpha) };
    }
    const feedbackMatch = url.match(/\/series\/([^/]+)\/feedback$/);
    if (method === "POST" && feedbackMatch) {
      if (decodeURIComponent(feedbackMatch[1]) !== series.id) {
        return { status: 404, json: async () => ({ schema_version: 1, error: "series not found" }) };
      }
      feedbackCount += 1;
      const body: FeedbackResponse = {
        schema_version: 1,
        series_id: series.id,
        recorded: true,
        false_alert: true,
        false_alert_rate: 0,
        feedback_count: feedbackCount,
        reselection_triggered: triggers.length > 0 ? Boolean(triggers.shift()) : false,
        choice: { kind: "hbos", param: 0.99, confidence: 0.8, source: "classifier" },
      };
      return { status: 200, json: async () => body };
    }
    return { status: 404, json: async () => ({ schema_version: 1, error: "no route" }) };
  };
}

/** Small deterministic PRNG so fixtures stay stable without dependencies. */
export function lcg(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (1664525 * s + 1013904223) >>> 0;
    return s / 2 ** 32;
  };
}

export function spikySeries(id = "demo", n = 96): MockSeries {
  const rand = lcg(7);
  const values: number[] = [];
  const trend: number[] = [];
  const seasonal: number[] = [];
  const rawLabels: boolean[] = [];
  for (let i = 0; i < n; i += 1) {
    trend.push(12);
    seasonal.push(0);
    values.push(12 + (rand() - 0.5));
    rawLabels.push(false);
  }
  // spikes spanning two decades of residual size so every alpha step on the
  // 0..100 grid flips at least the biggest remaining one
  const spikes: Array<[number, number]> = [
    [9, 0.8],
    [17, 1.6],
    [26, 3.0],
    [35, 6.0],
    [44, 12.0],
    [53, 25.0],
    [62, 50.0],
    [71, 100.0],
    [80, 200.0],
    [89, 400.0],
  ];
  for (const [index, magnitude] of spikes) {
    values[index] = 12 + magnitude;
    rawLabels[index] = true;
  }
  return { id, values, trend, seasonal, rawLabels };
}
