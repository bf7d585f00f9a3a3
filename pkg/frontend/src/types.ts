export interface Choice {
  kind: string;
  param: number;
  confidence: number;
  source: string;
}

export interface SeriesPoint {
  timestamp: number;
  value: number;
}

export interface ResultResponse {
  schema_version: number;
  series_id: string;
  alpha: number;
  choice: Choice;
  points: SeriesPoint[];
  labels: boolean[];
  scores: number[];
  band: { lower: number[]; upper: number[] };
}

export interface FeedbackResponse {
  schema_version: number;
  series_id: string;
  recorded: boolean;
  false_alert: boolean;
  false_alert_rate: number;
  feedback_count: number;
  reselection_triggered: boolean;
  choice: Choice;
}
