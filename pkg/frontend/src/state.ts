import type { FeedbackResponse, ResultResponse } from "./types.js";

/** What the dashboard shows; every field derives from server responses. */
export interface ViewState {
  seriesId: string | null;
  alpha: number;
  result: ResultResponse | null;
  disputed: Set<number>;
  confirmed: Set<number>;
  banner: string | null;
  toast: string | null;
}

export function initialState(): ViewState {
  return {
    seriesId: null,
    alpha: 50,
    result: null,
    disputed: new Set(),
    confirmed: new Set(),
    banner: null,
    toast: null,
  };
}

export function applyResult(state: ViewState, result: ResultResponse): ViewState {
  const sameSeries = state.seriesId === result.series_id;
  return {
    ...state,
    seriesId: result.series_id,
    result,
    banner: null,
    disputed: sameSeries ? state.disputed : new Set(),
    confirmed: sameSeries ? state.confirmed : new Set(),
  };
}

export function applyError(state: ViewState, error: Error): ViewState {
  return { ...state, banner: error.message };
}

export function applyAlpha(state: ViewState, alpha: number): ViewState {
  return { ...state, alpha: Math.min(100, Math.max(0, alpha)) };
}

export function applyFeedback(
  state: ViewState,
  index: number,
  isAnomaly: boolean,
  response: FeedbackResponse,
): ViewState {
  const disputed = new Set(state.disputed);
  const confirmed = new Set(state.confirmed);
  (isAnomaly ? confirmed : disputed).add(index);
  (isAnomaly ? disputed : confirmed).delete(index);
  return {
    ...state,
    disputed,
    confirmed,
    toast: response.reselection_triggered
      ? `model re-selected: ${response.choice.kind}`
      : state.toast,
  };
}

export function clearToast(state: ViewState): ViewState {
  return { ...state, toast: null };
}

export function markerCount(state: ViewState): number {
  return state.result ? state.result.labels.filter(Boolean).length : 0;
}
