import { ApiClient, ApiError, SequencedResultFetcher } from "./api.js";
import {
  DEFAULT_LAYOUT,
  anomalyMarkers,
  bandPath,
  linePath,
  makeScales,
  valueDomain,
} from "./chart.js";
import { debounce } from "./debounce.js";
import {
  applyAlpha,
  applyError,
  applyFeedback,
  applyResult,
  clearToast,
  initialState,
} from "./state.js";
import type { ViewState } from "./state.js";

const SVG_NS = "http://www.w3.org/2000/svg";

let state: ViewState = initialState();

const el = {
  seriesInput: document.querySelector<HTMLInputElement>("#series-id")!,
  loadButton: document.querySelector<HTMLButtonElement>("#load")!,
  slider: document.querySelector<HTMLInputElement>("#alpha")!,
  alphaLabel: document.querySelector<HTMLSpanElement>("#alpha-value")!,
  chart: document.querySelector<SVGSVGElement>("#chart")!,
  banner: document.querySelector<HTMLDivElement>("#banner")!,
  toast: document.querySelector<HTMLDivElement>("#toast")!,
  choice: document.querySelector<HTMLDivElement>("#choice")!,
  reportMissed: document.querySelector<HTMLInputElement>("#report-missed")!,
};

const client = new ApiClient("");
const fetcher = new SequencedResultFetcher(
  client,
  (result) => {
    state = applyResult(state, result);
    render();
  },
  (error) => {
    state = applyError(
      state,
      error instanceof ApiError && error.status === 404 ? new Error("series not found") : error,
    );
    render();
  },
);

const debouncedFetch = debounce((seriesId: string, alpha: number) => {
  void fetcher.fetch(seriesId, alpha);
}, 150);

function node<K extends string>(tag: K, attrs: Record<string, string>): SVGElement {
  const n = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    n.setAttribute(key, value);
  }
  return n;
}

function render(): void {
  el.banner.textContent = state.banner ?? "";
  el.banner.hidden = state.banner === null;
  el.toast.textContent = state.toast ?? "";
  el.toast.hidden = state.toast === null;
  if (state.toast !== null) {
    setTimeout(() => {
      state = clearToast(state);
      el.toast.hidden = true;
    }, 4000);
  }
  el.alphaLabel.textContent = String(state.alpha);

  el.chart.replaceChildren();
  const result = state.result;
  if (!result) {
    el.choice.textContent = "";
    return;
  }
  el.choice.textContent =
    `detector: ${result.choice.kind} (param ${result.choice.param.toFixed(3)}, ` +
    `${result.choice.source}, confidence ${result.choice.confidence.toFixed(2)})`;

  const values = result.points.map((p) => p.value);
  const scales = makeScales(values.length, valueDomain(result), DEFAULT_LAYOUT);

  el.chart.append(
    node("path", { d: bandPath(result.band.lower, result.band.upper, scales), class: "band" }),
    node("path", { d: linePath(values, scales), class: "series" }),
  );
  for (const marker of anomalyMarkers(result, scales, state.disputed)) {
    const dot = node("circle", {
      cx: marker.x.toFixed(2),
      cy: marker.y.toFixed(2),
      r: "5",
      class: marker.disputed ? "marker disputed" : "marker",
      "data-index": String(marker.index),
    });
    dot.addEventListener("click", () => void dispute(marker.index));
    el.chart.append(dot);
  }
  if (el.reportMissed.checked) {
    values.forEach((v, i) => {
      if (!result.labels[i]) {
        const ghost = node("circle", {
          cx: scales.x(i).toFixed(2),
          cy: scales.y(v).toFixed(2),
          r: "7",
          class: "ghost",
          "data-index": String(i),
        });
        ghost.addEventListener("click", () => void confirmMissed(i));
        el.chart.append(ghost);
      }
    });
  }
}

async function sendFeedback(index: number, isAnomaly: boolean): Promise<void> {
  const seriesId = state.seriesId;
  if (!seriesId) {
    return;
  }
  try {
    const response = await client.postFeedback(seriesId, index, isAnomaly);
    state = applyFeedback(state, index, isAnomaly, response);
    if (response.reselection_triggered) {
      void fetcher.fetch(seriesId, state.alpha);
    }
  } catch (error) {
    state = applyError(state, error instanceof Error ? error : new Error(String(error)));
  }
  render();
}

const dispute = (index: number) => sendFeedback(index, false);
const confirmMissed = (index: number) => sendFeedback(index, true);

el.loadButton.addEventListener("click", () => {
  const seriesId = el.seriesInput.value.trim();
  if (seriesId) {
    void fetcher.fetch(seriesId, state.alpha);
  }
});

el.slider.addEventListener("input", () => {
  state = applyAlpha(state, Number(el.slider.value));
  el.alphaLabel.textContent = String(state.alpha);
  if (state.seriesId) {
    debouncedFetch(state.seriesId, state.alpha);
  }
});

el.reportMissed.addEventListener("change", render);

render();
