/** DOM wiring: uploads, sliders, mask painting, live-steered results. */

import { ApiClient } from "./api";
import { MaskPainter } from "./mask";
import { RequestScheduler } from "./scheduler";
import type { StyleEntry, UiState } from "./types";
import { initialState } from "./types";
import { normalizeWeights } from "./weights";

const api = new ApiClient();
const state: UiState = initialState();

const el = {
  content: document.getElementById("content-input") as HTMLInputElement,
  style: document.getElementById("style-input") as HTMLInputElement,
  styleList: document.getElementById("style-list") as HTMLDivElement,
  alpha: document.getElementById("alpha-slider") as HTMLInputElement,
  alphaValue: document.getElementById("alpha-value") as HTMLSpanElement,
  preserveColor: document.getElementById("preserve-color") as HTMLInputElement,
  result: document.getElementById("result-image") as HTMLImageElement,
  spec: document.getElementById("control-spec") as HTMLPreElement,
  banner: document.getElementById("error-banner") as HTMLDivElement,
  weightsEcho: document.getElementById("weights-echo") as HTMLSpanElement,
  maskCanvas: document.getElementById("mask-canvas") as HTMLCanvasElement,
  maskTarget: document.getElementById("mask-target") as HTMLSelectElement,
  maskApply: document.getElementById("mask-apply") as HTMLButtonElement,
  maskClear: document.getElementById("mask-clear") as HTMLButtonElement,
};

const painter = new MaskPainter(el.maskCanvas);

const scheduler = new RequestScheduler<UiState, Awaited<ReturnType<ApiClient["stylize"]>>>(
  (snapshot) => api.stylize(snapshot),
  {
    onResult: (response) => {
      el.banner.hidden = true;
      el.result.src = URL.createObjectURL(response.image);
      el.spec.textContent = response.controlSpec ?? "(no control spec echoed)";
      state.lastResult = response.image;
    },
    onError: (error) => {
      el.banner.hidden = false;
      el.banner.textContent = `request failed: ${String(error)} (showing last good result)`;
    },
  },
  150,
);

function requestRender(): void {
  const weights = normalizeWeights(state.styles.map((s) => s.rawWeight));
  el.weightsEcho.textContent = weights
    ? weights.map((w) => w.toFixed(3)).join(" / ")
    : "all weights zero: stylize disabled";
  if (!state.content || state.styles.length === 0 || weights === null) {
    return;
  }
  scheduler.schedule({ ...state, styles: state.styles.map((s) => ({ ...s })) });
}

function addStyle(file: File): void {
  const entry: StyleEntry = { image: file, rawWeight: 1.0 };
  state.styles.push(entry);
  void api.uploadStyle(file).then((styleId) => {
    if (styleId) entry.styleId = styleId;
  });

  const row = document.createElement("div");
  row.className = "style-row";
  const label = document.createElement("span");
  label.textContent = file.name;
  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = "0";
  slider.max = "1";
  slider.step = "0.01";
  slider.value = "1";
  slider.addEventListener("input", () => {
    entry.rawWeight = Number(slider.value);
    requestRender();
  });
  row.append(label, slider);
  el.styleList.append(row);

  const option = document.createElement("option");
  option.value = String(state.styles.length - 1);
  option.textContent = file.name;
  el.maskTarget.append(option);
  requestRender();
}

el.content.addEventListener("change", () => {
  const file = el.content.files?.[0];
  if (file) {
    state.content = file;
    requestRender();
  }
});

el.style.addEventListener("change", () => {
  for (const file of el.style.files ?? []) {
    addStyle(file);
  }
  el.style.value = "";
});

el.alpha.addEventListener("input", () => {
  state.alpha = Number(el.alpha.value);
  el.alphaValue.textContent = state.alpha.toFixed(2);
  requestRender();
});

el.preserveColor.addEventListener("change", () => {
  state.preserveColor = el.preserveColor.checked;
  requestRender();
});

el.maskApply.addEventListener("click", () => {
  const index = Number(el.maskTarget.value);
  if (!Number.isInteger(index) || !state.styles[index] || !painter.hasPaint) {
    return;
  }
  void painter.toBlob().then((blob) => {
    state.styles[index].mask = blob;
    requestRender();
  });
});

el.maskClear.addEventListener("click", () => {
  painter.clear();
  for (const style of state.styles) {
    delete style.mask;
  }
  requestRender();
});
