/** Build the multipart payload for POST /api/stylize from UI state. */

import type { StylizePayload, UiState } from "./types";
import { normalizeWeights } from "./weights";

/**
 * Mirror the service contract exactly: content, then styles (cached ids
 * as `style_ids`, otherwise inline image parts), normalized `weights`,
 * `alpha`, `preserve_color` only when set, and masks only when painted.
 *
 * Assumes state invariants already hold (at least one style, some raw
 * weight positive); callers gate on that before enabling stylize.
 */
export function buildStylizeRequest(state: UiState): StylizePayload {
  if (!state.content) {
    throw new Error("no content image selected");
  }
  const weights = normalizeWeights(state.styles.map((s) => s.rawWeight));
  if (weights === null) {
    throw new Error("all style weights are zero");
  }
  // the service resolves inline styles before id styles; partition the
  // entries the same way so weights and masks stay paired 1:1
  const indexed = state.styles.map((style, i) => ({ style, weight: weights[i] }));
  const ordered = [
    ...indexed.filter(({ style }) => style.styleId === undefined),
    ...indexed.filter(({ style }) => style.styleId !== undefined),
  ];
  const payload: StylizePayload = [["content", state.content]];
  for (const { style } of ordered) {
    if (style.styleId === undefined) {
      payload.push(["styles", style.image]);
    } else {
      payload.push(["style_ids", style.styleId]);
    }
  }
  for (const { weight } of ordered) {
    payload.push(["weights", String(weight)]);
  }
  payload.push(["alpha", String(state.alpha)]);
  if (state.preserveColor) {
    payload.push(["preserve_color", "true"]);
  }
  if (ordered.some(({ style }) => style.mask !== undefined)) {
    if (!ordered.every(({ style }) => style.mask !== undefined)) {
      throw new Error("masks must be painted for every style or none");
    }
    for (const { style } of ordered) {
      payload.push(["masks", style.mask as Blob]);
    }
  }
  return payload;
}

export function payloadToFormData(payload: StylizePayload): FormData {
  const form = new FormData();
  for (const [name, value] of payload) {
    if (typeof value === "string") {
      form.append(name, value);
    } else {
      form.append(name, value, `${name}.png`);
    }
  }
  return form;
}
