/** Service client: style registration with a local id cache, stylize calls. */

import { buildStylizeRequest, payloadToFormData } from "./request";
import type { UiState } from "./types";

export interface StylizeResponse {
  image: Blob;
  /** Server echo of the controls that produced this image. */
  controlSpec: string | null;
}

export class ApiClient {
  /** blob identity -> style_id; content addressing on the server makes re-uploads idempotent. */
  private styleIds = new WeakMap<Blob, string>();

  constructor(private readonly baseUrl = "") {}

  cachedStyleId(image: Blob): string | undefined {
    return this.styleIds.get(image);
  }

  /**
   * Register a style once; later requests send the id instead of bytes.
   * Failures are non-fatal: the style stays usable inline.
   */
  async uploadStyle(image: Blob): Promise<string | null> {
    const cached = this.styleIds.get(image);
    if (cached !== undefined) {
      return cached;
    }
    const form = new FormData();
    form.append("style", image, "style.png");
    try {
      const response = await fetch(`${this.baseUrl}/api/styles`, { method: "POST", body: form });
      if (!response.ok) {
        return null;
      }
      const body = (await response.json()) as { style_id: string };
      this.styleIds.set(image, body.style_id);
      return body.style_id;
    } catch {
      return null;
    }
  }

  async stylize(state: UiState): Promise<StylizeResponse> {
    const withIds: UiState = {
      ...state,
      styles: state.styles.map((s) => ({ ...s, styleId: s.styleId ?? this.styleIds.get(s.image) })),
    };
    const payload = buildStylizeRequest(withIds);
    const response = await fetch(`${this.baseUrl}/api/stylize`, {
      method: "POST",
      body: payloadToFormData(payload),
    });
    if (!response.ok) {
      let reason = `${response.status}`;
      try {
        const body = (await response.json()) as { error?: string; field?: string };
        reason = body.field ? `${body.field}: ${body.error}` : (body.error ?? reason);
      } catch {
        // non-JSON error body; keep the status code
      }
      throw new Error(reason);
    }
    return { image: await response.blob(), controlSpec: response.headers.get("X-Control-Spec") };
  }
}
