/** Shared state and payload types for the stylization UI. */

/** One uploaded style: its image blob, optional server-side id, raw slider value. */
export interface StyleEntry {
  image: Blob;
  styleId?: string;
  rawWeight: number;
  /** Painted region mask exported as a grayscale PNG, if any. */
  mask?: Blob;
}

export interface UiState {
  content?: Blob;
  styles: StyleEntry[];
  alpha: number;
  preserveColor: boolean;
  lastResult?: Blob;
  requestInFlight: boolean;
}

/**
 * A stylize request as an ordered field list. Strings go out as form
 * fields, blobs as file parts; keeping it structural (rather than a
 * FormData) makes payloads comparable in tests.
 */
export type PayloadEntry = [name: string, value: string | Blob];
export type StylizePayload = PayloadEntry[];

export function initialState(): UiState {
  return { styles: [], alpha: 1.0, preserveColor: false, requestInFlight: false };
}
