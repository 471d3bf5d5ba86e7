/** Raw slider values -> convex interpolation weights. */

/**
 * Normalize non-negative raw weights so they sum to 1 (within 1e-9).
 * Returns null when every raw is zero; the caller should disable the
 * stylize action instead of sending a request.
 */
export function normalizeWeights(raws: number[]): number[] | null {
  if (raws.some((r) => r < 0 || !Number.isFinite(r))) {
    throw new Error(`raw weights must be finite and >= 0, got [${raws.join(", ")}]`);
  }
  const total = raws.reduce((acc, r) => acc + r, 0);
  if (total === 0) {
    return null;
  }
  return raws.map((r) => r / total);
}
