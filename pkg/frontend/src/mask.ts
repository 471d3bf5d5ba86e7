/** Brush-on-canvas mask painting, exported as a grayscale PNG. */

export class MaskPainter {
  private readonly ctx: CanvasRenderingContext2D;
  private painting = false;
  private touched = false;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly brushRadius = 14,
  ) {
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      throw new Error("canvas 2d context unavailable");
    }
    this.ctx = ctx;
    this.clear();
    canvas.addEventListener("pointerdown", (e) => {
      this.painting = true;
      this.paintAt(e);
    });
    canvas.addEventListener("pointermove", (e) => {
      if (this.painting) this.paintAt(e);
    });
    for (const kind of ["pointerup", "pointerleave"] as const) {
      canvas.addEventListener(kind, () => {
        this.painting = false;
      });
    }
  }

  clear(): void {
    this.ctx.fillStyle = "black";
    this.ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    this.touched = false;
  }

  get hasPaint(): boolean {
    return this.touched;
  }

  private paintAt(event: PointerEvent): void {
    const rect = this.canvas.getBoundingClientRect();
    const x = ((event.clientX - rect.left) / rect.width) * this.canvas.width;
    const y = ((event.clientY - rect.top) / rect.height) * this.canvas.height;
    this.ctx.fillStyle = "white";
    this.ctx.beginPath();
    this.ctx.arc(x, y, this.brushRadius, 0, 2 * Math.PI);
    this.ctx.fill();
    this.touched = true;
  }

  /** Grayscale PNG of the painted region (white = in-region). */
  async toBlob(): Promise<Blob> {
    return new Promise((resolve, reject) => {
      this.canvas.toBlob((blob) => {
        if (blob) resolve(blob);
        else reject(new Error("mask export failed"));
      }, "image/png");
    });
  }
}
