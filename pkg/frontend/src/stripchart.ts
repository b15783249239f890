/** Minimal canvas strip chart for one trended value per tick. */

interface Point {
  minute: number;
  value: number;
}

export class StripChart {
  private points: Point[] = [];

  constructor(
    readonly canvas: HTMLCanvasElement,
    private label: string,
    private windowMinutes = 240,
    private color = "#4fc3f7",
  ) {
    canvas.dataset.chart = label;
  }

  push(minute: number, value: number): void {
    this.points.push({ minute, value });
    const cutoff = minute - this.windowMinutes;
    while (this.points.length > 1 && this.points[0].minute < cutoff) {
      this.points.shift();
    }
    this.draw();
  }

  latest(): number | null {
    return this.points.length ? this.points[this.points.length - 1].value : null;
  }

  size(): number {
    return this.points.length;
  }

  private draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx || this.points.length === 0) return; // headless test environments
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#111820";
    ctx.fillRect(0, 0, width, height);

    let lo = Infinity;
    let hi = -Infinity;
    for (const p of this.points) {
      lo = Math.min(lo, p.value);
      hi = Math.max(hi, p.value);
    }
    if (hi - lo < 1e-9) {
      hi += 1;
      lo -= 1;
    }
    const t0 = this.points[0].minute;
    const t1 = this.points[this.points.length - 1].minute;
    const span = Math.max(1e-9, t1 - t0);

    ctx.strokeStyle = this.color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    this.points.forEach((p, i) => {
      const x = ((p.minute - t0) / span) * (width - 8) + 4;
      const y = height - 4 - ((p.value - lo) / (hi - lo)) * (height - 8);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();

    ctx.fillStyle = "#9ab";
    ctx.font = "10px monospace";
    ctx.fillText(`${this.label}  ${this.points[this.points.length - 1].value.toFixed(1)}`, 6, 12);
    ctx.fillText(hi.toFixed(1), 6, 24);
    ctx.fillText(lo.toFixed(1), 6, height - 8);
  }
}
