/** Pressure heatmap rendered as a DOM grid (kPa -> colour).
 *
 * Fixed display scale 0-300 kPa by default; the maximum is configurable.
 * Values come straight from the API's server-computed peak grid.
 */

export interface HeatmapOptions {
  maxKpa?: number;
  title?: string;
}

/** Piecewise black -> red -> yellow -> white ramp over [0, 1]. */
export function heatColor(fraction: number): string {
  const f = Math.max(0, Math.min(1, fraction));
  let r: number;
  let g: number;
  let b: number;
  if (f < 1 / 3) {
    r = Math.round(255 * (f * 3));
    g = 0;
    b = 40;
  } else if (f < 2 / 3) {
    r = 255;
    g = Math.round(255 * ((f - 1 / 3) * 3));
    b = 0;
  } else {
    r = 255;
    g = 255;
    b = Math.round(255 * ((f - 2 / 3) * 3));
  }
  return `rgb(${r}, ${g}, ${b})`;
}

export function renderHeatmap(root: HTMLElement, grid: number[][],
                              options: HeatmapOptions = {}): void {
  const maxKpa = options.maxKpa ?? 300;
  root.innerHTML = "";
  const container = document.createElement("div");
  container.className = "heatmap";
  if (options.title) {
    const caption = document.createElement("div");
    caption.className = "heatmap-title";
    caption.textContent = options.title;
    container.appendChild(caption);
  }
  const cols = grid[0]?.length ?? 0;
  const body = document.createElement("div");
  body.className = "heatmap-grid";
  body.style.display = "grid";
  body.style.gridTemplateColumns = `repeat(${cols}, 14px)`;
  // Heel at row 0: render toes at the top, so iterate rows in reverse.
  for (let r = grid.length - 1; r >= 0; r--) {
    for (let c = 0; c < cols; c++) {
      const cell = document.createElement("div");
      cell.className = "heatmap-cell";
      cell.dataset.kpa = String(grid[r][c]);
      cell.style.backgroundColor = heatColor(grid[r][c] / maxKpa);
      cell.style.width = "14px";
      cell.style.height = "14px";
      cell.title = `${grid[r][c].toFixed(1)} kPa`;
      body.appendChild(cell);
    }
  }
  container.appendChild(body);
  root.appendChild(container);
}
