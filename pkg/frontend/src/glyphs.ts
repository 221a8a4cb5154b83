// SVG builders: radar glyphs stand in for item images on synthetic catalogs,
// and the percentile-rank sparkline tracks game-mode progress.

export interface RadarOptions {
  size?: number;
  maxSpokes?: number;
}

// Attribute scores are arbitrary reals; squash each to (0,1) for the polygon.
function squash(x: number): number {
  return 1 / (1 + Math.exp(-x));
}

export function radarSvg(attrs: number[], opts: RadarOptions = {}): string {
  const size = opts.size ?? 72;
  const spokes = Math.min(attrs.length, opts.maxSpokes ?? 12);
  const c = size / 2;
  const r = c - 4;
  const pts: string[] = [];
  const axes: string[] = [];
  for (let i = 0; i < spokes; i++) {
    const angle = (2 * Math.PI * i) / spokes - Math.PI / 2;
    const ax = c + r * Math.cos(angle);
    const ay = c + r * Math.sin(angle);
    axes.push(`<line x1="${c}" y1="${c}" x2="${ax.toFixed(1)}" y2="${ay.toFixed(1)}" class="radar-axis"/>`);
    const v = squash(attrs[i]);
    const px = c + v * r * Math.cos(angle);
    const py = c + v * r * Math.sin(angle);
    pts.push(`${px.toFixed(1)},${py.toFixed(1)}`);
  }
  return (
    `<svg viewBox="0 0 ${size} ${size}" class="radar" role="img">` +
    `<circle cx="${c}" cy="${c}" r="${r}" class="radar-ring"/>` +
    axes.join("") +
    `<polygon points="${pts.join(" ")}" class="radar-shape"/>` +
    `</svg>`
  );
}

export function sparklineSvg(values: number[], width = 160, height = 36): string {
  if (values.length === 0) return `<svg viewBox="0 0 ${width} ${height}" class="spark"></svg>`;
  const n = values.length;
  const pts = values.map((v, i) => {
    const x = n === 1 ? width / 2 : (i / (n - 1)) * (width - 4) + 2;
    const y = height - 2 - v * (height - 4);
    return `${x.toFixed(1)},${y.toFixed(1)}`;
  });
  const last = values[values.length - 1];
  return (
    `<svg viewBox="0 0 ${width} ${height}" class="spark" role="img">` +
    `<polyline points="${pts.join(" ")}" class="spark-line"/>` +
    `<text x="${width - 2}" y="10" text-anchor="end" class="spark-label">` +
    `${(last * 100).toFixed(1)}%</text>` +
    `</svg>`
  );
}
