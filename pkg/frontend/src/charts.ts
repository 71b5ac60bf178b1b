/**
 * Chart models for the publication statistics.
 *
 * Charts bind the /stats payload directly; no number shown here is ever
 * derived client-side from a partial article list.
 */

import type { Stats } from "./api.js";

export interface Bar {
  label: string;
  value: number;
  /** Height in pixels, scaled to the tallest bar. */
  height: number;
}

export interface YearChart {
  bars: Bar[];
  maxValue: number;
}

export function buildYearChart(stats: Stats, maxHeight = 160): YearChart {
  const maxValue = stats.per_year.reduce((m, p) => Math.max(m, p.count), 0);
  const bars = stats.per_year.map((p) => ({
    label: String(p.year),
    value: p.count,
    height: maxValue === 0 ? 0 : Math.round((p.count / maxValue) * maxHeight),
  }));
  return { bars, maxValue };
}

export interface OaChart {
  open: number;
  closed: number;
  ratio: number;
  percentLabel: string;
}

export function buildOaChart(stats: Stats): OaChart {
  const { open, closed, ratio } = stats.open_access;
  return {
    open,
    closed,
    ratio,
    percentLabel: `${Math.round(ratio * 100)}% open access`,
  };
}

/** Inline SVG for the per-year bars; width grows with the year count. */
export function yearChartSvg(chart: YearChart, barWidth = 28, gap = 10): string {
  const height = 180;
  const baseline = height - 16;
  const parts: string[] = [];
  chart.bars.forEach((bar, i) => {
    const x = i * (barWidth + gap);
    const y = baseline - bar.height;
    parts.push(
      `<rect x="${x}" y="${y}" width="${barWidth}" height="${bar.height}" class="bar"><title>${bar.label}: ${bar.value}</title></rect>`,
      `<text x="${x + barWidth / 2}" y="${baseline + 12}" text-anchor="middle" class="bar-label">${bar.label}</text>`,
      `<text x="${x + barWidth / 2}" y="${y - 4}" text-anchor="middle" class="bar-value">${bar.value}</text>`,
    );
  });
  const width = Math.max(chart.bars.length * (barWidth + gap), barWidth);
  return `<svg viewBox="0 0 ${width} ${height}" role="img" aria-label="publications per year">${parts.join("")}</svg>`;
}
