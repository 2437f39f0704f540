// Weekly timeline chart: one polyline per phash group, hover titles per
// point, a legend when several groups are overlaid. All counts come from
// the API untouched.

import { TimelineSeries } from "./api";

const WIDTH = 640;
const HEIGHT = 180;
const PAD = 24;
const COLORS = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed"];

const SVG_NS = "http://www.w3.org/2000/svg";

export function chartTotal(root: HTMLElement): number {
  return Array.from(root.querySelectorAll<SVGCircleElement>("circle")).reduce(
    (sum, c) => sum + Number(c.dataset.count ?? 0),
    0,
  );
}

export function renderTimeline(root: HTMLElement, series: TimelineSeries[]): void {
  root.replaceChildren();
  const nonEmpty = series.filter((s) => s.bins.some((b) => b.count > 0));
  if (series.length === 0 || nonEmpty.length === 0) {
    const empty = document.createElement("p");
    empty.className = "timeline-empty";
    empty.textContent = "no occurrences in range";
    root.append(empty);
    return;
  }

  const weeks = series[0].bins.map((b) => b.week_start);
  const maxCount = Math.max(...series.flatMap((s) => s.bins.map((b) => b.count)), 1);
  const x = (i: number) =>
    PAD + (weeks.length === 1 ? 0 : (i * (WIDTH - 2 * PAD)) / (weeks.length - 1));
  const y = (count: number) => HEIGHT - PAD - (count * (HEIGHT - 2 * PAD)) / maxCount;

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("role", "img");

  series.forEach((s, si) => {
    const color = COLORS[si % COLORS.length];
    const line = document.createElementNS(SVG_NS, "polyline");
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", color);
    line.setAttribute(
      "points",
      s.bins.map((b, i) => `${x(i)},${y(b.count)}`).join(" "),
    );
    svg.append(line);
    s.bins.forEach((b, i) => {
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", String(x(i)));
      dot.setAttribute("cy", String(y(b.count)));
      dot.setAttribute("r", "3");
      dot.setAttribute("fill", color);
      dot.dataset.count = String(b.count);
      dot.dataset.week = b.week_start;
      const title = document.createElementNS(SVG_NS, "title");
      title.textContent = `${b.week_start}: ${b.count}`;
      dot.append(title);
      svg.append(dot);
    });
  });
  root.append(svg);

  if (series.length > 1) {
    const legend = document.createElement("ul");
    legend.className = "legend";
    series.forEach((s, si) => {
      const item = document.createElement("li");
      item.dataset.group = String(s.group);
      item.style.color = COLORS[si % COLORS.length];
      item.textContent = `group ${s.group}`;
      legend.append(item);
    });
    root.append(legend);
  }
}
