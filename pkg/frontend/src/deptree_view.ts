// Dependency-tree arc diagram: tokens on a baseline, one arc per
// head-dependent pair, nested arcs stacked on higher levels. The layout is
// a pure function of the token list, so it is deterministic.

import type { Token } from "./protocol";

export interface Arc {
  from: number; // leftmost token index
  to: number; // rightmost token index
  head: number;
  dependent: number;
  dep: string;
  level: number; // 1 = innermost
}

export function layoutArcs(tokens: Token[]): Arc[] {
  const arcs: Arc[] = tokens
    .filter((t) => t.head !== 0)
    .map((t) => ({
      from: Math.min(t.head, t.index),
      to: Math.max(t.head, t.index),
      head: t.head,
      dependent: t.index,
      dep: t.dep,
      level: 1,
    }));
  // inner spans first, so each arc clears everything nested inside it
  arcs.sort((a, b) => a.to - a.from - (b.to - b.from) || a.from - b.from);
  for (const arc of arcs) {
    for (const other of arcs) {
      if (other === arc) continue;
      const nested =
        other.from >= arc.from &&
        other.to <= arc.to &&
        other.to - other.from < arc.to - arc.from;
      if (nested) arc.level = Math.max(arc.level, other.level + 1);
    }
  }
  arcs.sort((a, b) => a.from - b.from || a.to - b.to);
  return arcs;
}

const STEP = 92;
const MARGIN = 50;
const BASE_Y = 150;
const LEVEL_H = 34;

export function tokenX(index: number): number {
  return MARGIN + (index - 1) * STEP;
}

export function treeToSvg(tokens: Token[]): string {
  const arcs = layoutArcs(tokens);
  const width = MARGIN * 2 + STEP * Math.max(tokens.length - 1, 0);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${BASE_Y + 46}" ` +
      `class="deptree" role="img" aria-label="dependency tree">`,
  );
  for (const arc of arcs) {
    const x1 = tokenX(arc.head);
    const x2 = tokenX(arc.dependent);
    const top = BASE_Y - 12 - arc.level * LEVEL_H;
    const mid = (x1 + x2) / 2;
    parts.push(
      `<path d="M ${x1} ${BASE_Y - 26} C ${x1} ${top}, ${x2} ${top}, ${x2} ${BASE_Y - 26}" ` +
        `class="arc" fill="none" marker-end="url(#arrow)"/>`,
    );
    parts.push(
      `<text x="${mid}" y="${top + 6}" class="dep-label" text-anchor="middle">${arc.dep}</text>`,
    );
  }
  parts.push(
    `<defs><marker id="arrow" viewBox="0 0 8 8" refX="7" refY="4" ` +
      `markerWidth="6" markerHeight="6" orient="auto-start-reverse">` +
      `<path d="M 0 0 L 8 4 L 0 8 z"/></marker></defs>`,
  );
  for (const token of tokens) {
    const x = tokenX(token.index);
    parts.push(
      `<text x="${x}" y="${BASE_Y}" class="token" text-anchor="middle">${escapeXml(token.text)}</text>`,
    );
    parts.push(
      `<text x="${x}" y="${BASE_Y + 20}" class="pos" text-anchor="middle">${token.pos}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}
