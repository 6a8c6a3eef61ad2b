/**
 * Pure HTML builders - no DOM access, so rendering is unit-testable as
 * strings. app.ts mounts the output and wires events.
 */

import { badgeFor, rankingMode } from "./state";
import type { ApiErrorBody, MethodRecord, TurnView } from "./types";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderError(error: ApiErrorBody | null): string {
  if (!error) return "";
  return (
    `<div class="error-banner" role="alert">` +
    `<span class="error-code">${escapeHtml(error.code)}</span> ` +
    `${escapeHtml(error.message)} ` +
    `<button data-action="retry">retry</button>` +
    `<button data-action="dismiss">dismiss</button></div>`
  );
}

export function renderTurn(turn: TurnView, methods: MethodRecord[], pending: boolean): string {
  const cards = turn.cards
    .map((card, i) => {
      const badge = escapeHtml(badgeFor(card, methods));
      const badgeClass = card.methodId === null ? "badge badge-none" : "badge badge-method";
      const draggable = pending && rankingMode(turn) === "order";
      return (
        `<div class="card" data-card="${i + 1}"${draggable ? ' draggable="true"' : ""}>` +
        `<span class="${badgeClass}">${badge}</span>` +
        `<p>${escapeHtml(card.text)}</p></div>`
      );
    })
    .join("");
  const controls = pending ? renderRankingControls(turn) : "";
  const ranked = turn.ranked ? '<span class="ranked-mark">ranked</span>' : "";
  return (
    `<section class="turn" data-turn="${turn.index}">` +
    `<div class="user-input">${escapeHtml(turn.input)}</div>` +
    `<div class="cards">${cards}</div>${controls}${ranked}</section>`
  );
}

export function renderRankingControls(turn: TurnView): string {
  if (rankingMode(turn) === "confirm") {
    return `<div class="rank-controls"><button data-action="confirm" data-turn="${turn.index}">confirm</button></div>`;
  }
  return (
    `<div class="rank-controls" data-turn="${turn.index}">` +
    `<span>drag cards into preference order, best first, then</span> ` +
    `<button data-action="submit-ranking" data-turn="${turn.index}">submit ranking</button></div>`
  );
}

function renderMethodLine(method: MethodRecord): string {
  const problem = escapeHtml(
    method.problem.length > 70 ? `${method.problem.slice(0, 67)}...` : method.problem,
  );
  const score = method.score;
  return (
    `<li class="method" data-method="${method.id}">` +
    `<span class="badge badge-eff">eff ${score.effectiveness.toFixed(2)}</span>` +
    `<span class="counters">used ${score.times_used} / top ${score.times_top_ranked}</span> ` +
    `${problem} ` +
    `<button data-action="delete-method" data-method="${method.id}">delete</button></li>`
  );
}

/** Indented tree: scope, sentinel root, then placement nodes with methods. */
export function renderMethodTree(methods: MethodRecord[]): string {
  const scopes = new Map<string, Map<string, MethodRecord[]>>();
  for (const method of methods) {
    const byNode = scopes.get(method.scope) ?? new Map<string, MethodRecord[]>();
    const group = byNode.get(method.node_id) ?? [];
    group.push(method);
    byNode.set(method.node_id, group);
    scopes.set(method.scope, byNode);
  }
  if (scopes.size === 0) {
    return `<ul class="tree"><li class="scope">global<ul><li class="node">root (sentinel)</li></ul></li></ul>`;
  }
  const sections: string[] = [];
  for (const [scope, byNode] of [...scopes.entries()].sort()) {
    const rootMethods = byNode.get("root") ?? [];
    const nodes = [...byNode.entries()]
      .filter(([nodeId]) => nodeId !== "root")
      .sort(([a], [b]) => a.localeCompare(b))
      .map(
        ([nodeId, group]) =>
          `<li class="node">${escapeHtml(nodeId)}<ul>${group.map(renderMethodLine).join("")}</ul></li>`,
      )
      .join("");
    sections.push(
      `<li class="scope">${escapeHtml(scope)}<ul>` +
        `<li class="node">root (sentinel)${rootMethods.length ? `<ul>${rootMethods.map(renderMethodLine).join("")}</ul>` : ""}</li>` +
        `${nodes}</ul></li>`,
    );
  }
  return `<ul class="tree">${sections.join("")}</ul>`;
}
