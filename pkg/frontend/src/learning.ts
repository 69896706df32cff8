/** Learning screen: one row per criterion, deltas flagged, article links.
 *
 * Rows render exactly as served, in served order.  Negative deltas carry a
 * visual flag and, where the API provides one, an article link that opens
 * externally.  Penalty badges mark the day's penalty events.  `openLearning`
 * is the screen-open entry point: it fetches the payload and logs exactly
 * one view per open.
 */

import type { ApiClient } from "./api.js";
import { el, fmt } from "./dom.js";
import type { LearningPayload, LearningRow, PenaltyEvent } from "./types.js";

function deltaCell(delta: number | null): HTMLElement {
  if (delta === null) {
    return el("td", { class: "delta none" }, ["–"]);
  }
  const direction = delta < 0 ? "negative" : delta > 0 ? "positive" : "flat";
  const sign = delta > 0 ? "+" : "";
  return el("td", { class: `delta ${direction}`, "data-delta": String(delta) },
            [`${sign}${delta.toFixed(1)}`]);
}

function renderRow(row: LearningRow, penalties: PenaltyEvent[]): HTMLElement {
  const penalty = penalties.find((p) => p.criterion_id === row.criterion_id);
  const cells = [
    el("td", { class: "criterion" }, [row.criterion_id]),
    el("td", { class: "description" }, [row.description]),
    el("td", { class: "scaled" }, [fmt(row.scaled)]),
    deltaCell(row.delta),
    el("td", { class: "article" }, row.article_url
      ? [el("a", { href: row.article_url, target: "_blank", rel: "noopener noreferrer" },
            ["Learn more"])]
      : []),
    el("td", { class: "penalty" }, penalty
      ? [el("span", { class: "penalty-badge", title: penalty.description },
            [`-${Math.abs(penalty.points_effect).toFixed(1)}`])]
      : []),
  ];
  return el("tr", { class: "learning-row", "data-criterion": row.criterion_id }, cells);
}

export function renderLearning(payload: LearningPayload): HTMLElement {
  const header = el("tr", {}, ["Criterion", "Behavior", "Score", "Δ", "Article", "Penalty"]
    .map((h) => el("th", {}, [h])));
  const body = el("tbody", {}, payload.rows.map((row) => renderRow(row, payload.penalties)));
  const root = el("section", { class: "learning", "data-screen": "learning" }, [
    el("h1", {}, [`Your behavior scores - day ${payload.day}`]),
    el("div", { class: "passive-total" }, [
      `Passive score ${fmt(payload.passive)}`,
      payload.passive_delta === null ? "" :
        ` (${payload.passive_delta >= 0 ? "+" : ""}${payload.passive_delta.toFixed(1)} vs yesterday)`,
    ]),
    el("table", { class: "learning-table" }, [el("thead", {}, [header]), body]),
  ]);
  if (payload.unlocked.length > 0) {
    root.append(el("h2", {}, ["Your unlocked articles"]),
      el("ul", { class: "unlocked" }, payload.unlocked.map((u) =>
        el("li", {}, [el("a", { href: u.url, target: "_blank", rel: "noopener noreferrer" },
                         [`${u.topic} (level ${u.grade})`])]))));
  }
  return root;
}

/** Fetch + render + log the view. One view-log call per screen open. */
export async function openLearning(client: ApiClient): Promise<HTMLElement> {
  const payload = await client.learning();
  const view = renderLearning(payload);
  await client.logView("learning");
  return view;
}
