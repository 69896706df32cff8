/** Leaderboard: rank, display name, points, level - nothing else of others. */

import { el, fmt } from "./dom.js";
import type { LeaderboardEntry } from "./types.js";

export function renderLeaderboard(entries: LeaderboardEntry[], selfId: string): HTMLElement {
  const rows = entries.map((entry) =>
    el("tr", {
      class: `board-row ${entry.user_id === selfId ? "self" : ""}`,
      "data-rank": String(entry.rank),
    }, [
      el("td", { class: "rank" }, [String(entry.rank)]),
      el("td", { class: "name" }, [entry.user_id]),
      el("td", { class: "points" }, [fmt(entry.points)]),
      el("td", { class: "level" }, [entry.level ?? "–"]),
    ]));
  return el("section", { class: "leaderboard", "data-screen": "leaderboard" }, [
    el("h1", {}, ["Leaderboard"]),
    el("table", {}, [
      el("thead", {}, [el("tr", {}, ["#", "Player", "Points", "Level"]
        .map((h) => el("th", {}, [h])))]),
      el("tbody", {}, rows),
    ]),
  ]);
}
