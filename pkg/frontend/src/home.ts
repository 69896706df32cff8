/** Home screen: overall score, level badge, active/passive gauges.
 *
 * A pure function of the API payload.  While scores warm up (nulls from the
 * API) the affected gauges show a calibrating state instead of numbers.
 */

import { el, fmt } from "./dom.js";
import type { HomePayload } from "./types.js";

function gauge(label: string, value: number | null): HTMLElement {
  const calibrating = value === null;
  const bar = el("div", { class: "gauge-bar" }, [
    el("div", {
      class: "gauge-fill",
      style: `width: ${calibrating ? 0 : Math.max(0, Math.min(100, value))}%`,
    }),
  ]);
  return el("div", { class: `gauge ${calibrating ? "calibrating" : ""}`, "data-gauge": label }, [
    el("span", { class: "gauge-label" }, [label]),
    bar,
    el("span", { class: "gauge-value" }, [calibrating ? "calibrating…" : fmt(value)]),
  ]);
}

export function renderHome(payload: HomePayload): HTMLElement {
  const root = el("section", { class: "home", "data-screen": "home" });
  root.append(
    el("h1", {}, [`Day ${payload.day ?? "–"}`]),
    el("div", { class: "overall", "data-overall": String(payload.overall ?? "") }, [
      payload.overall === null ? "Overall score: calibrating…"
        : `Overall score: ${fmt(payload.overall)}`,
    ]),
    el("div", { class: `level-badge level-${payload.level ?? "none"}` }, [
      payload.level ?? "unranked",
    ]),
    gauge("active", payload.active),
    gauge("passive", payload.passive),
  );
  return root;
}

/** Error banner shown when a refresh fails; existing data stays visible. */
export function renderRetryBanner(onRetry: () => void): HTMLElement {
  const button = el("button", { class: "retry" }, ["Retry"]);
  button.addEventListener("click", onRetry);
  return el("div", { class: "banner error", role: "alert" }, [
    el("span", { class: "stale-indicator" }, ["Data may be stale - the last refresh failed."]),
    button,
  ]);
}
