/** Minimal fixture API server: canned /v1 payloads, full request capture. */

import http from "node:http";
import type { AddressInfo } from "node:net";

export interface CapturedRequest {
  method: string;
  path: string;
  body: string;
  auth: string | undefined;
}

export interface Fixture {
  url: string;
  captured: CapturedRequest[];
  requests(method: string, pathPrefix: string): CapturedRequest[];
  close(): Promise<void>;
}

export type RouteMap = Record<string, unknown | ((req: CapturedRequest) => {
  status?: number;
  body?: unknown;
})>;

export async function startFixture(routes: RouteMap): Promise<Fixture> {
  const captured: CapturedRequest[] = [];
  const server = http.createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => {
      const record: CapturedRequest = {
        method: req.method ?? "GET",
        path: req.url ?? "/",
        body: Buffer.concat(chunks).toString("utf-8"),
        auth: req.headers.authorization,
      };
      captured.push(record);
      const key = `${record.method} ${record.path.split("?")[0]}`;
      const route = routes[key];
      let status = 200;
      let payload: unknown = { ok: true };
      if (route === undefined) {
        status = 404;
        payload = { detail: `no fixture for ${key}` };
      } else if (typeof route === "function") {
        const out = (route as (r: CapturedRequest) => { status?: number; body?: unknown })(record);
        status = out.status ?? 200;
        payload = out.body ?? { ok: true };
      } else {
        payload = route;
      }
      res.writeHead(status, { "Content-Type": "application/json" });
      res.end(JSON.stringify(payload));
    });
  });
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const { port } = server.address() as AddressInfo;
  return {
    url: `http://127.0.0.1:${port}`,
    captured,
    requests(method, pathPrefix) {
      return captured.filter((r) => r.method === method && r.path.startsWith(pathPrefix));
    },
    close: () => new Promise((resolve) => server.close(() => resolve())),
  };
}

export async function waitFor(check: () => boolean, timeoutMs = 2000): Promise<void> {
  const start = Date.now();
  while (!check()) {
    if (Date.now() - start > timeoutMs) {
      throw new Error("condition not met in time");
    }
    await new Promise((resolve) => setTimeout(resolve, 5));
  }
}

export const LEARNING_PAYLOAD = {
  user_id: "u1",
  day: 9,
  passive: 52.5,
  passive_delta: 1.25,
  rows: [
    { criterion_id: "SS2", description: "Keeps an anti-malware app installed",
      scaled: 30.1, delta: -8.4, article_url: "https://example.org/ss2" },
    { criterion_id: "AI1", description: "Downloads apps from trusted sources",
      scaled: 61.0, delta: 2.0, article_url: "https://example.org/ai1" },
    { criterion_id: "A3", description: "Uses a password management service",
      scaled: 47.3, delta: 0.0, article_url: null },
    { criterion_id: "N1", description: "Does not connect to unencrypted networks",
      scaled: 55.0, delta: null, article_url: null },
  ],
  penalties: [
    { criterion_id: "SS2", reason: "missing_safeguard",
      description: "Safeguard still missing", points_effect: -19.9 },
  ],
  recommendations: [],
  unlocked: [],
};

export const IMPERSONATION_CHALLENGE = {
  instance_id: "u1:w1:impersonation",
  user_id: "u1",
  kind: "push_notification",
  payload: { service: "Facebook", notification: "You have new friend suggestions." },
  decision_points: 2,
  delivered_at: [8, 600],
};

export const PERMISSION_CHALLENGE = {
  instance_id: "u1:w1:permission",
  user_id: "u1",
  kind: "permission_prompt",
  payload: { app: "Calculator", permission: "camera" },
  decision_points: 1,
  delivered_at: [8, 700],
};
