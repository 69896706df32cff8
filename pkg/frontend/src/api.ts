/** Thin typed client over the platform /v1 API.
 *
 * Every request carries the session's bearer token.  Challenge responses are
 * decision labels only: credential text typed into mock forms never reaches
 * this module.
 */

import type {
  Decision, HomePayload, LeaderboardEntry, LearningPayload,
  PendingChallenge, ResponseResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    readonly userId: string,
    private readonly token: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        "Content-Type": "application/json",
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as T;
  }

  home(): Promise<HomePayload> {
    return this.request("GET", `/v1/users/${this.userId}/home`);
  }

  /** The learning payload, without the server-side view flag: the client
   * logs views itself, exactly once per screen open. */
  learning(): Promise<LearningPayload> {
    return this.request("GET", `/v1/users/${this.userId}/learning?view=false`);
  }

  leaderboard(): Promise<LeaderboardEntry[]> {
    return this.request("GET", "/v1/leaderboard");
  }

  pendingChallenges(): Promise<PendingChallenge[]> {
    return this.request("GET", `/v1/users/${this.userId}/challenges/pending`);
  }

  logView(screen: "home" | "learning" | "leaderboard"): Promise<unknown> {
    return this.request("POST", `/v1/users/${this.userId}/views`, { screen });
  }

  submitChallenge(instanceId: string, decisions: Decision[]): Promise<ResponseResult> {
    return this.request("POST", `/v1/challenges/${instanceId}/response`, {
      instance_id: instanceId,
      decisions,
    });
  }
}
