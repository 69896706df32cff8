/** Payload shapes of the platform /v1 API. */

export interface HomePayload {
  user_id: string;
  group: "adaptive" | "baseline";
  day: number | null;
  overall: number | null;
  active: number | null;
  passive: number | null;
  level: "beginner" | "intermediate" | "pro" | null;
}

export interface LearningRow {
  criterion_id: string;
  description: string;
  scaled: number;
  delta: number | null;
  article_url: string | null;
}

export interface PenaltyEvent {
  criterion_id: string;
  reason: string;
  description: string;
  points_effect: number;
}

export interface RecommendationEntry {
  article_id: string;
  topic: string;
  url: string;
  score: number | null;
  delta: number | null;
}

export interface UnlockedArticle {
  article_id: string;
  topic: string;
  grade: number;
  day: number;
  url: string;
}

export interface LearningPayload {
  user_id: string;
  day: number;
  passive: number;
  passive_delta: number | null;
  rows: LearningRow[];
  penalties: PenaltyEvent[];
  recommendations: RecommendationEntry[];
  unlocked: UnlockedArticle[];
}

export interface LeaderboardEntry {
  rank: number;
  user_id: string;
  points: number | null;
  level: string | null;
}

export interface PendingChallenge {
  instance_id: string;
  user_id: string;
  kind: "email" | "permission_prompt" | "push_notification";
  payload: Record<string, string>;
  decision_points: number;
  delivered_at: [number, number] | null;
}

/** Decision labels the server grades; never anything a user typed. */
export type Decision = "safe" | "unsafe" | "not_reached";

export interface ResponseResult {
  instance_id: string;
  fraction: number;
  decisions: Decision[];
}
