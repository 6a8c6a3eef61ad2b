/**
 * Wire types for the methodforge HTTP API plus the derived view model.
 * Every view field is reconstructible from service responses alone; the UI
 * holds no truth of its own.
 */

// -- service payloads -----------------------------------------------------

export interface SessionInfo {
  session_id: string;
  user_id: string | null;
}

export interface OutputCard {
  tag: string; // method id, or "no-method" for fallback outputs
  text: string;
}

export interface QueryResponse {
  outputs: OutputCard[];
  applied_method_ids: string[];
  fallback_used: boolean;
  turn_index: number;
}

export interface RankResponse {
  effectiveness: Record<string, number>;
}

export interface ScoreView {
  effectiveness: number;
  rated: boolean;
  times_used: number;
  times_top_ranked: number;
}

export interface MethodRecord {
  id: string;
  problem: string;
  solution_parts: { role: string; text: string; part_score: number }[];
  external_refs: { descriptor: string; link: string }[];
  format: string;
  scope: string;
  source: string;
  created_at: number;
  score: ScoreView;
  node_id: string;
}

export interface TranscriptTurn {
  user_input: string;
  injected_method_ids: string[];
  filtered_method_ids: string[];
  candidate_outputs: { method_id: string | null; text: string }[];
  chosen_output: string;
  fallback_used: boolean;
  internal_choice: string | null;
  ranking: number[] | null;
}

export interface Transcript {
  session_id: string;
  user_id: string | null;
  turns: TranscriptTurn[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
}

// -- view model -------------------------------------------------------------

export interface CardView {
  methodId: string | null;
  text: string;
}

export interface TurnView {
  index: number;
  input: string;
  cards: CardView[];
  fallbackUsed: boolean;
  ranked: boolean;
}

/** How the feedback control renders: drag ordering for 2+, confirm for 1. */
export type RankingMode = "order" | "confirm";

export interface ViewState {
  sessionId: string | null;
  turns: TurnView[];
  /** Index of the turn awaiting a ranking; only ever the latest unranked turn. */
  pendingRanking: number | null;
  methods: MethodRecord[];
  error: ApiErrorBody | null;
  busy: boolean;
}
