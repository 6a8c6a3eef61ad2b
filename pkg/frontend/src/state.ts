/**
 * View-state store. All transitions are pure functions of service responses,
 * so a reload that replays the transcript lands on the identical state.
 *
 * Concurrency contract: one in-flight request per session turn (`busy`), and
 * ranking is never optimistic - the state only moves on the service ack.
 */

import { ApiError, Client } from "./api";
import type {
  CardView,
  MethodRecord,
  QueryResponse,
  RankingMode,
  Transcript,
  TurnView,
  ViewState,
} from "./types";

export function emptyState(): ViewState {
  return {
    sessionId: null,
    turns: [],
    pendingRanking: null,
    methods: [],
    error: null,
    busy: false,
  };
}

function recomputePending(turns: TurnView[]): number | null {
  if (turns.length === 0) return null;
  const last = turns[turns.length - 1];
  return last.ranked ? null : last.index;
}

/** Fold one query response into the state; pendingRanking moves to the new turn. */
export function applyQuery(state: ViewState, input: string, response: QueryResponse): ViewState {
  const cards: CardView[] = response.outputs.map((o) => ({
    methodId: o.tag === "no-method" ? null : o.tag,
    text: o.text,
  }));
  const turn: TurnView = {
    index: response.turn_index,
    input,
    cards,
    fallbackUsed: response.fallback_used,
    ranked: false,
  };
  const turns = [...state.turns, turn];
  return { ...state, turns, pendingRanking: recomputePending(turns), error: null };
}

/** Mark a turn ranked after the service ack. */
export function applyRankAck(state: ViewState, turnIndex: number): ViewState {
  const turns = state.turns.map((t) => (t.index === turnIndex ? { ...t, ranked: true } : t));
  return { ...state, turns, pendingRanking: recomputePending(turns), error: null };
}

/** Rebuild the full turn list from a server transcript (reload path). */
export function fromTranscript(transcript: Transcript, methods: MethodRecord[]): ViewState {
  const turns: TurnView[] = transcript.turns.map((t, index) => ({
    index,
    input: t.user_input,
    cards: t.candidate_outputs.map((o) => ({ methodId: o.method_id, text: o.text })),
    fallbackUsed: t.fallback_used,
    ranked: t.ranking !== null,
  }));
  return {
    sessionId: transcript.session_id,
    turns,
    pendingRanking: recomputePending(turns),
    methods,
    error: null,
    busy: false,
  };
}

/** Ordering control shape for a turn: confirm button for one card, drag order otherwise. */
export function rankingMode(turn: TurnView): RankingMode {
  return turn.cards.length === 1 ? "confirm" : "order";
}

/** Problem summary shown on a candidate card's badge. */
export function badgeFor(card: CardView, methods: MethodRecord[]): string {
  if (card.methodId === null) return "no method";
  const method = methods.find((m) => m.id === card.methodId);
  if (!method) return card.methodId.slice(0, 12);
  const flat = method.problem.replace(/\s+/g, " ").trim();
  return flat.length > 60 ? `${flat.slice(0, 57)}...` : flat;
}

export class Store {
  state: ViewState = emptyState();
  private listeners: (() => void)[] = [];

  constructor(private readonly client: Client) {}

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private set(next: ViewState): void {
    this.state = next;
    for (const listener of this.listeners) listener();
  }

  private async guarded<T>(work: () => Promise<T>): Promise<T | null> {
    if (this.state.busy) return null; // single active request per session turn
    this.set({ ...this.state, busy: true });
    try {
      return await work();
    } catch (error) {
      const apiError =
        error instanceof ApiError ? error : new ApiError(0, "unexpected", String(error));
      this.set({ ...this.state, error: { code: apiError.code, message: apiError.message } });
      return null;
    } finally {
      this.set({ ...this.state, busy: false });
    }
  }

  async openSession(userId?: string): Promise<void> {
    await this.guarded(async () => {
      const info = await this.client.createSession(userId);
      this.set({ ...emptyState(), sessionId: info.session_id, busy: true });
      await this.refreshMethods();
    });
  }

  /** Send a chat turn; the new candidate cards become the pending ranking. */
  async chatTurn(input: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (!sessionId || !input.trim()) return;
    await this.guarded(async () => {
      const response = await this.client.query(sessionId, input);
      this.set(applyQuery(this.state, input, response));
      await this.refreshMethods();
    });
  }

  /** Submit the ordering for the pending turn; state moves only on ack. */
  async rankCandidates(ordering: number[]): Promise<void> {
    const sessionId = this.state.sessionId;
    const turnIndex = this.state.pendingRanking;
    if (!sessionId || turnIndex === null) return;
    await this.guarded(async () => {
      await this.client.rank(sessionId, turnIndex, ordering);
      this.set(applyRankAck(this.state, turnIndex));
      await this.refreshMethods(); // score badges pick up the new effectiveness
    });
  }

  async refreshMethods(): Promise<void> {
    const methods = await this.client.methods();
    this.set({ ...this.state, methods });
  }

  async deleteMethod(methodId: string): Promise<void> {
    await this.guarded(async () => {
      await this.client.deleteMethod(methodId);
      await this.refreshMethods();
    });
  }

  /** Reconstruct the whole view from the service (reload path). */
  async reload(): Promise<void> {
    const sessionId = this.state.sessionId;
    if (!sessionId) return;
    await this.guarded(async () => {
      const [transcript, methods] = await Promise.all([
        this.client.transcript(sessionId),
        this.client.methods(),
      ]);
      this.set(fromTranscript(transcript, methods));
    });
  }

  dismissError(): void {
    this.set({ ...this.state, error: null });
  }
}
