/** Thin fetch client for the orchestrator HTTP API. */

import type {
  ApiErrorBody,
  MethodRecord,
  QueryResponse,
  RankResponse,
  SessionInfo,
  Transcript,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(`${base}${path}`, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
  } catch (error) {
    throw new ApiError(0, "service_unreachable", String(error));
  }
  if (!response.ok) {
    let body: Partial<ApiErrorBody> = {};
    try {
      body = await response.json();
    } catch {
      // non-JSON error body; fall through to defaults
    }
    throw new ApiError(
      response.status,
      body.code ?? "http_error",
      body.message ?? `request failed with ${response.status}`,
    );
  }
  return response.json() as Promise<T>;
}

export class Client {
  constructor(private readonly base: string) {}

  createSession(userId?: string): Promise<SessionInfo> {
    return request(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify(userId ? { user_id: userId } : {}),
    });
  }

  query(sessionId: string, text: string): Promise<QueryResponse> {
    return request(this.base, `/sessions/${sessionId}/query`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  rank(sessionId: string, turn: number, ordering: number[]): Promise<RankResponse> {
    return request(this.base, `/sessions/${sessionId}/rank`, {
      method: "POST",
      body: JSON.stringify({ turn, ordering }),
    });
  }

  transcript(sessionId: string): Promise<Transcript> {
    return request(this.base, `/sessions/${sessionId}/transcript`);
  }

  async methods(): Promise<MethodRecord[]> {
    const body = await request<{ methods: MethodRecord[] }>(this.base, "/methods");
    return body.methods;
  }

  deleteMethod(methodId: string): Promise<{ removed: string }> {
    return request(this.base, `/methods/${methodId}`, { method: "DELETE" });
  }

  resetRepository(): Promise<{ reset: boolean }> {
    return request(this.base, "/repository/reset", { method: "POST" });
  }

  health(): Promise<{ status: string }> {
    return request(this.base, "/healthz");
  }
}
