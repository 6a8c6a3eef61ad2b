/**
 * End-to-end flow against the real mock-backed service: teach a method in
 * chat, watch the badge transition, rank a two-card turn, and verify the
 * effectiveness badge and reload reconstruction.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client } from "../src/api";
import { badgeFor, fromTranscript, Store } from "../src/state";
import { renderMethodTree, renderTurn } from "../src/render";

const PORT = 8493;
const BASE = `http://127.0.0.1:${PORT}`;

const SERVER_SCRIPT = `
from methodforge.config import Settings
from methodforge.embedding import HashingEmbedder
from methodforge.evalharness import bundled_path
from methodforge.gateway import MockBackend, load_fixture
from methodforge.orchestrator import Orchestrator
from methodforge.repository import MethodRepository
from methodforge.service import create_app
import uvicorn

settings = Settings()
fixture = load_fixture(bundled_path("software_existence"))
backend = MockBackend(fixture, HashingEmbedder(settings.dimension, settings.seed))
app = create_app(Orchestrator(MethodRepository(settings), backend, settings))
uvicorn.run(app, host="127.0.0.1", port=${PORT}, log_level="error")
`;

const CS1 =
  "When we create a project, then we try to create another project. Please tell " +
  "how to re-create a project in SuHongKey software.";
const TEACH =
  "For this kind of question, you should first check whether the SuHongKey software exists or not.";
const CS3 =
  "When we create a project, then we try to create another project. Please tell " +
  "how to re-create a project in HongHanKey software.";
const ICS =
  "When working with the software, you may need to duplicate an existing project for " +
  "modification or testing purposes. This approach is particularly useful for scenarios " +
  "such as adjusting project parameters to verify their impact, or testing whether " +
  "trainees can correctly identify incorrect configurations. The process involves first " +
  "creating the initial project, then generating a duplicate copy to work with. This " +
  "method allows for controlled experimentation while preserving the original project " +
  "settings. Our target is the HongHanKey software. We want to verify on it. Please " +
  "tell how to use this software for verifying the parameter impact.";
const TEACH_GENERAL =
  "Please check whether the target software exists or not. If it does not exist, do " +
  "not proceed with further output - just inform the user.";

let server: ChildProcess;

async function waitForHealth(): Promise<void> {
  for (let attempt = 0; attempt < 60; attempt++) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  server = spawn("python3", ["-c", SERVER_SCRIPT], { stdio: "ignore" });
  await waitForHealth();
}, 30_000);

afterAll(() => {
  server?.kill();
});

describe("chat and ranking against the mock-backed service", () => {
  const client = new Client(BASE);
  const store = new Store(client);

  it("shows a no-method badge on the untaught baseline turn", async () => {
    await store.openSession();
    expect(store.state.sessionId).not.toBeNull();
    await store.chatTurn(CS1);
    const turn = store.state.turns[0];
    expect(turn.fallbackUsed).toBe(true);
    expect(badgeFor(turn.cards[0], store.state.methods)).toBe("no method");
    const html = renderTurn(turn, store.state.methods, false);
    expect(html).toContain("badge-none");
  }, 15_000);

  it("transitions to the method badge after teaching", async () => {
    await store.chatTurn(TEACH);
    expect(store.state.methods).toHaveLength(1);
    await store.chatTurn(CS3);
    const turn = store.state.turns[2];
    expect(turn.fallbackUsed).toBe(false);
    const badge = badgeFor(turn.cards[0], store.state.methods);
    expect(badge).toContain("SuHongKey");
    expect(badge).not.toBe("no method");
  }, 15_000);

  it("ranking a two-card turn moves the winner's badge to 0.65", async () => {
    await store.chatTurn(ICS); // method1 applied, baseline for the general method
    await store.chatTurn(TEACH_GENERAL);
    expect(store.state.methods).toHaveLength(2);
    await store.chatTurn(ICS);
    const turn = store.state.turns[store.state.turns.length - 1];
    expect(turn.cards).toHaveLength(2);
    expect(store.state.pendingRanking).toBe(turn.index);

    await store.rankCandidates([1, 2]);
    expect(store.state.pendingRanking).toBeNull();
    const winnerId = turn.cards[0].methodId as string;
    const winner = store.state.methods.find((m) => m.id === winnerId);
    expect(winner?.score.effectiveness).toBeCloseTo(0.65, 12);
    expect(renderMethodTree(store.state.methods)).toContain("eff 0.65");
  }, 15_000);

  it("double ranking is rejected with a conflict code", async () => {
    const turnIndex = store.state.turns.length - 1;
    const error = await client.rank(store.state.sessionId as string, turnIndex, [1, 2]).catch(
      (e: unknown) => e,
    );
    expect((error as { code: string }).code).toBe("ranking_rejected");
  }, 15_000);

  it("reload reconstructs the identical view state from the service", async () => {
    const sessionId = store.state.sessionId as string;
    const [transcript, methods] = await Promise.all([
      client.transcript(sessionId),
      client.methods(),
    ]);
    const reloaded = fromTranscript(transcript, methods);
    expect(reloaded.turns).toEqual(store.state.turns);
    expect(reloaded.pendingRanking).toEqual(store.state.pendingRanking);
    expect(reloaded.methods).toEqual(store.state.methods);
    expect(reloaded.sessionId).toBe(store.state.sessionId);
  }, 15_000);
});
