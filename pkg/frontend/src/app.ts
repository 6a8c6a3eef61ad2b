/** Browser bootstrap: mounts the store onto the page and wires events. */

import { Client } from "./api";
import { renderError, renderMethodTree, renderTurn } from "./render";
import { Store } from "./state";

function mount(): void {
  const client = new Client("");
  const store = new Store(client);

  const chatLog = document.getElementById("chat-log") as HTMLElement;
  const treeView = document.getElementById("method-tree") as HTMLElement;
  const errorSlot = document.getElementById("error-slot") as HTMLElement;
  const input = document.getElementById("chat-input") as HTMLInputElement;
  const sendButton = document.getElementById("send") as HTMLButtonElement;

  let lastInput = "";

  function redraw(): void {
    const state = store.state;
    chatLog.innerHTML = state.turns
      .map((turn) => renderTurn(turn, state.methods, state.pendingRanking === turn.index))
      .join("");
    treeView.innerHTML = renderMethodTree(state.methods);
    errorSlot.innerHTML = renderError(state.error);
    sendButton.disabled = state.busy;
    chatLog.scrollTop = chatLog.scrollHeight;
  }

  store.subscribe(redraw);

  async function send(): Promise<void> {
    const text = input.value.trim();
    if (!text) return;
    lastInput = text;
    input.value = "";
    await store.chatTurn(text);
  }

  sendButton.addEventListener("click", () => void send());
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void send();
  });

  // Drag-to-rank: reorder cards within the pending turn, submit reads the
  // visual order (best first).
  let dragged: HTMLElement | null = null;
  chatLog.addEventListener("dragstart", (event) => {
    const card = (event.target as HTMLElement).closest<HTMLElement>(".card[draggable]");
    if (card) dragged = card;
  });
  chatLog.addEventListener("dragover", (event) => {
    if (dragged) event.preventDefault();
  });
  chatLog.addEventListener("drop", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>(".card[draggable]");
    if (!dragged || !target || target === dragged) return;
    event.preventDefault();
    const container = target.parentElement as HTMLElement;
    const cards = [...container.children];
    if (cards.indexOf(dragged) < cards.indexOf(target)) {
      container.insertBefore(dragged, target.nextSibling);
    } else {
      container.insertBefore(dragged, target);
    }
    dragged = null;
  });

  chatLog.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest<HTMLButtonElement>("button[data-action]");
    if (!button) return;
    const action = button.dataset.action;
    if (action === "confirm") {
      void store.rankCandidates([1]);
    } else if (action === "submit-ranking") {
      const turnIndex = Number(button.dataset.turn);
      const section = chatLog.querySelector(`section[data-turn="${turnIndex}"]`);
      if (!section) return;
      const ordering = [...section.querySelectorAll<HTMLElement>(".card")].map((card) =>
        Number(card.dataset.card),
      );
      void store.rankCandidates(ordering);
    }
  });

  treeView.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest<HTMLButtonElement>(
      'button[data-action="delete-method"]',
    );
    if (button?.dataset.method) void store.deleteMethod(button.dataset.method);
  });

  errorSlot.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest<HTMLButtonElement>("button[data-action]");
    if (!button) return;
    if (button.dataset.action === "dismiss") store.dismissError();
    if (button.dataset.action === "retry") {
      store.dismissError();
      if (lastInput) {
        input.value = lastInput; // preserve the failed input for resubmission
      }
    }
  });

  void store.openSession();
}

document.addEventListener("DOMContentLoaded", mount);
