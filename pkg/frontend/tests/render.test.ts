import { beforeEach, describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import { App, type Api } from "../src/app.js";
import type {
  Message,
  Mode,
  Rating,
  Session,
  SessionSummary,
  SourcePayload,
} from "../src/types.js";

function assistantMessage(overrides: Partial<Message> = {}): Message {
  return {
    message_id: "s1:000002",
    session_id: "s1",
    seq: 2,
    role: "assistant",
    text: "Le BCG se donne à la naissance. [1]",
    mode: "enhanced",
    created_at: "2024-01-01T00:00:00+00:00",
    citations: [
      { chunk_id: "c1", filename: "guide.pdf", excerpt: "BCG se donne", page: 2 },
    ],
    trace: null,
    latency_s: 0.12,
    degraded: false,
    rating: null,
    ...overrides,
  };
}

function userMessage(): Message {
  return {
    message_id: "s1:000001",
    session_id: "s1",
    seq: 1,
    role: "user",
    text: "Quand le BCG ?",
    mode: "enhanced",
    created_at: "2024-01-01T00:00:00+00:00",
    citations: [],
    trace: null,
    latency_s: 0,
    degraded: false,
    rating: null,
  };
}

class FakeApi implements Api {
  session: Session = {
    session_id: "s1",
    title: "Cas",
    created_at: "2024-01-01T00:00:00+00:00",
    message_count: 2,
    messages: [userMessage(), assistantMessage()],
  };
  source: SourcePayload = {
    chunk_id: "c1",
    filename: "guide.pdf",
    page: 2,
    full_chunk_text: "Le BCG se donne à la naissance, dose unique.",
    html: null,
  };
  ratings: Array<{ messageId: string; score: number }> = [];
  failRating = false;
  failSourceWith: ApiError | null = null;

  async createSession(title: string): Promise<Session> {
    return { ...this.session, title };
  }
  async listSessions(): Promise<SessionSummary[]> {
    const { messages, ...summary } = this.session;
    return [summary];
  }
  async getSession(): Promise<Session> {
    return this.session;
  }
  async postMessage(_s: string, _t: string, _m: Mode): Promise<Message> {
    return assistantMessage();
  }
  async getSource(): Promise<SourcePayload> {
    if (this.failSourceWith) throw this.failSourceWith;
    return this.source;
  }
  async rateMessage(messageId: string, score: number): Promise<Rating> {
    if (this.failRating) throw new ApiError("offline", null);
    this.ratings.push({ messageId, score });
    const rating = { score, comment: null, created_at: "2024-01-01T00:00:00+00:00" };
    this.session.messages = this.session.messages.map((m) =>
      m.message_id === messageId ? { ...m, rating } : m,
    );
    return rating;
  }
}

function root(): HTMLElement {
  document.body.innerHTML = "";
  const node = document.createElement("div");
  document.body.appendChild(node);
  return node;
}

describe("chat rendering", () => {
  let api: FakeApi;
  let app: App;
  let box: HTMLElement;

  beforeEach(async () => {
    api = new FakeApi();
    box = root();
    app = new App(api, box);
    await app.init();
    await app.openSession("s1");
  });

  it("renders bubbles in order with chips and latency on the assistant", () => {
    const bubbles = box.querySelectorAll(".bubble");
    expect(bubbles).toHaveLength(2);
    expect(bubbles[0].classList.contains("user")).toBe(true);
    expect(bubbles[1].classList.contains("assistant")).toBe(true);
    const chips = bubbles[1].querySelectorAll(".citation-chip");
    expect(chips.length).toBeGreaterThanOrEqual(1);
    expect(chips[0].textContent).toBe("guide.pdf p.2");
    expect(bubbles[1].querySelector(".latency")!.textContent).toBe("0.12s");
  });

  it("shows the mode toggle and flips it", () => {
    const toggle = box.querySelector(".mode-toggle") as HTMLButtonElement;
    expect(toggle.textContent).toBe("mode: enhanced");
    toggle.click();
    expect((box.querySelector(".mode-toggle") as HTMLButtonElement).textContent).toBe(
      "mode: agentic",
    );
  });

  it("renders markdown tables in answers as tables", async () => {
    api.session.messages = [
      userMessage(),
      assistantMessage({ text: "| Vaccin | Âge |\n| --- | --- |\n| BCG | naissance |" }),
    ];
    await app.openSession("s1");
    expect(box.querySelector(".bubble.assistant table")).not.toBeNull();
  });

  it("shows a warning badge on degraded messages", async () => {
    api.session.messages = [userMessage(), assistantMessage({ degraded: true })];
    await app.openSession("s1");
    expect(box.querySelector(".degraded-badge")).not.toBeNull();
  });

  it("opens the source panel with the excerpt highlighted", async () => {
    await app.openSource(api.session.messages[1].citations[0]);
    const panel = box.querySelector(".source-panel")!;
    const marks = panel.querySelectorAll("mark");
    expect(marks).toHaveLength(1);
    expect(marks[0].textContent).toBe("BCG se donne");
    expect(panel.querySelector(".source-heading")!.textContent).toBe("guide.pdf, page 2");
  });

  it("shows 'source unavailable' on a 404", async () => {
    api.failSourceWith = new ApiError("gone", 404);
    await app.openSource(api.session.messages[1].citations[0]);
    expect(box.querySelector(".source-missing")!.textContent).toBe("source unavailable");
  });

  it("renders table sources as HTML tables in the panel", async () => {
    api.source.html = "<table><tr><td>BCG</td></tr></table>";
    await app.openSource(api.session.messages[1].citations[0]);
    expect(box.querySelector(".source-panel .source-table table")).not.toBeNull();
  });

  it("shows the stored rating after submitting", async () => {
    await app.submitRating("s1:000002", 8);
    expect(api.ratings).toEqual([{ messageId: "s1:000002", score: 8 }]);
    expect(box.querySelector(".rating-value")!.textContent).toBe("rated 8/10");
  });

  it("queues a rating on network failure and flushes on retry", async () => {
    api.failRating = true;
    await app.submitRating("s1:000002", 6);
    expect(box.querySelector(".rating-queued")).not.toBeNull();
    api.failRating = false;
    await app.flushQueuedRatings();
    expect(api.ratings).toEqual([{ messageId: "s1:000002", score: 6 }]);
    expect(box.querySelector(".rating-queued")).toBeNull();
  });

  it("keeps state and shows a retry banner when the API fails", async () => {
    api.getSession = async () => {
      throw new ApiError("boom", 500);
    };
    await app.openSession("s1");
    const banner = box.querySelector(".banner");
    expect(banner).not.toBeNull();
    expect(banner!.querySelector("button")!.textContent).toBe("Retry");
    // the previously loaded thread is still rendered (no state loss)
    expect(box.querySelectorAll(".bubble")).toHaveLength(2);
  });

  it("disables send while a request is pending", () => {
    app.state.pendingRequest = true;
    app.render();
    expect((box.querySelector(".send") as HTMLButtonElement).disabled).toBe(true);
    expect(box.querySelector(".pending")).not.toBeNull();
  });
});
