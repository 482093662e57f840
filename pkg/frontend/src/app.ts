import { ApiError } from "./api.js";
import { initialState, type ViewState } from "./state.js";
import { renderApp, type Handlers } from "./render.js";
import type { Citation, Message, Mode, Rating, Session, SessionSummary, SourcePayload } from "./types.js";

/** Structural surface the app needs; satisfied by ApiClient and by test fakes. */
export interface Api {
  createSession(title: string): Promise<Session>;
  listSessions(): Promise<SessionSummary[]>;
  getSession(sessionId: string): Promise<Session>;
  postMessage(sessionId: string, text: string, mode: Mode): Promise<Message>;
  getSource(chunkId: string): Promise<SourcePayload>;
  rateMessage(messageId: string, score: number, comment?: string): Promise<Rating>;
}

export class App {
  readonly state: ViewState = initialState();

  constructor(
    private readonly api: Api,
    private readonly root: HTMLElement,
  ) {}

  async init(): Promise<void> {
    await this.refreshSessions();
    this.render();
  }

  render(): void {
    renderApp(this.root, this.state, this.handlers());
  }

  private handlers(): Handlers {
    return {
      onSelectSession: (id) => void this.openSession(id),
      onCreateSession: (title) => void this.createSession(title),
      onSendMessage: (text) => void this.sendMessage(text),
      onToggleMode: () => this.toggleMode(),
      onOpenSource: (citation) => void this.openSource(citation),
      onCloseSource: () => {
        this.state.sourcePanel = null;
        this.render();
      },
      onSubmitRating: (messageId, score, comment) =>
        void this.submitRating(messageId, score, comment),
      onRetryBanner: () => void this.retryBanner(),
    };
  }

  toggleMode(): void {
    this.state.mode = this.state.mode === "enhanced" ? "agentic" : "enhanced";
    this.render();
  }

  async refreshSessions(): Promise<void> {
    try {
      this.state.sessions = await this.api.listSessions();
      this.state.banner = null;
    } catch (err) {
      this.state.banner = `Could not load sessions: ${String(err)}`;
    }
  }

  async createSession(title: string): Promise<void> {
    try {
      const session = await this.api.createSession(title);
      this.state.active = session;
      await this.refreshSessions();
    } catch (err) {
      this.state.banner = `Could not create the session: ${String(err)}`;
    }
    this.render();
  }

  async openSession(sessionId: string): Promise<void> {
    try {
      this.state.active = await this.api.getSession(sessionId);
      this.state.banner = null;
    } catch (err) {
      this.state.banner = `Could not open the session: ${String(err)}`;
    }
    this.render();
  }

  /** One in-flight message per session view; state is re-read from the
   * server after the reply so a reload reproduces the same thread. */
  async sendMessage(text: string): Promise<void> {
    const active = this.state.active;
    if (!active || this.state.pendingRequest) return;
    this.state.pendingRequest = true;
    this.state.banner = null;
    this.render();
    try {
      await this.api.postMessage(active.session_id, text, this.state.mode);
      this.state.active = await this.api.getSession(active.session_id);
    } catch (err) {
      this.state.banner = `Sending failed: ${String(err)}`;
    } finally {
      this.state.pendingRequest = false;
    }
    this.render();
  }

  async openSource(citation: Citation): Promise<void> {
    this.state.sourcePanel = {
      chunkId: citation.chunk_id,
      excerpt: citation.excerpt,
      source: null,
      unavailable: false,
    };
    this.render();
    try {
      const source = await this.api.getSource(citation.chunk_id);
      if (this.state.sourcePanel?.chunkId === citation.chunk_id) {
        this.state.sourcePanel.source = source;
      }
    } catch (err) {
      if (this.state.sourcePanel?.chunkId === citation.chunk_id) {
        this.state.sourcePanel.unavailable = err instanceof ApiError && err.notFound;
        if (!this.state.sourcePanel.unavailable) {
          this.state.banner = `Could not fetch the source: ${String(err)}`;
          this.state.sourcePanel = null;
        }
      }
    }
    this.render();
  }

  /** Ratings are never silently lost: a failed submit is queued and retried. */
  async submitRating(messageId: string, score: number, comment?: string): Promise<void> {
    try {
      await this.api.rateMessage(messageId, score, comment);
      this.state.queuedRatings = this.state.queuedRatings.filter(
        (q) => q.messageId !== messageId,
      );
      if (this.state.active) {
        this.state.active = await this.api.getSession(this.state.active.session_id);
      }
    } catch (err) {
      if (err instanceof ApiError && err.status !== null) {
        // the server rejected it (e.g. validation); surface, don't queue
        this.state.banner = `Rating rejected: ${String(err)}`;
      } else {
        this.state.queuedRatings = [
          ...this.state.queuedRatings.filter((q) => q.messageId !== messageId),
          { messageId, score, comment },
        ];
      }
    }
    this.render();
  }

  async retryBanner(): Promise<void> {
    this.state.banner = null;
    await this.flushQueuedRatings();
    await this.refreshSessions();
    if (this.state.active) {
      await this.openSession(this.state.active.session_id);
      return;
    }
    this.render();
  }

  async flushQueuedRatings(): Promise<void> {
    const queued = [...this.state.queuedRatings];
    for (const entry of queued) {
      await this.submitRating(entry.messageId, entry.score, entry.comment);
    }
  }
}
