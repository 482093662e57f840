import type {
  ClientConfig,
  Message,
  Mode,
  Rating,
  Session,
  SessionSummary,
  SourcePayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number | null = null,
  ) {
    super(message);
  }

  get notFound(): boolean {
    return this.status === 404;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the /api/v1 HTTP JSON API. */
export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly config: ClientConfig,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const base = this.config.apiBaseUrl.replace(/\/+$/, "");
    let response: Response;
    try {
      response = await this.fetchImpl(`${base}/api/v1${path}`, {
        method,
        headers: {
          Authorization: `Bearer ${this.config.authToken}`,
          ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
        },
        body: body !== undefined ? JSON.stringify(body) : undefined,
      });
    } catch (err) {
      throw new ApiError(`network failure: ${String(err)}`, null);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { detail?: unknown };
        if (payload.detail !== undefined) detail = JSON.stringify(payload.detail);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(`${method} ${path} failed (${response.status}): ${detail}`, response.status);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  createSession(title: string): Promise<Session> {
    return this.request("POST", "/sessions", { title });
  }

  listSessions(): Promise<SessionSummary[]> {
    return this.request("GET", "/sessions");
  }

  getSession(sessionId: string): Promise<Session> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }

  postMessage(sessionId: string, text: string, mode: Mode): Promise<Message> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/messages`, {
      text,
      mode,
    });
  }

  getSource(chunkId: string): Promise<SourcePayload> {
    return this.request("GET", `/sources/${encodeURIComponent(chunkId)}`);
  }

  rateMessage(messageId: string, score: number, comment?: string): Promise<Rating> {
    return this.request("POST", `/messages/${encodeURIComponent(messageId)}/rating`, {
      score,
      ...(comment !== undefined ? { comment } : {}),
    });
  }
}
