export interface ClientConfig {
  apiBaseUrl: string;
  authToken: string;
}

export interface Citation {
  chunk_id: string;
  filename: string;
  excerpt: string;
  page: number | null;
}

export interface Rating {
  score: number;
  comment: string | null;
  created_at: string;
}

export interface TraceStep {
  thought: string;
  action:
    | { type: "call_tool"; tool_id: string; query: string }
    | { type: "finish"; answer: string };
  observation?: string;
}

export interface Message {
  message_id: string;
  session_id: string;
  seq: number;
  role: "user" | "assistant";
  text: string;
  mode: "enhanced" | "agentic";
  created_at: string;
  citations: Citation[];
  trace: TraceStep[] | null;
  latency_s: number;
  degraded: boolean;
  rating: Rating | null;
}

export interface SessionSummary {
  session_id: string;
  title: string;
  created_at: string;
  message_count: number;
}

export interface Session extends SessionSummary {
  messages: Message[];
}

export interface SourcePayload {
  chunk_id: string;
  filename: string;
  page: number | null;
  full_chunk_text: string;
  html: string | null;
}

export type Mode = "enhanced" | "agentic";
