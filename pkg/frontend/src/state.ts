import type { Mode, Session, SessionSummary, SourcePayload } from "./types.js";

export interface SourcePanelState {
  chunkId: string;
  excerpt: string;
  source: SourcePayload | null;
  unavailable: boolean;
}

export interface QueuedRating {
  messageId: string;
  score: number;
  comment?: string;
}

export interface ViewState {
  sessions: SessionSummary[];
  active: Session | null;
  pendingRequest: boolean;
  mode: Mode;
  sourcePanel: SourcePanelState | null;
  banner: string | null;
  queuedRatings: QueuedRating[];
}

export function initialState(): ViewState {
  return {
    sessions: [],
    active: null,
    pendingRequest: false,
    mode: "enhanced",
    sourcePanel: null,
    banner: null,
    queuedRatings: [],
  };
}
