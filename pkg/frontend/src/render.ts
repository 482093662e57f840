import { renderHighlightedText } from "./highlight.js";
import { renderAnswerText } from "./markdown.js";
import type { ViewState } from "./state.js";
import type { Citation, Message, Session } from "./types.js";

export interface Handlers {
  onSelectSession(sessionId: string): void;
  onCreateSession(title: string): void;
  onSendMessage(text: string): void;
  onToggleMode(): void;
  onOpenSource(citation: Citation): void;
  onCloseSource(): void;
  onSubmitRating(messageId: string, score: number, comment?: string): void;
  onRetryBanner(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderSessionList(
  doc: Document,
  state: ViewState,
  handlers: Handlers,
): HTMLElement {
  const aside = el(doc, "aside", "session-list");
  const form = el(doc, "form", "new-session");
  const input = el(doc, "input") as HTMLInputElement;
  input.placeholder = "New conversation title";
  input.maxLength = 200;
  input.name = "title";
  const button = el(doc, "button", "", "New chat") as HTMLButtonElement;
  button.type = "submit";
  form.append(input, button);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (input.value.trim()) handlers.onCreateSession(input.value.trim());
  });
  aside.appendChild(form);

  const list = el(doc, "ul");
  for (const session of state.sessions) {
    const item = el(doc, "li");
    const link = el(doc, "button", "session-item", session.title || "(untitled)") as HTMLButtonElement;
    link.dataset.sessionId = session.session_id;
    if (state.active?.session_id === session.session_id) link.classList.add("active");
    link.addEventListener("click", () => handlers.onSelectSession(session.session_id));
    item.appendChild(link);
    list.appendChild(item);
  }
  aside.appendChild(list);
  return aside;
}

function citationChip(doc: Document, citation: Citation, handlers: Handlers): HTMLElement {
  const label = citation.page === null
    ? citation.filename
    : `${citation.filename} p.${citation.page}`;
  const chip = el(doc, "button", "citation-chip", label) as HTMLButtonElement;
  chip.dataset.chunkId = citation.chunk_id;
  chip.title = citation.excerpt;
  chip.addEventListener("click", () => handlers.onOpenSource(citation));
  return chip;
}

function ratingControl(doc: Document, message: Message, state: ViewState, handlers: Handlers): HTMLElement {
  const wrap = el(doc, "div", "rating");
  if (message.rating) {
    wrap.appendChild(el(doc, "span", "rating-value", `rated ${message.rating.score}/10`));
  }
  if (state.queuedRatings.some((q) => q.messageId === message.message_id)) {
    wrap.appendChild(el(doc, "span", "rating-queued", "rating queued, will retry"));
  }
  const form = el(doc, "form", "rating-form");
  const score = el(doc, "input") as HTMLInputElement;
  score.type = "number";
  score.min = "0";
  score.max = "10";
  score.step = "1";
  score.name = "score";
  score.value = message.rating ? String(message.rating.score) : "";
  const comment = el(doc, "input") as HTMLInputElement;
  comment.type = "text";
  comment.name = "comment";
  comment.placeholder = "optional comment";
  const submit = el(doc, "button", "", "Rate") as HTMLButtonElement;
  submit.type = "submit";
  form.append(score, comment, submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const value = Number(score.value);
    if (Number.isInteger(value) && value >= 0 && value <= 10) {
      handlers.onSubmitRating(message.message_id, value, comment.value || undefined);
    }
  });
  wrap.appendChild(form);
  return wrap;
}

function messageBubble(doc: Document, message: Message, state: ViewState, handlers: Handlers): HTMLElement {
  const bubble = el(doc, "article", `bubble ${message.role}`);
  bubble.dataset.messageId = message.message_id;
  const body = el(doc, "div", "bubble-body");
  body.setAttribute("dir", "auto"); // Arabic content renders RTL
  renderAnswerText(body, message.text);
  bubble.appendChild(body);

  if (message.role === "assistant") {
    if (message.degraded) {
      bubble.appendChild(el(doc, "span", "degraded-badge", "⚠ degraded answer"));
    }
    if (message.citations.length) {
      const chips = el(doc, "div", "citations");
      for (const citation of message.citations) chips.appendChild(citationChip(doc, citation, handlers));
      bubble.appendChild(chips);
    }
    const meta = el(doc, "div", "meta");
    meta.appendChild(el(doc, "span", "latency", `${message.latency_s.toFixed(2)}s`));
    meta.appendChild(el(doc, "span", "mode-tag", message.mode));
    if (message.trace) {
      meta.appendChild(el(doc, "span", "trace-tag", `${message.trace.length} agent steps`));
    }
    bubble.appendChild(meta);
    bubble.appendChild(ratingControl(doc, message, state, handlers));
  }
  return bubble;
}

function composer(doc: Document, state: ViewState, handlers: Handlers): HTMLElement {
  const form = el(doc, "form", "composer");
  const textarea = el(doc, "textarea") as HTMLTextAreaElement;
  textarea.name = "text";
  textarea.placeholder = "Ask about the guidelines (FR / AR / EN)…";
  textarea.setAttribute("dir", "auto");
  const modeButton = el(doc, "button", "mode-toggle", `mode: ${state.mode}`) as HTMLButtonElement;
  modeButton.type = "button";
  modeButton.addEventListener("click", () => handlers.onToggleMode());
  const send = el(doc, "button", "send", "Send") as HTMLButtonElement;
  send.type = "submit";
  send.disabled = state.pendingRequest;
  form.append(textarea, modeButton, send);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (textarea.value.trim() && !state.pendingRequest) {
      handlers.onSendMessage(textarea.value.trim());
      textarea.value = "";
    }
  });
  return form;
}

function renderThread(doc: Document, session: Session | null, state: ViewState, handlers: Handlers): HTMLElement {
  const main = el(doc, "main", "chat");
  if (state.banner) {
    const banner = el(doc, "div", "banner");
    banner.appendChild(el(doc, "span", "", state.banner));
    const retry = el(doc, "button", "", "Retry") as HTMLButtonElement;
    retry.addEventListener("click", () => handlers.onRetryBanner());
    banner.appendChild(retry);
    main.appendChild(banner);
  }
  if (!session) {
    main.appendChild(el(doc, "p", "placeholder", "Select or create a conversation."));
    return main;
  }
  main.appendChild(el(doc, "h2", "session-title", session.title));
  const thread = el(doc, "div", "thread");
  for (const message of session.messages) {
    thread.appendChild(messageBubble(doc, message, state, handlers));
  }
  if (state.pendingRequest) {
    thread.appendChild(el(doc, "div", "pending", "…waiting for answer"));
  }
  main.appendChild(thread);
  main.appendChild(composer(doc, state, handlers));
  return main;
}

function renderSourcePanel(doc: Document, state: ViewState, handlers: Handlers): HTMLElement | null {
  const panel = state.sourcePanel;
  if (!panel) return null;
  const section = el(doc, "section", "source-panel");
  const close = el(doc, "button", "close", "×") as HTMLButtonElement;
  close.addEventListener("click", () => handlers.onCloseSource());
  section.appendChild(close);
  if (panel.unavailable) {
    section.appendChild(el(doc, "p", "source-missing", "source unavailable"));
    return section;
  }
  if (!panel.source) {
    section.appendChild(el(doc, "p", "", "loading source…"));
    return section;
  }
  const source = panel.source;
  const heading = source.page === null
    ? source.filename
    : `${source.filename}, page ${source.page}`;
  section.appendChild(el(doc, "h3", "source-heading", heading));
  const textBox = el(doc, "div", "source-text");
  renderHighlightedText(textBox, source.full_chunk_text, panel.excerpt);
  section.appendChild(textBox);
  if (source.html) {
    const tableBox = el(doc, "div", "source-table");
    // corpus-provided table markup from our own backend
    tableBox.innerHTML = source.html;
    section.appendChild(tableBox);
  }
  return section;
}

/** Full re-render of the app into `root`. The server is the source of truth;
 * this view is a pure function of the state. */
export function renderApp(root: HTMLElement, state: ViewState, handlers: Handlers): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  const layout = el(doc, "div", "layout");
  layout.appendChild(renderSessionList(doc, state, handlers));
  layout.appendChild(renderThread(doc, state.active, state, handlers));
  const panel = renderSourcePanel(doc, state, handlers);
  if (panel) layout.appendChild(panel);
  root.appendChild(layout);
}
