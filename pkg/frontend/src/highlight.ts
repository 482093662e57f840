/** Source-panel highlighting. The client never invents highlight text: a
 * range is marked only when the excerpt is a verbatim substring of the
 * fetched source text. */

export interface ExcerptRange {
  start: number;
  end: number;
}

export function findExcerpt(fullText: string, excerpt: string): ExcerptRange | null {
  if (!excerpt) return null;
  const start = fullText.indexOf(excerpt);
  if (start < 0) return null;
  return { start, end: start + excerpt.length };
}

/** Render `fullText` into `container` with exactly one <mark> over the
 * excerpt range, or plain text plus a notice when the excerpt is absent. */
export function renderHighlightedText(
  container: HTMLElement,
  fullText: string,
  excerpt: string,
): boolean {
  container.textContent = "";
  const doc = container.ownerDocument;
  const range = findExcerpt(fullText, excerpt);
  if (range === null) {
    const notice = doc.createElement("p");
    notice.className = "highlight-notice";
    notice.textContent = "Cited excerpt could not be located in this source.";
    container.appendChild(notice);
    const body = doc.createElement("pre");
    body.setAttribute("dir", "auto");
    body.textContent = fullText;
    container.appendChild(body);
    return false;
  }
  const body = doc.createElement("pre");
  body.setAttribute("dir", "auto");
  body.appendChild(doc.createTextNode(fullText.slice(0, range.start)));
  const mark = doc.createElement("mark");
  mark.textContent = fullText.slice(range.start, range.end);
  body.appendChild(mark);
  body.appendChild(doc.createTextNode(fullText.slice(range.end)));
  container.appendChild(body);
  return true;
}
