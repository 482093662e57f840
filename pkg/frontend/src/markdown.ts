/** Minimal answer-text renderer: pipe tables become real tables, the rest
 * stays escaped text. Answers come from the service as Markdown-ish plain
 * text; only the table subset needs structure. */

function isTableLine(line: string): boolean {
  const trimmed = line.trim();
  return trimmed.startsWith("|") && trimmed.endsWith("|") && trimmed.length > 1;
}

function isSeparatorRow(cells: string[]): boolean {
  return cells.length > 0 && cells.every((c) => /^:?-{3,}:?$/.test(c.trim()));
}

function splitCells(line: string): string[] {
  const inner = line.trim().replace(/^\|/, "").replace(/\|$/, "");
  return inner.split(/(?<!\\)\|/).map((c) => c.replace(/\\\|/g, "|").trim());
}

function buildTable(doc: Document, lines: string[]): HTMLTableElement {
  const rows = lines.map(splitCells);
  const table = doc.createElement("table");
  let bodyRows = rows;
  if (rows.length >= 2 && isSeparatorRow(rows[1])) {
    const thead = doc.createElement("thead");
    const headRow = doc.createElement("tr");
    for (const cell of rows[0]) {
      const th = doc.createElement("th");
      th.textContent = cell;
      headRow.appendChild(th);
    }
    thead.appendChild(headRow);
    table.appendChild(thead);
    bodyRows = rows.slice(2);
  }
  const tbody = doc.createElement("tbody");
  for (const cells of bodyRows) {
    const tr = doc.createElement("tr");
    for (const cell of cells) {
      const td = doc.createElement("td");
      td.textContent = cell;
      tr.appendChild(td);
    }
    tbody.appendChild(tr);
  }
  table.appendChild(tbody);
  return table;
}

/** Render answer text into `container` (cleared first). Text nodes only —
 * answer content is never injected as raw HTML. */
export function renderAnswerText(container: HTMLElement, text: string): void {
  container.textContent = "";
  const doc = container.ownerDocument;
  const lines = text.split("\n");
  let buffer: string[] = [];
  let tableBuffer: string[] = [];

  const flushText = () => {
    if (!buffer.length) return;
    const p = doc.createElement("p");
    p.textContent = buffer.join("\n");
    p.setAttribute("dir", "auto");
    container.appendChild(p);
    buffer = [];
  };
  const flushTable = () => {
    if (!tableBuffer.length) return;
    container.appendChild(buildTable(doc, tableBuffer));
    tableBuffer = [];
  };

  for (const line of lines) {
    if (isTableLine(line)) {
      flushText();
      tableBuffer.push(line);
    } else {
      flushTable();
      if (line.trim()) {
        buffer.push(line);
      } else {
        flushText();
      }
    }
  }
  flushText();
  flushTable();
}
