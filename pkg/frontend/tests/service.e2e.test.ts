/** End-to-end: the web client against a live service with mock providers.
 *
 * Builds the fixture corpus artifacts, starts `guideqa serve` as a child
 * process, then drives the real App + ApiClient (jsdom DOM, node fetch).
 */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";

const FRONTEND_DIR = dirname(dirname(fileURLToPath(import.meta.url)));
const REPO_ROOT = resolve(FRONTEND_DIR, "..");
const FIXTURES = join(REPO_ROOT, "tests", "fixtures");
const TOKEN = "webui-e2e-token";
const PORT = 8931 + Math.floor(Math.random() * 400);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;

function writeConfig(workDir: string): string {
  const configPath = join(workDir, "guideqa.toml");
  const config = `
[providers]
llm_script = ${JSON.stringify(join(FIXTURES, "llm_script.json"))}

[corpus]
drop_kinds = ["Footer"]
delimiter_pairs = [["Sommaire", "Préambule"]]

[storage]
chunks_path = ${JSON.stringify(join(workDir, "chunks.json"))}
collection_root = ${JSON.stringify(join(workDir, "collections"))}
state_dir = ${JSON.stringify(join(workDir, "state"))}

[service]
host = "127.0.0.1"
port = ${PORT}
auth_token_env = "GUIDEQA_TOKEN"
`;
  writeFileSync(configPath, config, "utf-8");
  return configPath;
}

async function waitForHealth(): Promise<void> {
  const deadline = Date.now() + 60_000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/api/v1/health`, {
        headers: { Authorization: `Bearer ${TOKEN}` },
      });
      if (response.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("service did not become healthy in time");
}

beforeAll(async () => {
  const workDir = mkdtempSync(join(tmpdir(), "guideqa-webui-"));
  const configPath = writeConfig(workDir);
  const sources = [
    join(FIXTURES, "corpus", "guide_vaccinal.elements.json"),
    join(FIXTURES, "corpus", "oms_recommandations.elements.json"),
  ];
  execFileSync("python3", ["-m", "guideqa.cli", "--config", configPath, "chunk", ...sources]);
  execFileSync("python3", ["-m", "guideqa.cli", "--config", configPath, "index"]);
  server = spawn("python3", ["-m", "guideqa.cli", "--config", configPath, "serve"], {
    env: { ...process.env, GUIDEQA_TOKEN: TOKEN },
    stdio: "ignore",
  });
  await waitForHealth();
});

afterAll(() => {
  server?.kill("SIGTERM");
});

function makeApp(): { app: App; root: HTMLElement } {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.appendChild(root);
  const client = new ApiClient(
    { apiBaseUrl: BASE, authToken: TOKEN },
    (input, init) => fetch(input, init),
  );
  return { app: new App(client, root), root };
}

describe("web client against the live service", () => {
  it("runs the full citation → highlight → rating → reload flow", async () => {
    const { app, root } = makeApp();
    await app.init();
    await app.createSession("Consultation BCG");
    const sessionId = app.state.active!.session_id;

    await app.sendMessage("Quand administrer le BCG ?");
    const chips = root.querySelectorAll<HTMLButtonElement>(".citation-chip");
    expect(chips.length).toBeGreaterThanOrEqual(1);

    // opening a chip highlights exactly the excerpt substring
    const assistant = app.state.active!.messages.find((m) => m.role === "assistant")!;
    const citation = assistant.citations[0];
    chips[0].click();
    await new Promise((r) => setTimeout(r, 300)); // panel fetch settles
    const marks = root.querySelectorAll(".source-panel mark");
    expect(marks).toHaveLength(1);
    expect(marks[0].textContent).toBe(citation.excerpt);
    const panelText = root.querySelector(".source-panel .source-text")!.textContent!;
    expect(panelText).toContain(citation.excerpt);

    // rating 8 persists and re-renders
    await app.submitRating(assistant.message_id, 8);
    expect(root.querySelector(".rating-value")!.textContent).toBe("rated 8/10");

    // reload: a fresh app reproduces the thread from the server alone
    const { app: reloaded, root: freshRoot } = makeApp();
    await reloaded.init();
    await reloaded.openSession(sessionId);
    const bubbles = freshRoot.querySelectorAll(".bubble");
    expect(bubbles).toHaveLength(2);
    expect(freshRoot.querySelector(".rating-value")!.textContent).toBe("rated 8/10");
    const reloadedAssistant = reloaded.state.active!.messages.find(
      (m) => m.role === "assistant",
    )!;
    expect(reloadedAssistant.text).toBe(assistant.text);
    expect(reloadedAssistant.citations).toEqual(assistant.citations);
  });

  it("answers agentic questions with a trace tag", async () => {
    const { app, root } = makeApp();
    await app.init();
    await app.createSession("Agentique");
    app.state.mode = "agentic";
    await app.sendMessage("Quand administrer le BCG ?");
    const assistant = app.state.active!.messages.find((m) => m.role === "assistant")!;
    expect(assistant.trace).not.toBeNull();
    expect(root.querySelector(".trace-tag")).not.toBeNull();
  });

  it("rejects an out-of-range rating at the API and surfaces it", async () => {
    const { app } = makeApp();
    await app.init();
    await app.createSession("Bornes");
    await app.sendMessage("Quand administrer le BCG ?");
    const assistant = app.state.active!.messages.find((m) => m.role === "assistant")!;
    await app.submitRating(assistant.message_id, 11);
    expect(app.state.banner).toContain("Rating rejected");
    expect(app.state.queuedRatings).toHaveLength(0);
  });
});
