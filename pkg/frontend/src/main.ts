import { ApiClient } from "./api.js";
import { App } from "./app.js";
import type { ClientConfig } from "./types.js";

const BASE_KEY = "guideqa.apiBaseUrl";
const TOKEN_KEY = "guideqa.authToken";

function storedConfig(): ClientConfig {
  return {
    apiBaseUrl: localStorage.getItem(BASE_KEY) || window.location.origin,
    authToken: localStorage.getItem(TOKEN_KEY) || "",
  };
}

function renderConfigForm(root: HTMLElement, config: ClientConfig): void {
  root.innerHTML = `
    <form class="config-form">
      <h2>Connect to the guideline assistant</h2>
      <label>API base URL <input name="base" value=""></label>
      <label>Access token <input name="token" type="password"></label>
      <button type="submit">Connect</button>
    </form>`;
  const form = root.querySelector("form") as HTMLFormElement;
  (form.elements.namedItem("base") as HTMLInputElement).value = config.apiBaseUrl;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const base = (form.elements.namedItem("base") as HTMLInputElement).value.trim();
    const token = (form.elements.namedItem("token") as HTMLInputElement).value.trim();
    if (!base || !token) return;
    localStorage.setItem(BASE_KEY, base);
    localStorage.setItem(TOKEN_KEY, token);
    void boot(root);
  });
}

async function boot(root: HTMLElement): Promise<void> {
  const config = storedConfig();
  if (!config.authToken) {
    renderConfigForm(root, config);
    return;
  }
  const app = new App(new ApiClient(config), root);
  await app.init();
}

document.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (root) void boot(root);
});
