/** Console bootstrap: token login, role resolution, stream loop. */

import { GatewayError, HttpGateway, type Gateway } from "./api.js";
import { buildScreen, type Screen } from "./screens.js";
import { el } from "./panels.js";

const RECONNECT_DELAY_MS = 2000;

function gatewayBase(): string {
  return (
    new URLSearchParams(location.search).get("gateway") ??
    `${location.protocol}//${location.hostname}:8171`
  );
}

async function streamLoop(
  gateway: Gateway,
  screen: Screen,
  statusEl: HTMLElement,
): Promise<void> {
  // one streaming connection with automatic reconnect
  for (;;) {
    const controller = new AbortController();
    try {
      statusEl.textContent = "live";
      statusEl.className = "status live";
      await gateway.stream((s) => screen.update(s), controller.signal);
      statusEl.textContent = "stream ended; reconnecting";
    } catch (err) {
      statusEl.textContent = `disconnected (${err instanceof Error ? err.message : err})`;
    }
    statusEl.className = "status stale";
    await new Promise((resolve) => setTimeout(resolve, RECONNECT_DELAY_MS));
  }
}

async function login(root: HTMLElement, token: string): Promise<void> {
  const gateway = new HttpGateway(gatewayBase(), token);
  const role = await gateway.whoami();
  root.textContent = "";
  const status = el("div", "status", "connecting");
  root.appendChild(status);
  const screen = buildScreen(role, gateway);
  root.appendChild(screen.root);
  try {
    screen.update(await gateway.snapshot());
  } catch {
    // no tick yet; the stream will deliver the first one
  }
  void streamLoop(gateway, screen, status);
}

function mountLogin(root: HTMLElement): void {
  const form = el("form", "login");
  const label = el("label", "", "access token ");
  const input = el("input") as HTMLInputElement;
  input.type = "password";
  input.autofocus = true;
  label.appendChild(input);
  form.appendChild(label);
  const button = el("button", "", "open console");
  button.type = "submit";
  form.appendChild(button);
  const error = el("div", "form-error");
  form.appendChild(error);
  form.addEventListener("submit", (e) => {
    e.preventDefault();
    error.textContent = "";
    login(root, input.value).catch((err) => {
      error.textContent =
        err instanceof GatewayError && err.status === 401
          ? "token not recognized"
          : `cannot reach gateway: ${err instanceof Error ? err.message : err}`;
    });
  });
  root.appendChild(form);
}

const appRoot = document.getElementById("app");
if (appRoot) {
  mountLogin(appRoot);
}
