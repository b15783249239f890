/** Gateway client: snapshots, directives, and the NDJSON tick stream. */

import type { DirectiveBody, Snapshot } from "./types.js";
import type { Role } from "./screen-model.js";

export class GatewayError extends Error {
  constructor(
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

export interface Gateway {
  whoami(): Promise<Role>;
  snapshot(): Promise<Snapshot>;
  submitDirective(body: DirectiveBody): Promise<void>;
  /** Consume the tick stream until the signal aborts or the server ends it. */
  stream(onSnapshot: (s: Snapshot) => void, signal: AbortSignal): Promise<void>;
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new GatewayError(detail, response.status);
}

export class HttpGateway implements Gateway {
  constructor(
    private baseUrl: string,
    private token: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    return { "X-Auth-Token": this.token, ...extra };
  }

  async whoami(): Promise<Role> {
    const r = await this.fetchFn(`${this.baseUrl}/whoami`, { headers: this.headers() });
    await raiseForStatus(r);
    return (await r.json()).role as Role;
  }

  async snapshot(): Promise<Snapshot> {
    const r = await this.fetchFn(`${this.baseUrl}/snapshot`, { headers: this.headers() });
    await raiseForStatus(r);
    return (await r.json()) as Snapshot;
  }

  async submitDirective(body: DirectiveBody): Promise<void> {
    const r = await this.fetchFn(`${this.baseUrl}/directives`, {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/json" }),
      body: JSON.stringify(body),
    });
    await raiseForStatus(r);
  }

  async stream(onSnapshot: (s: Snapshot) => void, signal: AbortSignal): Promise<void> {
    const r = await this.fetchFn(`${this.baseUrl}/stream`, {
      headers: this.headers(),
      signal,
    });
    await raiseForStatus(r);
    if (!r.body) throw new GatewayError("stream has no body", 0);
    for await (const line of ndjsonLines(r.body)) {
      onSnapshot(JSON.parse(line) as Snapshot);
    }
  }
}

/** Split a byte stream into complete newline-delimited records. */
export async function* ndjsonLines(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<string> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    while (true) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let idx: number;
      while ((idx = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, idx).trim();
        buffer = buffer.slice(idx + 1);
        if (line) yield line;
      }
    }
    const tail = buffer.trim();
    if (tail) yield tail;
  } finally {
    reader.releaseLock();
  }
}
