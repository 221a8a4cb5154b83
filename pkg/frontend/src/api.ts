// Typed client for the session API. GETs retry with backoff; mutations never
// auto-retry (a retried POST could double-apply feedback).

import {
  parseFeedbackResult,
  parseHistory,
  parseItem,
  parseRequest,
  parseSession,
  validatePayload,
} from "./schema";
import type {
  FeedbackPayload,
  FeedbackResult,
  HistoryDoc,
  ItemDoc,
  RequestDoc,
  SessionDoc,
} from "./types";

export class ApiError extends Error {
  constructor(public status: number, public code: string, detail: string) {
    super(detail);
  }
}

export class NetworkError extends Error {}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export interface ClientOptions {
  baseUrl?: string;
  retries?: number;
  backoffMs?: number;
  fetchFn?: typeof fetch;
}

export class Client {
  private baseUrl: string;
  private retries: number;
  private backoffMs: number;
  private fetchFn: typeof fetch;

  constructor(opts: ClientOptions = {}) {
    this.baseUrl = (opts.baseUrl ?? "").replace(/\/$/, "");
    this.retries = opts.retries ?? 3;
    this.backoffMs = opts.backoffMs ?? 300;
    this.fetchFn = opts.fetchFn ?? fetch.bind(globalThis);
  }

  private async call(method: string, path: string, body?: unknown,
                     retriable = false): Promise<unknown> {
    let attempt = 0;
    for (;;) {
      let resp: Response;
      try {
        resp = await this.fetchFn(this.baseUrl + path, {
          method,
          headers: body === undefined ? undefined : { "Content-Type": "application/json" },
          body: body === undefined ? undefined : JSON.stringify(body),
        });
      } catch (err) {
        if (retriable && attempt < this.retries) {
          await sleep(this.backoffMs * 2 ** attempt);
          attempt += 1;
          continue;
        }
        throw new NetworkError(String(err));
      }
      if (!resp.ok) {
        let code = "http_error";
        let detail = `${resp.status}`;
        try {
          const doc = (await resp.json()) as { error?: string; detail?: string };
          code = doc.error ?? code;
          detail = doc.detail ?? detail;
        } catch {
          // non-JSON error body; keep defaults
        }
        throw new ApiError(resp.status, code, detail);
      }
      return resp.json();
    }
  }

  async createSession(config: {
    mode: "live" | "simulated";
    policy?: string;
    target_id?: number | null;
    seed?: number;
    max_iterations?: number;
  }): Promise<SessionDoc> {
    return parseSession(await this.call("POST", "/sessions", config));
  }

  async getRequest(sessionId: string): Promise<RequestDoc> {
    return parseRequest(await this.call("GET", `/sessions/${sessionId}/request`,
                                        undefined, true));
  }

  async postFeedback(sessionId: string, payload: FeedbackPayload): Promise<FeedbackResult> {
    validatePayload(payload);
    return parseFeedbackResult(
      await this.call("POST", `/sessions/${sessionId}/feedback`, payload),
    );
  }

  async getHistory(sessionId: string): Promise<HistoryDoc> {
    return parseHistory(await this.call("GET", `/sessions/${sessionId}/history`,
                                        undefined, true));
  }

  async getItem(itemId: number): Promise<ItemDoc> {
    return parseItem(await this.call("GET", `/catalog/items/${itemId}`, undefined, true));
  }
}
