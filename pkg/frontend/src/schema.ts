// Minimal runtime validators for everything that crosses the wire.
// Outbound payloads are checked before send; inbound documents before use.

import type {
  FeedbackPayload,
  FeedbackResult,
  HistoryDoc,
  ItemDoc,
  RequestDoc,
  SessionDoc,
} from "./types";

export class SchemaError extends Error {}

function fail(path: string, want: string, got: unknown): never {
  throw new SchemaError(`${path}: expected ${want}, got ${JSON.stringify(got)}`);
}

function isObj(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

function num(x: unknown, path: string): number {
  if (typeof x !== "number" || Number.isNaN(x)) fail(path, "number", x);
  return x;
}

function int(x: unknown, path: string): number {
  const v = num(x, path);
  if (!Number.isInteger(v)) fail(path, "integer", x);
  return v;
}

function str(x: unknown, path: string): string {
  if (typeof x !== "string") fail(path, "string", x);
  return x;
}

function bool(x: unknown, path: string): boolean {
  if (typeof x !== "boolean") fail(path, "boolean", x);
  return x;
}

function numOrNull(x: unknown, path: string): number | null {
  return x === null ? null : num(x, path);
}

function numArray(x: unknown, path: string): number[] {
  if (!Array.isArray(x)) fail(path, "number[]", x);
  return x.map((v, i) => num(v, `${path}[${i}]`));
}

function intArray(x: unknown, path: string): number[] {
  if (!Array.isArray(x)) fail(path, "int[]", x);
  return x.map((v, i) => int(v, `${path}[${i}]`));
}

const POLARITIES = ["more", "less", "equal"] as const;
const KINDS = ["freeform", "question", "sketch"] as const;

export function parseItem(x: unknown, path = "item"): ItemDoc {
  if (!isObj(x)) fail(path, "object", x);
  const doc: ItemDoc = {
    id: int(x.id, `${path}.id`),
    image_uri: x.image_uri === null ? null : str(x.image_uri, `${path}.image_uri`),
    attrs: numArray(x.attrs, `${path}.attrs`),
  };
  if (x.features !== undefined) doc.features = numArray(x.features, `${path}.features`);
  return doc;
}

function itemArray(x: unknown, path: string): ItemDoc[] {
  if (!Array.isArray(x)) fail(path, "item[]", x);
  return x.map((v, i) => parseItem(v, `${path}[${i}]`));
}

export function parseSession(x: unknown): SessionDoc {
  if (!isObj(x)) fail("session", "object", x);
  const mode = str(x.mode, "session.mode");
  if (mode !== "live" && mode !== "simulated") fail("session.mode", "live|simulated", mode);
  return {
    session_id: str(x.session_id, "session.session_id"),
    mode,
    policy: str(x.policy, "session.policy"),
    target_id: x.target_id === null ? null : int(x.target_id, "session.target_id"),
    n_items: int(x.n_items, "session.n_items"),
    page_size: int(x.page_size, "session.page_size"),
    attribute_names: (Array.isArray(x.attribute_names) ? x.attribute_names : fail(
      "session.attribute_names", "string[]", x.attribute_names
    )).map((v, i) => str(v, `session.attribute_names[${i}]`)),
    iteration: int(x.iteration, "session.iteration"),
    top_page: itemArray(x.top_page, "session.top_page"),
  };
}

export function parseRequest(x: unknown): RequestDoc {
  if (!isObj(x)) fail("request", "object", x);
  if (!isObj(x.request)) fail("request.request", "object", x.request);
  const kind = str(x.request.kind, "request.request.kind");
  if (!KINDS.includes(kind as never)) fail("request.request.kind", KINDS.join("|"), kind);
  const inner: RequestDoc["request"] = { kind: kind as RequestDoc["request"]["kind"] };
  if (kind === "question") {
    inner.attr = int(x.request.attr, "request.request.attr");
    inner.attribute_name = str(x.request.attribute_name, "request.request.attribute_name");
    inner.pivot = parseItem(x.request.pivot, "request.request.pivot");
  }
  return {
    session_id: str(x.session_id, "request.session_id"),
    iteration: int(x.iteration, "request.iteration"),
    finished: bool(x.finished, "request.finished"),
    request: inner,
    top_page: itemArray(x.top_page, "request.top_page"),
  };
}

export function parseFeedbackResult(x: unknown): FeedbackResult {
  if (!isObj(x)) fail("feedback", "object", x);
  const kind = str(x.kind, "feedback.kind");
  if (!KINDS.includes(kind as never)) fail("feedback.kind", KINDS.join("|"), kind);
  return {
    session_id: str(x.session_id, "feedback.session_id"),
    iteration: int(x.iteration, "feedback.iteration"),
    action: str(x.action, "feedback.action"),
    kind: kind as FeedbackResult["kind"],
    top_page: itemArray(x.top_page, "feedback.top_page"),
    percentile_rank: numOrNull(x.percentile_rank, "feedback.percentile_rank"),
    reward: x.reward === null ? null : int(x.reward, "feedback.reward"),
    success: bool(x.success, "feedback.success"),
    finished: bool(x.finished, "feedback.finished"),
  };
}

export function parseHistory(x: unknown): HistoryDoc {
  if (!isObj(x)) fail("history", "object", x);
  if (!Array.isArray(x.records)) fail("history.records", "array", x.records);
  return {
    session_id: str(x.session_id, "history.session_id"),
    mode: str(x.mode, "history.mode"),
    policy: str(x.policy, "history.policy"),
    target_id: x.target_id === null ? null : int(x.target_id, "history.target_id"),
    iteration: int(x.iteration, "history.iteration"),
    finished: bool(x.finished, "history.finished"),
    succeeded: bool(x.succeeded, "history.succeeded"),
    initial_top_page: intArray(x.initial_top_page, "history.initial_top_page"),
    initial_percentile_rank: numOrNull(x.initial_percentile_rank,
                                       "history.initial_percentile_rank"),
    records: x.records.map((r, i) => {
      if (!isObj(r)) fail(`history.records[${i}]`, "object", r);
      const kind = str(r.kind, `history.records[${i}].kind`);
      if (!KINDS.includes(kind as never)) fail(`history.records[${i}].kind`, KINDS.join("|"), kind);
      return {
        iteration: int(r.iteration, `history.records[${i}].iteration`),
        action: str(r.action, `history.records[${i}].action`),
        kind: kind as HistoryDoc["records"][number]["kind"],
        top_page: intArray(r.top_page, `history.records[${i}].top_page`),
        percentile_rank: numOrNull(r.percentile_rank, `history.records[${i}].percentile_rank`),
        reward: r.reward === null ? null : int(r.reward, `history.records[${i}].reward`),
        success: bool(r.success, `history.records[${i}].success`),
      };
    }),
  };
}

export function validatePayload(payload: FeedbackPayload): FeedbackPayload {
  const keys = Object.keys(payload);
  if (keys.length === 0) return payload; // simulated step
  const kind = (payload as { kind?: unknown }).kind;
  if (kind === "freeform") {
    const p = payload as { attr: unknown; ref_id: unknown; polarity: unknown };
    int(p.attr, "payload.attr");
    int(p.ref_id, "payload.ref_id");
    if (!POLARITIES.includes(p.polarity as never)) {
      fail("payload.polarity", POLARITIES.join("|"), p.polarity);
    }
    return payload;
  }
  if (kind === "question") {
    const p = payload as { response: unknown };
    if (!POLARITIES.includes(p.response as never)) {
      fail("payload.response", POLARITIES.join("|"), p.response);
    }
    return payload;
  }
  if (kind === "sketch") {
    const p = payload as { exemplar_id?: unknown; embedding?: unknown };
    if (p.exemplar_id !== undefined) {
      int(p.exemplar_id, "payload.exemplar_id");
    } else if (p.embedding !== undefined) {
      numArray(p.embedding, "payload.embedding");
    } else {
      fail("payload", "exemplar_id or embedding", payload);
    }
    return payload;
  }
  fail("payload.kind", KINDS.join("|"), kind);
}
