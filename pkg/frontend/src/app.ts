// Single-page controller for live search sessions. The server owns every
// ranking; this file only renders the last response and forwards feedback.

import { ApiError, Client, NetworkError } from "./api";
import { radarSvg, sparklineSvg } from "./glyphs";
import type {
  FeedbackPayload,
  HistoryDoc,
  ItemDoc,
  Polarity,
  RequestDoc,
  SessionDoc,
} from "./types";

interface ViewState {
  sessionId: string | null;
  mode: "live" | "simulated";
  policy: string;
  targetId: number | null;
  attributeNames: string[];
  iteration: number;
  finished: boolean;
  succeeded: boolean;
  topPage: ItemDoc[];
  request: RequestDoc["request"] | null;
  prHistory: number[];
  historyRows: { iteration: number; action: string; reward: number | null }[];
  selectedRef: number | null;
  inFlight: boolean;
  notice: string | null;
  stale: boolean;
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

function itemCard(item: ItemDoc, extraClass = "", clickable = false): string {
  const body = item.image_uri
    ? `<img src="${esc(item.image_uri)}" alt="item ${item.id}"/>`
    : radarSvg(item.attrs);
  return (
    `<figure class="card ${extraClass}" data-item-id="${item.id}"` +
    `${clickable ? ' tabindex="0" role="button"' : ""}>` +
    body +
    `<figcaption>#${item.id}</figcaption></figure>`
  );
}

export class App {
  state: ViewState;

  constructor(private root: HTMLElement, private client: Client) {
    this.state = {
      sessionId: null,
      mode: "live",
      policy: "?",
      targetId: null,
      attributeNames: [],
      iteration: 0,
      finished: false,
      succeeded: false,
      topPage: [],
      request: null,
      prHistory: [],
      historyRows: [],
      selectedRef: null,
      inFlight: false,
      notice: null,
      stale: false,
    };
    this.root.addEventListener("click", (ev) => this.onClick(ev));
    this.root.addEventListener("submit", (ev) => ev.preventDefault());
  }

  // ----- session lifecycle -----

  async start(config: { mode: "live" | "simulated"; policy?: string;
                        target_id?: number | null; seed?: number }): Promise<void> {
    const doc = await this.client.createSession(config);
    this.adoptSession(doc);
    window.location.hash = doc.session_id;
    await this.refreshRequest();
  }

  adoptSession(doc: SessionDoc): void {
    this.state.sessionId = doc.session_id;
    this.state.mode = doc.mode;
    this.state.policy = doc.policy;
    this.state.targetId = doc.target_id;
    this.state.attributeNames = doc.attribute_names;
    this.state.iteration = doc.iteration;
    this.state.topPage = doc.top_page;
    this.render();
  }

  async resume(sessionId: string): Promise<void> {
    // reload path: rebuild the whole view from the server's history
    const hist = await this.client.getHistory(sessionId);
    this.state.sessionId = sessionId;
    this.state.mode = hist.mode as "live" | "simulated";
    this.state.policy = hist.policy;
    this.state.targetId = hist.target_id;
    this.state.iteration = hist.iteration;
    this.state.finished = hist.finished;
    this.state.succeeded = hist.succeeded;
    this.applyHistory(hist);
    const ids = hist.records.length
      ? hist.records[hist.records.length - 1].top_page
      : hist.initial_top_page;
    this.state.topPage = await Promise.all(ids.map((i) => this.client.getItem(i)));
    if (this.state.attributeNames.length === 0 && this.state.topPage.length > 0) {
      this.state.attributeNames = this.state.topPage[0].attrs.map((_, i) => `attr_${i}`);
    }
    if (!hist.finished) {
      await this.refreshRequest();
    } else {
      this.render();
    }
  }

  private applyHistory(hist: HistoryDoc): void {
    this.state.prHistory = [];
    if (hist.initial_percentile_rank !== null) {
      this.state.prHistory.push(hist.initial_percentile_rank);
    }
    this.state.historyRows = hist.records.map((r) => {
      if (r.percentile_rank !== null) this.state.prHistory.push(r.percentile_rank);
      return { iteration: r.iteration, action: r.action, reward: r.reward };
    });
  }

  async refreshRequest(): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      const doc = await this.client.getRequest(this.state.sessionId);
      this.state.request = doc.request;
      this.state.topPage = doc.top_page;
      this.state.iteration = doc.iteration;
      this.state.selectedRef = null;
      this.state.stale = false;
    } catch (err) {
      if (err instanceof ApiError && err.code === "session_finished") {
        this.state.finished = true;
        this.state.request = null;
      } else if (err instanceof NetworkError) {
        this.state.stale = true;
        this.state.notice = "connection lost; showing last known state";
      } else {
        throw err;
      }
    }
    this.render();
  }

  // ----- feedback submission -----

  async submit(payload: FeedbackPayload): Promise<void> {
    if (!this.state.sessionId || this.state.inFlight) return;
    this.state.inFlight = true;
    this.state.notice = null;
    this.render();
    try {
      const res = await this.client.postFeedback(this.state.sessionId, payload);
      this.state.topPage = res.top_page;
      this.state.iteration = res.iteration;
      this.state.finished = res.finished;
      this.state.succeeded = res.success;
      this.state.request = null;
      if (res.percentile_rank !== null) this.state.prHistory.push(res.percentile_rank);
      this.state.historyRows.push({
        iteration: res.iteration, action: res.action, reward: res.reward,
      });
    } catch (err) {
      if (err instanceof ApiError) {
        this.state.notice = `${err.code}: ${err.message}`;
      } else if (err instanceof NetworkError) {
        this.state.stale = true;
        this.state.notice = "network error; feedback may not have been applied";
      } else {
        this.state.inFlight = false;
        throw err;
      }
    }
    this.state.inFlight = false;
    if (!this.state.finished && this.state.notice === null) {
      await this.refreshRequest();
    } else {
      this.render();
    }
  }

  private onClick(ev: Event): void {
    const el = (ev.target as HTMLElement).closest("[data-act]") as HTMLElement | null;
    const card = (ev.target as HTMLElement).closest(".picker .card") as HTMLElement | null;
    if (card) {
      this.state.selectedRef = Number(card.dataset.itemId);
      this.render();
      return;
    }
    if (!el || (el as HTMLButtonElement).disabled) return;
    const act = el.dataset.act!;
    if (act === "answer") {
      void this.submit({ kind: "question", response: el.dataset.value as Polarity });
    } else if (act === "freeform") {
      const attr = Number(
        (this.root.querySelector("#attr-select") as HTMLSelectElement).value,
      );
      if (this.state.selectedRef === null) {
        this.state.notice = "pick a reference item first";
        this.render();
        return;
      }
      void this.submit({
        kind: "freeform",
        attr,
        ref_id: this.state.selectedRef,
        polarity: el.dataset.value as Polarity,
      });
    } else if (act === "exemplar") {
      if (this.state.selectedRef === null) {
        this.state.notice = "pick the most similar-looking item first";
        this.render();
        return;
      }
      void this.submit({ kind: "sketch", exemplar_id: this.state.selectedRef });
    } else if (act === "auto-step") {
      void this.submit({});
    }
  }

  // ----- rendering -----

  render(): void {
    const s = this.state;
    this.root.innerHTML = `
      <header>
        <h1>mixsearch</h1>
        <span class="meta">session ${s.sessionId ?? "-"} · policy ${esc(s.policy)} ·
          iteration ${s.iteration}/10 ${s.mode === "simulated" ? "· simulated" : ""}</span>
        ${s.stale ? '<div class="banner stale" id="stale-banner">stale view</div>' : ""}
        ${s.notice ? `<div class="banner" id="notice">${esc(s.notice)}</div>` : ""}
      </header>
      ${this.renderTarget()}
      <section id="request-pane">${this.renderRequest()}</section>
      <section id="results">
        <h2>current top images</h2>
        <div class="grid" id="top-grid">
          ${s.topPage.map((it) => itemCard(it)).join("")}
        </div>
      </section>
      <aside id="history">
        <h2>history</h2>
        ${s.targetId !== null ? sparklineSvg(s.prHistory) : ""}
        <ol id="history-strip">
          ${s.historyRows.map((r) =>
            `<li>iter ${r.iteration}: ${esc(r.action)}` +
            `${r.reward === null ? "" : ` (reward ${r.reward})`}</li>`).join("")}
        </ol>
      </aside>`;
  }

  private renderTarget(): string {
    if (this.state.targetId === null) return "";
    return `<section id="target-pane"><h2>target</h2>
      <span class="meta">you are searching for item #${this.state.targetId}</span>
      </section>`;
  }

  private renderRequest(): string {
    const s = this.state;
    if (s.finished) {
      const last = s.prHistory.length ? s.prHistory[s.prHistory.length - 1] : null;
      return `<div id="finished" class="banner">search finished
        ${s.succeeded ? "(target found)" : "(iteration limit)"}
        ${last !== null ? ` · final percentile rank ${(last * 100).toFixed(1)}%` : ""}</div>`;
    }
    if (!s.request) return `<div class="banner">waiting for the next request...</div>`;
    const busy = s.inFlight ? "disabled" : "";
    if (s.mode === "simulated") {
      return `<h2>agent asks: ${esc(s.request.kind)}</h2>
        <button data-act="auto-step" id="auto-step" ${busy}>advance simulated user</button>`;
    }
    if (s.request.kind === "question") {
      const pivot = s.request.pivot!;
      return `<h2>question</h2>
        <p>Is your target more, less or equally
          <b>${esc(s.request.attribute_name ?? "")}</b> than this item?</p>
        <div class="grid">${itemCard(pivot, "pivot")}</div>
        <div class="answers">
          ${(["more", "less", "equal"] as const).map((p) =>
            `<button data-act="answer" data-value="${p}" ${busy}>${p}</button>`).join("")}
        </div>`;
    }
    if (s.request.kind === "freeform") {
      const options = s.attributeNames.map((n, i) =>
        `<option value="${i}">${esc(n)}</option>`).join("");
      return `<h2>your turn: compare an item</h2>
        <p>Pick a reference item, an attribute, and how your target compares.</p>
        <div class="grid picker" id="ref-picker">
          ${s.topPage.map((it) =>
            itemCard(it, it.id === s.selectedRef ? "selected" : "", true)).join("")}
        </div>
        <select id="attr-select">${options}</select>
        <div class="answers">
          ${(["more", "less", "equal"] as const).map((p) =>
            `<button data-act="freeform" data-value="${p}" ${busy}>target is ${p}</button>`)
            .join("")}
        </div>`;
    }
    return `<h2>sketch your target</h2>
      <p>No canvas here: pick the item that looks most similar to your target.</p>
      <div class="grid picker" id="exemplar-picker">
        ${s.topPage.map((it) =>
          itemCard(it, it.id === s.selectedRef ? "selected" : "", true)).join("")}
      </div>
      <button data-act="exemplar" id="exemplar-submit" ${busy}>use selected item as sketch</button>`;
  }
}

export async function boot(root: HTMLElement, client: Client): Promise<App> {
  const app = new App(root, client);
  const fromHash = window.location.hash.replace(/^#/, "");
  if (fromHash) {
    await app.resume(fromHash);
  } else {
    app.render();
  }
  return app;
}
