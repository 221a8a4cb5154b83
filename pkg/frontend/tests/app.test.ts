// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import { Client } from "../src/api";
import { App } from "../src/app";
import type { ItemDoc } from "../src/types";

function mkItem(id: number): ItemDoc {
  return { id, image_uri: null, attrs: [id * 0.1, -id * 0.1, 0.3] };
}

/** In-memory stand-in for the session API; records every request it serves. */
class MockServer {
  page: ItemDoc[] = [0, 1, 2, 3, 4, 5, 6, 7].map(mkItem);
  kind: "freeform" | "question" | "sketch" = "question";
  iteration = 0;
  finished = false;
  posts: unknown[] = [];
  calls: string[] = [];
  failNextGet = false;

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    const method = init?.method ?? "GET";
    this.calls.push(`${method} ${url}`);
    const json = (body: unknown, status = 200) =>
      new Response(JSON.stringify(body), {
        status, headers: { "Content-Type": "application/json" },
      });
    if (method === "POST" && url.endsWith("/sessions")) {
      return json({
        session_id: "mock1", mode: "live", policy: "PRR", target_id: 7,
        n_items: 40, page_size: 8, attribute_names: ["gloss", "size", "round"],
        iteration: 0, top_page: this.page,
      });
    }
    if (url.endsWith("/request")) {
      if (this.failNextGet) {
        this.failNextGet = false;
        throw new TypeError("network down");
      }
      if (this.finished) {
        return json({ error: "session_finished", detail: "done" }, 409);
      }
      return json({
        session_id: "mock1", iteration: this.iteration, finished: false,
        request: this.kind === "question"
          ? { kind: "question", attr: 1, attribute_name: "size", pivot: mkItem(20) }
          : { kind: this.kind },
        top_page: this.page,
      });
    }
    if (url.endsWith("/feedback")) {
      this.posts.push(JSON.parse(String(init!.body)));
      this.iteration += 1;
      this.page = [...this.page].reverse(); // server-side re-rank stand-in
      return json({
        session_id: "mock1", iteration: this.iteration, action: this.kind,
        kind: this.kind, top_page: this.page, percentile_rank: 0.5 + this.iteration * 0.04,
        reward: 1, success: false, finished: this.finished,
      });
    }
    if (url.endsWith("/history")) {
      return json({
        session_id: "mock1", mode: "live", policy: "PRR", target_id: 7,
        iteration: this.iteration, finished: this.finished, succeeded: false,
        initial_top_page: this.page.map((it) => it.id),
        initial_percentile_rank: 0.5,
        records: Array.from({ length: this.iteration }, (_, i) => ({
          iteration: i + 1, action: "question", kind: "question",
          top_page: this.page.map((it) => it.id), percentile_rank: 0.5 + 0.04 * (i + 1),
          reward: 1, success: false,
        })),
      });
    }
    if (/\/catalog\/items\/\d+$/.test(url)) {
      const id = Number(url.split("/").pop());
      return json({ ...mkItem(id), features: [0, 0, 0] });
    }
    return json({ error: "not_found", detail: url }, 404);
  };
}

async function freshApp(server: MockServer): Promise<App> {
  document.body.innerHTML = '<div id="app"></div>';
  window.location.hash = "";
  const client = new Client({ fetchFn: server.fetch, retries: 0 });
  const app = new App(document.getElementById("app")!, client);
  await app.start({ mode: "live", policy: "prr", target_id: 7 });
  return app;
}

const flush = () => new Promise((r) => setTimeout(r, 0));

describe("question interaction", () => {
  let server: MockServer;
  beforeEach(() => { server = new MockServer(); });

  it("renders exactly three enabled answer buttons and the pivot", async () => {
    await freshApp(server);
    const buttons = document.querySelectorAll('button[data-act="answer"]');
    expect(buttons.length).toBe(3);
    buttons.forEach((b) => expect((b as HTMLButtonElement).disabled).toBe(false));
    expect(document.querySelector(".card.pivot")).not.toBeNull();
  });

  it("posts the chosen answer and advances", async () => {
    await freshApp(server);
    (document.querySelector('button[data-value="more"]') as HTMLElement).click();
    await flush(); await flush();
    expect(server.posts).toEqual([{ kind: "question", response: "more" }]);
    expect(document.body.textContent).toContain("iteration 1/10");
  });
});

describe("freeform interaction", () => {
  it("blocks submission until a reference is picked", async () => {
    const server = new MockServer();
    server.kind = "freeform";
    await freshApp(server);
    (document.querySelector('button[data-act="freeform"]') as HTMLElement).click();
    await flush();
    expect(server.posts.length).toBe(0); // nothing went to the wire
    expect(document.getElementById("notice")!.textContent).toContain("reference");
    // now pick a card and retry
    (document.querySelector("#ref-picker .card") as HTMLElement).click();
    await flush();
    (document.querySelector('button[data-act="freeform"][data-value="less"]') as HTMLElement).click();
    await flush(); await flush();
    expect(server.posts).toEqual([{ kind: "freeform", attr: 0, ref_id: 0, polarity: "less" }]);
  });
});

describe("sketch interaction", () => {
  it("submits the picked exemplar", async () => {
    const server = new MockServer();
    server.kind = "sketch";
    await freshApp(server);
    (document.querySelectorAll("#exemplar-picker .card")[2] as HTMLElement).click();
    await flush();
    (document.getElementById("exemplar-submit") as HTMLElement).click();
    await flush(); await flush();
    expect(server.posts).toEqual([{ kind: "sketch", exemplar_id: 2 }]);
  });
});

describe("server-attributed rendering", () => {
  it("always mirrors the server's top page, never a client reordering", async () => {
    const server = new MockServer();
    await freshApp(server);
    const before = [...document.querySelectorAll("#top-grid .card")]
      .map((el) => Number((el as HTMLElement).dataset.itemId));
    expect(before).toEqual(server.page.map((it) => it.id));
    (document.querySelector('button[data-value="more"]') as HTMLElement).click();
    await flush(); await flush();
    const after = [...document.querySelectorAll("#top-grid .card")]
      .map((el) => Number((el as HTMLElement).dataset.itemId));
    expect(after).toEqual(server.page.map((it) => it.id)); // server reversed it
    expect(after).not.toEqual(before);
  });

  it("renders radar glyphs when items carry no image uri", async () => {
    const server = new MockServer();
    await freshApp(server);
    expect(document.querySelectorAll("#top-grid svg.radar").length).toBe(8);
    expect(document.querySelectorAll("#top-grid img").length).toBe(0);
  });
});

describe("lifecycle", () => {
  it("disables the form while a submission is in flight", async () => {
    const server = new MockServer();
    let release!: () => void;
    const gate = new Promise<void>((r) => { release = r; });
    const slowFetch: typeof server.fetch = async (input, init) => {
      if (String(input).endsWith("/feedback")) await gate;
      return server.fetch(input, init);
    };
    document.body.innerHTML = '<div id="app"></div>';
    window.location.hash = "";
    const app = new App(document.getElementById("app")!,
                        new Client({ fetchFn: slowFetch, retries: 0 }));
    await app.start({ mode: "live", policy: "prr", target_id: 7 });
    (document.querySelector('button[data-value="more"]') as HTMLElement).click();
    await flush();
    const buttons = document.querySelectorAll('button[data-act="answer"]');
    buttons.forEach((b) => expect((b as HTMLButtonElement).disabled).toBe(true));
    release();
    await flush(); await flush(); await flush();
    expect(server.posts.length).toBe(1);
  });

  it("shows finished state with the final percentile rank", async () => {
    const server = new MockServer();
    const app = await freshApp(server);
    server.finished = true;
    (document.querySelector('button[data-value="more"]') as HTMLElement).click();
    await flush(); await flush();
    expect(app.state.finished).toBe(true);
    expect(document.getElementById("finished")!.textContent).toContain("percentile rank");
    expect(document.querySelectorAll("button[data-act]").length).toBe(0);
  });

  it("restores the view from history on reload", async () => {
    const server = new MockServer();
    server.iteration = 2;
    document.body.innerHTML = '<div id="app"></div>';
    const app = new App(document.getElementById("app")!,
                        new Client({ fetchFn: server.fetch, retries: 0 }));
    await app.resume("mock1");
    expect(app.state.iteration).toBe(2);
    expect(document.querySelectorAll("#history-strip li").length).toBe(2);
    expect(document.querySelectorAll("#top-grid .card").length).toBe(8);
  });

  it("shows a stale banner when the network drops", async () => {
    const server = new MockServer();
    const app = await freshApp(server);
    server.failNextGet = true;
    await app.refreshRequest();
    expect(document.getElementById("stale-banner")).not.toBeNull();
  });
});
