// Entry point: restore the session in the URL hash, or show the launcher.

import { Client } from "./api";
import { App, boot } from "./app";

function launcher(root: HTMLElement, app: App): void {
  if (window.location.hash) return;
  const pane = document.createElement("section");
  pane.id = "launcher";
  pane.innerHTML = `
    <h2>start a search</h2>
    <label>mode
      <select id="mode"><option value="live">live (game)</option>
      <option value="simulated">simulated demo</option></select>
    </label>
    <label>policy
      <select id="policy"><option value="">server default</option>
      <option>rl</option><option>ws</option><option>prr</option><option>sk_prr</option></select>
    </label>
    <label>target id (blank = random) <input id="target" type="number" min="0"/></label>
    <label>seed <input id="seed" type="number" value="0"/></label>
    <button id="launch">start</button>`;
  root.prepend(pane);
  pane.querySelector("#launch")!.addEventListener("click", () => {
    const mode = (pane.querySelector("#mode") as HTMLSelectElement).value as
      "live" | "simulated";
    const policy = (pane.querySelector("#policy") as HTMLSelectElement).value || undefined;
    const targetRaw = (pane.querySelector("#target") as HTMLInputElement).value;
    const seed = Number((pane.querySelector("#seed") as HTMLInputElement).value) || 0;
    let target: number | null = targetRaw === "" ? null : Number(targetRaw);
    if (mode === "live" && target === null) {
      // game mode needs a disclosed target; pick one client-side for fun
      target = Math.floor(Math.random() * 100);
    }
    void app.start({ mode, policy, target_id: target, seed }).then(() => pane.remove());
  });
}

const root = document.getElementById("app");
if (root) {
  const client = new Client({ baseUrl: "" });
  void boot(root, client).then((app) => launcher(root, app));
}
