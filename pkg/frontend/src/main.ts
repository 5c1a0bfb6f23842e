/** Explorer entry point: wires uploads, context menus, verb forms and
 * undo/redo buttons to the view model. */

import { MwzClient } from "./api.js";
import { render, renderContextMenu, renderVerbForm } from "./render.js";
import { ExplorerViewModel } from "./viewmodel.js";

const SERVICE_URL =
  new URLSearchParams(location.search).get("service") ?? "http://localhost:8000";

function setup(): void {
  const vm = new ExplorerViewModel(new MwzClient(SERVICE_URL));
  const main = document.getElementById("main")!;
  const side = document.getElementById("side")!;
  vm.subscribe((snap) => render(main, snap));

  const upload = document.getElementById("upload") as HTMLInputElement;
  upload.addEventListener("change", () => {
    const files = Array.from(upload.files ?? []).map((f) => ({
      name: f.name,
      content: f as Blob,
    }));
    if (files.length) void vm.open(files);
  });

  (document.getElementById("undo") as HTMLButtonElement).addEventListener(
    "click", () => void vm.undo());
  (document.getElementById("redo") as HTMLButtonElement).addEventListener(
    "click", () => void vm.redo());

  const commandBox = document.getElementById("command") as HTMLInputElement;
  document.getElementById("command-form")!.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const cmd = commandBox.value.trim();
    if (cmd) {
      void vm.apply(cmd);
      commandBox.value = "";
    }
  });

  // clicking a column header opens its context menu of applicable verbs
  main.addEventListener("click", async (ev) => {
    const th = (ev.target as HTMLElement).closest("th");
    if (!th || !th.dataset.table || !th.dataset.col) return;
    const { table, col } = th.dataset as { table: string; col: string };
    const groups = await vm.contextOps(table, col);
    if (!groups) return;
    side.replaceChildren(
      renderContextMenu(groups, (verb) => {
        side.replaceChildren(
          renderVerbForm(verb, table, col, (extras) => {
            void vm.applyVerb(verb, table, col, extras);
            side.replaceChildren();
          }),
        );
      }),
    );
  });
}

document.addEventListener("DOMContentLoaded", setup);
