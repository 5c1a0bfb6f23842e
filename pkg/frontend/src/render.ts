/** DOM rendering for the explorer; framework-free and replaceable. */

import { ContextGroups, History, SessionState } from "./api.js";
import { ExplorerSnapshot, VERB_FORMS } from "./viewmodel.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderSchemaDoc(doc: string): HTMLElement {
  const pre = el("pre", "schema-doc", doc);
  return pre;
}

export function renderPreview(state: SessionState): HTMLElement {
  const root = el("div", "previews");
  for (const [name, table] of Object.entries(state.dataPreview)) {
    const section = el("section", "table-preview");
    section.appendChild(el("h3", undefined, `${name} (${table.totalRows} rows)`));
    const t = el("table");
    const head = el("tr");
    for (const c of table.columns) {
      const th = el("th", undefined, c);
      th.dataset.table = name;
      th.dataset.col = c;
      head.appendChild(th);
    }
    t.appendChild(head);
    for (const row of table.rows) {
      const tr = el("tr");
      for (const v of row) tr.appendChild(el("td", v === null ? "missing" : "", v === null ? "·" : String(v)));
      t.appendChild(tr);
    }
    section.appendChild(t);
    root.appendChild(section);
  }
  return root;
}

export function renderHistory(history: History): HTMLElement {
  const list = el("ol", "history");
  for (const entry of history.entries) {
    const item = el("li", entry.current ? "current" : "");
    item.textContent = entry.command;
    if (entry.label !== null && entry.score !== null) {
      item.appendChild(el("span", "score", ` ${entry.label} = ${entry.score.toFixed(3)}`));
    }
    list.appendChild(item);
  }
  return list;
}

export function renderContextMenu(
  groups: ContextGroups,
  onPick: (verb: string) => void,
): HTMLElement {
  const menu = el("div", "context-menu");
  for (const [group, verbs] of Object.entries(groups)) {
    menu.appendChild(el("h4", undefined, group));
    for (const verb of verbs) {
      const b = el("button", "verb", verb);
      b.addEventListener("click", () => onPick(verb));
      menu.appendChild(b);
    }
  }
  return menu;
}

/** A small form for a verb's extra arguments; submits via the callback. */
export function renderVerbForm(
  verb: string,
  table: string,
  col: string,
  onSubmit: (extras: string[]) => void,
): HTMLElement {
  const spec = VERB_FORMS[verb] ?? { extra: [] };
  const form = el("form", "verb-form");
  form.appendChild(el("h4", undefined, `${verb} on ${table}.${col}`));
  const inputs: HTMLInputElement[] = [];
  for (const label of spec.extra) {
    const wrap = el("label", undefined, label + " ");
    const input = el("input");
    input.name = label;
    inputs.push(input);
    wrap.appendChild(input);
    form.appendChild(wrap);
  }
  const submit = el("button", undefined, "Apply");
  submit.type = "submit";
  form.appendChild(submit);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    onSubmit(inputs.map((i) => i.value.trim()).filter((v) => v !== ""));
  });
  return form;
}

export function render(root: HTMLElement, snap: ExplorerSnapshot): void {
  root.replaceChildren();
  if (snap.error) root.appendChild(el("div", "error", snap.error));
  if (snap.busy) root.appendChild(el("div", "busy", "working…"));
  if (snap.state) {
    root.appendChild(renderSchemaDoc(snap.state.schemaDoc));
    root.appendChild(renderPreview(snap.state));
  }
  if (snap.history) root.appendChild(renderHistory(snap.history));
  if (snap.transcript.length) {
    root.appendChild(el("pre", "transcript", snap.transcript.join("\n")));
  }
}
