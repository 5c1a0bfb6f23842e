/** UI-facing session state and command construction, independent of the DOM. */

import {
  ContextGroups,
  History,
  MwzClient,
  OpResult,
  ServiceError,
  SessionState,
} from "./api.js";

/** Verbs offered through context menus and their argument layout beyond
 * (table, column). Forms render one field per extra argument. */
export const VERB_FORMS: Record<string, { extra: string[] }> = {
  TypeReal: { extra: [] },
  TypeUpto: { extra: ["categories"] },
  TypeNominal: { extra: [] },
  TypeInfer: { extra: [] },
  ModelDiscrete: { extra: [] },
  ModelGaussian: { extra: [] },
  Model: { extra: [] },
  LinReg: { extra: ["domain column"] },
  QuadReg: { extra: ["domain column"] },
  Index: { extra: ["index path"] },
};

const BARE = /^[A-Za-z0-9_.,-]+$/;

export function quoteArg(arg: string): string {
  return BARE.test(arg) ? arg : `"${arg.replace(/\\/g, "\\\\").replace(/"/g, '\\"')}"`;
}

/** Build the script command a verb form submits. Extra arguments follow the
 * (table, column) pair in the order the form collected them. */
export function buildCommand(
  verb: string,
  table: string,
  col: string,
  extras: string[] = [],
  assignTo?: string,
): string {
  const parts = [
    verb,
    ...[table, col].filter((s) => s !== "").map(quoteArg),
    ...extras.map(quoteArg),
  ];
  const cmd = parts.join(" ");
  return assignTo ? `${assignTo} = ${cmd}` : cmd;
}

export interface ExplorerSnapshot {
  sessionId: string | null;
  state: SessionState | null;
  history: History | null;
  transcript: string[];
  error: string | null;
  busy: boolean;
}

type Listener = (snap: ExplorerSnapshot) => void;

/** Holds one session's view state; every mutation refreshes state+history
 * from the service so the view never drifts from the source of truth. */
export class ExplorerViewModel {
  private snap: ExplorerSnapshot = {
    sessionId: null,
    state: null,
    history: null,
    transcript: [],
    error: null,
    busy: false,
  };
  private listeners: Listener[] = [];

  constructor(private client: MwzClient) {}

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    fn(this.snap);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  get snapshot(): ExplorerSnapshot {
    return this.snap;
  }

  private emit(patch: Partial<ExplorerSnapshot>): void {
    this.snap = { ...this.snap, ...patch };
    for (const fn of this.listeners) fn(this.snap);
  }

  private async guarded<T>(work: () => Promise<T>): Promise<T | null> {
    this.emit({ busy: true, error: null });
    try {
      return await work();
    } catch (e) {
      const msg =
        e instanceof ServiceError ? `${e.kind}: ${e.message}` : String(e);
      this.emit({ error: msg });
      return null;
    } finally {
      this.emit({ busy: false });
    }
  }

  private async refresh(): Promise<void> {
    const sid = this.snap.sessionId;
    if (sid === null) return;
    const [state, history] = await Promise.all([
      this.client.state(sid),
      this.client.history(sid),
    ]);
    this.emit({ state, history });
  }

  async open(files: { name: string; content: Blob | string }[]): Promise<void> {
    await this.guarded(async () => {
      const sessionId = await this.client.createSession(files);
      this.emit({ sessionId, transcript: [] });
      await this.refresh();
    });
  }

  async apply(command: string): Promise<OpResult | null> {
    const sid = this.snap.sessionId;
    if (sid === null) return null;
    return this.guarded(async () => {
      const result = await this.client.applyCommand(sid, command);
      this.emit({ transcript: [...this.snap.transcript, ...result.transcript] });
      await this.refresh();
      return result;
    });
  }

  /** Submit a context-menu verb form. */
  applyVerb(
    verb: string,
    table: string,
    col: string,
    extras: string[] = [],
    assignTo?: string,
  ): Promise<OpResult | null> {
    return this.apply(buildCommand(verb, table, col, extras, assignTo));
  }

  async undo(): Promise<void> {
    const sid = this.snap.sessionId;
    if (sid === null) return;
    await this.guarded(async () => {
      await this.client.undo(sid);
      await this.refresh();
    });
  }

  async redo(): Promise<void> {
    const sid = this.snap.sessionId;
    if (sid === null) return;
    await this.guarded(async () => {
      await this.client.redo(sid);
      await this.refresh();
    });
  }

  async contextOps(table: string, col: string): Promise<ContextGroups | null> {
    const sid = this.snap.sessionId;
    if (sid === null) return null;
    return this.guarded(() => this.client.contextOps(sid, table, col));
  }
}
