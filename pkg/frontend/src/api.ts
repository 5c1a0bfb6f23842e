/** Typed HTTP client for the mwz session service. */

export interface HistoryEntry {
  index: number;
  command: string;
  schemaDoc: string;
  score: number | null;
  label: string | null;
  current: boolean;
}

export interface TablePreview {
  columns: string[];
  rows: (string | number | null)[][];
  totalRows: number;
}

export interface SessionState {
  schemaDoc: string;
  dataPreview: Record<string, TablePreview>;
}

export interface History {
  cursor: number;
  entries: HistoryEntry[];
}

export interface OpResult {
  entry: HistoryEntry;
  transcript: string[];
}

export type ContextGroups = Record<string, string[]>;

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly kind: string,
    message: string,
    readonly location: [string, string | null] | null,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

async function readError(res: Response): Promise<never> {
  let kind = "UNKNOWN";
  let message = res.statusText;
  let location: [string, string | null] | null = null;
  try {
    const body = await res.json();
    kind = body.kind ?? kind;
    message = body.message ?? message;
    location = body.location ?? null;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(res.status, kind, message, location);
}

export class MwzClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(`${this.baseUrl}${path}`, init);
    if (!res.ok) await readError(res);
    return (await res.json()) as T;
  }

  /** Upload one or more CSV files and start a session. */
  async createSession(files: { name: string; content: Blob | string }[]): Promise<string> {
    const form = new FormData();
    for (const f of files) {
      const blob =
        typeof f.content === "string"
          ? new Blob([f.content], { type: "text/csv" })
          : f.content;
      form.append("files", blob, f.name);
    }
    const { id } = await this.request<{ id: string }>("/sessions", {
      method: "POST",
      body: form,
    });
    return id;
  }

  applyCommand(sessionId: string, command: string): Promise<OpResult> {
    return this.request<OpResult>(`/sessions/${sessionId}/ops`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ command }),
    });
  }

  undo(sessionId: string): Promise<{ entry: HistoryEntry }> {
    return this.request(`/sessions/${sessionId}/undo`, { method: "POST" });
  }

  redo(sessionId: string): Promise<{ entry: HistoryEntry }> {
    return this.request(`/sessions/${sessionId}/redo`, { method: "POST" });
  }

  state(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${sessionId}/state`);
  }

  history(sessionId: string): Promise<History> {
    return this.request(`/sessions/${sessionId}/history`);
  }

  contextOps(sessionId: string, table: string, col: string): Promise<ContextGroups> {
    const q = new URLSearchParams({ table, col });
    return this.request<{ groups: ContextGroups }>(
      `/sessions/${sessionId}/contextOps?${q}`,
    ).then((r) => r.groups);
  }
}
