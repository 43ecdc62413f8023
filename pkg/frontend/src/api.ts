/** Typed client for the episode-debugger HTTP API. */

export interface Spaces {
  states: string[];
  defender_actions: string[];
  attacker_actions: string[];
  observations: string[];
  discount: number;
  terminal_state: string | null;
}

export interface HistoryEntry {
  defender_action: number;
  attacker_action: number;
  observation: number;
  reward: number;
}

export interface AttackerView {
  state: number;
  state_name: string;
}

export interface Snapshot {
  id: string;
  model: string;
  t: number;
  done: boolean;
  belief: number[];
  observation: number | null;
  observation_name: string | null;
  reward: number | null;
  discounted_return: number;
  suggested: number | null;
  attacker_view: AttackerView;
  history: HistoryEntry[];
}

export interface CreatedSession {
  id: string;
  spaces: Spaces;
  snapshot: Snapshot;
}

export interface ModelInfo {
  name: string;
  params: Record<string, unknown>;
  attackers: string[];
}

export interface KernelViolation {
  kind: string;
  index: number[];
  deviation: number;
}

export interface ErrorBody {
  error: string;
  detail: string;
  report?: KernelViolation[];
}

/** Non-2xx response; carries the service's structured error body. */
export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public body: ErrorBody,
  ) {
    super(`${body.error}: ${body.detail}`);
    this.name = "ApiRequestError";
  }
}

/** The service could not be reached at all. */
export class ApiConnectionError extends Error {
  constructor(cause: unknown) {
    super(`cannot reach the debugger service (${String(cause)})`);
    this.name = "ApiConnectionError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private fetchFn: FetchLike;

  constructor(
    public baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (cause) {
      throw new ApiConnectionError(cause);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    const text = await response.text();
    const body = text ? JSON.parse(text) : {};
    if (!response.ok) {
      const error: ErrorBody =
        typeof body.error === "string"
          ? body
          : { error: "unexpected", detail: text.slice(0, 200) };
      throw new ApiRequestError(response.status, error);
    }
    return body as T;
  }

  models(): Promise<{ models: ModelInfo[] }> {
    return this.request("/models");
  }

  createSession(body: Record<string, unknown>): Promise<CreatedSession> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  step(sessionId: string, action: string | number): Promise<Snapshot> {
    return this.request(`/sessions/${sessionId}/step`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ defender_action: action }),
    });
  }

  getSession(sessionId: string): Promise<Snapshot> {
    return this.request(`/sessions/${sessionId}`);
  }

  deleteSession(sessionId: string): Promise<void> {
    return this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }
}
