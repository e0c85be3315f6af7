// Typed client for the session service. Every state change the UI makes
// goes through one of these calls — nothing mutates locally.

import type {
  Annotation,
  CreateSessionRequest,
  MutationResponse,
  ScriptLine,
  SessionView,
  StoryDocument,
  StoryResponse,
  StorySummary,
  TranscriptExport,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail: unknown = null,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let code = "http_error";
      let message = `HTTP ${response.status}`;
      let detail: unknown = null;
      try {
        const envelope = await response.json();
        code = envelope.code ?? code;
        message = envelope.message ?? message;
        detail = envelope.detail ?? null;
      } catch {
        // non-JSON error body; keep defaults
      }
      throw new ApiError(response.status, code, message, detail);
    }
    return (await response.json()) as T;
  }

  private async requestText(path: string): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    if (!response.ok) {
      throw new ApiError(response.status, "http_error", `HTTP ${response.status}`);
    }
    return await response.text();
  }

  // stories
  createStory(doc: StoryDocument): Promise<StoryResponse> {
    return this.request("POST", "/stories", doc);
  }
  updateStory(id: string, doc: StoryDocument): Promise<StoryResponse> {
    return this.request("PUT", `/stories/${id}`, doc);
  }
  getStory(id: string): Promise<StoryResponse> {
    return this.request("GET", `/stories/${id}`);
  }
  listStories(): Promise<{ stories: StorySummary[] }> {
    return this.request("GET", "/stories");
  }

  // sessions
  createSession(req: CreateSessionRequest): Promise<SessionView> {
    return this.request("POST", "/sessions", req);
  }
  getSession(id: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${id}`);
  }
  getLines(
    id: string,
    since = 0,
  ): Promise<{ lines: ScriptLine[]; since: number; total_lines: number }> {
    return this.request("GET", `/sessions/${id}/lines?since=${since}`);
  }
  step(id: string, since?: number): Promise<MutationResponse> {
    return this.request("POST", `/sessions/${id}/step`, since === undefined ? {} : { since });
  }
  playerLine(id: string, text: string, since?: number): Promise<MutationResponse> {
    return this.request("POST", `/sessions/${id}/player-line`, { text, since });
  }
  pause(id: string): Promise<SessionView> {
    return this.request("POST", `/sessions/${id}/pause`);
  }
  resume(id: string): Promise<SessionView> {
    return this.request("POST", `/sessions/${id}/resume`);
  }
  snapshots(id: string): Promise<{ snapshots: { line_count: number }[] }> {
    return this.request("GET", `/sessions/${id}/snapshots`);
  }
  resetTo(id: string, lineCount: number): Promise<SessionView> {
    return this.request("POST", `/sessions/${id}/reset`, { line_count: lineCount });
  }
  annotate(id: string, annotation: Omit<Annotation, "session_id">): Promise<Annotation> {
    return this.request("POST", `/sessions/${id}/annotations`, annotation);
  }
  annotations(id: string): Promise<{ annotations: Annotation[] }> {
    return this.request("GET", `/sessions/${id}/annotations`);
  }
  exportSession(id: string): Promise<TranscriptExport> {
    return this.request("GET", `/sessions/${id}/export`);
  }
  exportText(id: string): Promise<string> {
    return this.requestText(`/sessions/${id}/export.txt`);
  }
}
