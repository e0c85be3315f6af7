// Session playback: the line list is whatever the server has sent, ordered
// by server index — the client never speculates. "Run" is a client-side
// loop issuing steps on a tick; pausing just stops issuing them.

import { ApiClient, ApiError } from "./api.js";
import { renderScriptText } from "./script.js";
import type {
  Annotation,
  BackendSpec,
  FiringEvent,
  MutationResponse,
  ScriptLine,
  SessionView,
  TranscriptExport,
} from "./types.js";

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class PlaybackState {
  view: SessionView | null = null;
  lines: ScriptLine[] = [];
  firings: FiringEvent[] = [];
  annotations: Annotation[] = [];
  snapshots: number[] = [];
  running = false;
  notice: string | null = null;
  tickMs = 300;

  constructor(private readonly client: ApiClient) {}

  get sessionId(): string {
    if (!this.view) {
      throw new Error("no active session");
    }
    return this.view.id;
  }

  get awaitingPlayer(): boolean {
    return this.view?.awaiting_player ?? false;
  }

  /** The playback view renders exactly what the .txt export renders. */
  scriptText(): string {
    if (!this.view) {
      return "";
    }
    return renderScriptText(this.view.world_setting, this.lines);
  }

  async createSession(
    storyId: string,
    mode: "interactive" | "autonomous",
    backend?: BackendSpec,
  ): Promise<void> {
    this.view = await this.client.createSession({ story_id: storyId, mode, backend });
    this.lines = [];
    this.firings = [];
    this.annotations = [];
    this.notice = null;
    await this.refresh();
  }

  async attach(sessionId: string): Promise<void> {
    this.view = await this.client.getSession(sessionId);
    await this.refresh();
  }

  /** Re-sync everything from the server (lines, firings, annotations,
   * snapshot points). Used after attach and reset. */
  async refresh(): Promise<void> {
    const id = this.sessionId;
    const [view, exported, snapshots] = await Promise.all([
      this.client.getSession(id),
      this.client.exportSession(id),
      this.client.snapshots(id),
    ]);
    this.view = view;
    this.lines = exported.lines.filter((line) => line.kind !== "world_setting");
    this.firings = exported.firing_log;
    this.annotations = exported.annotations;
    this.snapshots = snapshots.snapshots.map((s) => s.line_count);
  }

  private apply(response: MutationResponse, since: number): void {
    this.lines = this.lines.slice(0, since).concat(response.new_lines);
    this.view = response.session;
    if (response.outcome.firing) {
      this.firings = this.firings.concat(response.outcome.firing);
    }
    if (!this.snapshots.includes(response.total_lines)) {
      this.snapshots.push(response.total_lines);
    }
  }

  /** One step. Returns false when the session cannot step right now (the
   * 409 becomes a notice instead of an error). */
  async step(): Promise<boolean> {
    const since = this.lines.length;
    try {
      const response = await this.client.step(this.sessionId, since);
      this.apply(response, since);
      this.notice = null;
      return true;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.notice = `session busy or not running: ${error.message}`;
        this.view = await this.client.getSession(this.sessionId);
        return false;
      }
      if (error instanceof ApiError && error.status === 502) {
        this.notice = `backend failure: ${error.message}`;
        this.view = await this.client.getSession(this.sessionId);
        return false;
      }
      throw error;
    }
  }

  async submitPlayerLine(text: string): Promise<boolean> {
    const since = this.lines.length;
    try {
      const response = await this.client.playerLine(this.sessionId, text, since);
      this.apply(response, since);
      this.notice = null;
      return true;
    } catch (error) {
      if (error instanceof ApiError && (error.status === 409 || error.status === 400)) {
        this.notice = error.message;
        return false;
      }
      throw error;
    }
  }

  /** Client-driven autonomous run: keep stepping until the session stops,
   * awaits the player, or pause() flips the flag. */
  async run(): Promise<void> {
    this.running = true;
    try {
      while (this.running) {
        const stepped = await this.step();
        if (!stepped || !this.view) {
          break;
        }
        if (this.view.state !== "running" || this.view.awaiting_player) {
          break;
        }
        if (this.tickMs > 0) {
          await sleep(this.tickMs);
        }
      }
    } finally {
      this.running = false;
    }
  }

  pause(): void {
    this.running = false;
  }

  async resetTo(lineCount: number): Promise<void> {
    this.view = await this.client.resetTo(this.sessionId, lineCount);
    await this.refresh();
  }

  async annotateFiring(index: number, correct: boolean, author?: string): Promise<boolean> {
    return this.annotateWith({ kind: "trigger_accuracy", target_index: index, correct, author });
  }

  async annotateLine(index: number, good: boolean, author?: string): Promise<boolean> {
    return this.annotateWith({ kind: "dialogue_quality", target_index: index, good, author });
  }

  private async annotateWith(body: Omit<Annotation, "session_id">): Promise<boolean> {
    try {
      const saved = await this.client.annotate(this.sessionId, body);
      this.annotations = this.annotations.concat(saved);
      this.notice = null;
      return true;
    } catch (error) {
      if (error instanceof ApiError && error.status === 400) {
        this.notice = error.message;
        return false;
      }
      throw error;
    }
  }

  firingAnnotation(index: number): Annotation | undefined {
    return this.annotations.find(
      (a) => a.kind === "trigger_accuracy" && a.target_index === index,
    );
  }

  lineAnnotation(index: number): Annotation | undefined {
    return this.annotations.find(
      (a) => a.kind === "dialogue_quality" && a.target_index === index,
    );
  }

  async downloadExport(): Promise<TranscriptExport> {
    return this.client.exportSession(this.sessionId);
  }
}
