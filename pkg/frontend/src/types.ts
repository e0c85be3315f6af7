// Payload types mirroring the session service's JSON contracts.

export interface CharacterDoc {
  name: string;
  description: string;
  behavior_prompt: string;
}

export interface TriggerDoc {
  id?: string;
  condition: string;
  actions: string[];
  type: string;
  repeatable?: boolean;
  fallback_k?: number | null;
  cooldown_turns?: number;
  requires_fired?: string[];
  requires_not_fired?: string[];
}

export interface StoryDocument {
  title: string;
  world_setting: string;
  characters: CharacterDoc[];
  triggers: TriggerDoc[];
  player_character: string | null;
}

export interface StoryWarning {
  code: string;
  message: string;
  trigger_id?: string | null;
}

export interface StoryResponse {
  id: string;
  story: StoryDocument;
  warnings: StoryWarning[];
}

export interface StorySummary {
  id: string;
  title: string;
  characters: number;
  triggers: number;
}

export type LineSource =
  | { type: "model" }
  | { type: "trigger"; trigger_id: string; action_index: number };

export type ScriptLine =
  | { kind: "world_setting"; text: string }
  | { kind: "dialogue"; speaker: string; text: string }
  | { kind: "stage_action"; text: string; source: LineSource };

export interface FiringEvent {
  turn: number;
  trigger_id: string;
  action_index: number;
  text: string;
  ended_session: boolean;
}

export interface SessionView {
  id: string;
  story_id: string;
  title: string;
  world_setting: string;
  player_character: string | null;
  mode: string;
  state: string;
  paused: boolean;
  awaiting_player: boolean;
  turn: number;
  line_count: number;
  error_reason: string | null;
  ended_by: string | null;
}

export interface StepOutcome {
  appended: ScriptLine | null;
  firing: FiringEvent | null;
  state: string;
  awaiting_player: boolean;
}

export interface MutationResponse {
  outcome: StepOutcome;
  new_lines: ScriptLine[];
  total_lines: number;
  session: SessionView;
}

export interface Annotation {
  session_id: string;
  kind: "trigger_accuracy" | "dialogue_quality";
  target_index: number;
  correct?: boolean;
  good?: boolean;
  note?: string | null;
  author?: string | null;
}

export interface TranscriptExport {
  kind: string;
  format_version: number;
  session_id: string;
  mode: string;
  state: string;
  error_reason: string | null;
  ended_by: string | null;
  turn: number;
  seed: number | null;
  story: StoryDocument;
  rendered_script: string;
  lines: ScriptLine[];
  firing_log: FiringEvent[];
  annotations: Annotation[];
  event_log: { kind: string; turn: number; detail: Record<string, unknown> }[];
}

export interface BackendSpec {
  kind: "live" | "scripted";
  model?: string;
  responses?: { match: unknown; response: string }[];
}

export interface CreateSessionRequest {
  story_id: string;
  mode: "interactive" | "autonomous";
  backend?: BackendSpec;
  line_cap?: number;
  seed?: number | null;
}
