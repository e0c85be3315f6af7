// Client-side mirror of a story document with dirty tracking. Validation is
// the server's: a rejected save surfaces its message and path inline and
// disables saving until the document is edited again.

import { ApiClient, ApiError } from "./api.js";
import type { StoryDocument, StoryWarning } from "./types.js";

export interface ServerError {
  message: string;
  path: string;
}

export function emptyStory(): StoryDocument {
  return {
    title: "Untitled",
    world_setting: "Somewhere, sometime.",
    characters: [{ name: "Alex", description: "", behavior_prompt: "" }],
    triggers: [],
    player_character: null,
  };
}

export class EditorState {
  doc: StoryDocument;
  storyId: string | null = null;
  dirty = false;
  serverError: ServerError | null = null;
  warnings: StoryWarning[] = [];

  constructor(
    private readonly client: ApiClient,
    doc: StoryDocument = emptyStory(),
  ) {
    this.doc = doc;
  }

  /** Apply an edit; editing clears a stale server error so save re-enables. */
  update(mutate: (doc: StoryDocument) => void): void {
    mutate(this.doc);
    this.dirty = true;
    this.serverError = null;
  }

  get canSave(): boolean {
    return this.serverError === null;
  }

  async load(storyId: string): Promise<void> {
    const response = await this.client.getStory(storyId);
    this.storyId = storyId;
    this.doc = response.story;
    this.warnings = response.warnings;
    this.dirty = false;
    this.serverError = null;
  }

  /** POST on first save, PUT afterwards. Returns true when the server
   * accepted the document. */
  async save(): Promise<boolean> {
    if (!this.canSave) {
      return false;
    }
    try {
      const response = this.storyId
        ? await this.client.updateStory(this.storyId, this.doc)
        : await this.client.createStory(this.doc);
      this.storyId = response.id;
      this.doc = response.story;
      this.warnings = response.warnings;
      this.dirty = false;
      return true;
    } catch (error) {
      if (error instanceof ApiError && error.status === 400) {
        const detail = (error.detail ?? {}) as { path?: string };
        this.serverError = { message: error.message, path: detail.path ?? "" };
        return false;
      }
      throw error;
    }
  }
}
