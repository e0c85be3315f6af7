// DOM wiring for the two screens: the story editor and the playback view.
// All state lives in EditorState / PlaybackState; this file only renders
// them and forwards events.

import { ApiClient } from "./api.js";
import { EditorState, emptyStory } from "./editor.js";
import { PlaybackState } from "./playback.js";
import { injectedTriggerId, renderLine } from "./script.js";
import type { ScriptLine, TriggerDoc } from "./types.js";

const client = new ApiClient("");
const editor = new EditorState(client);
const playback = new PlaybackState(client);

const $ = <T extends HTMLElement>(id: string): T => {
  const element = document.getElementById(id);
  if (!element) {
    throw new Error(`missing element #${id}`);
  }
  return element as T;
};

const escapeHtml = (text: string): string =>
  text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");

// ---------------------------------------------------------------------------
// editor rendering
// ---------------------------------------------------------------------------

function triggerFields(trigger: TriggerDoc, index: number): string {
  return `
  <fieldset class="trigger" data-index="${index}">
    <legend>trigger ${escapeHtml(trigger.id ?? String(index))}</legend>
    <label>condition
      <input data-field="condition" data-index="${index}" value="${escapeHtml(trigger.condition)}">
    </label>
    <label>actions (one per line)
      <textarea data-field="actions" data-index="${index}" rows="3">${escapeHtml(trigger.actions.join("\n"))}</textarea>
    </label>
    <div class="row">
      <label>type
        <select data-field="type" data-index="${index}">
          <option value="basic"${trigger.type === "basic" ? " selected" : ""}>basic</option>
          <option value="ending"${trigger.type === "ending" ? " selected" : ""}>ending</option>
        </select>
      </label>
      <label><input type="checkbox" data-field="repeatable" data-index="${index}"${trigger.repeatable ? " checked" : ""}> repeatable</label>
      <label>fallback K
        <input type="number" min="1" data-field="fallback_k" data-index="${index}" value="${trigger.fallback_k ?? ""}">
      </label>
      <label>cooldown turns
        <input type="number" min="0" data-field="cooldown_turns" data-index="${index}" value="${trigger.cooldown_turns ?? 0}">
      </label>
    </div>
    <div class="row">
      <label>requires fired
        <input data-field="requires_fired" data-index="${index}" value="${escapeHtml((trigger.requires_fired ?? []).join(", "))}">
      </label>
      <label>requires not fired
        <input data-field="requires_not_fired" data-index="${index}" value="${escapeHtml((trigger.requires_not_fired ?? []).join(", "))}">
      </label>
      <button type="button" data-action="remove-trigger" data-index="${index}">remove</button>
    </div>
  </fieldset>`;
}

function renderEditor(): void {
  const doc = editor.doc;
  $<HTMLInputElement>("story-title").value = doc.title;
  $<HTMLInputElement>("world-setting").value = doc.world_setting;

  const characters = $<HTMLDivElement>("characters");
  characters.innerHTML = doc.characters
    .map(
      (character, index) => `
  <fieldset class="character" data-index="${index}">
    <legend>character</legend>
    <label>name <input data-cfield="name" data-index="${index}" value="${escapeHtml(character.name)}"></label>
    <label>description <input data-cfield="description" data-index="${index}" value="${escapeHtml(character.description)}"></label>
    <label>behavior prompt
      <textarea data-cfield="behavior_prompt" data-index="${index}" rows="2">${escapeHtml(character.behavior_prompt)}</textarea>
    </label>
    <button type="button" data-action="remove-character" data-index="${index}">remove</button>
  </fieldset>`,
    )
    .join("");

  const playerSelect = $<HTMLSelectElement>("player-character");
  playerSelect.innerHTML =
    `<option value="">(none — autonomous only)</option>` +
    doc.characters
      .map(
        (c) =>
          `<option value="${escapeHtml(c.name)}"${doc.player_character === c.name ? " selected" : ""}>${escapeHtml(c.name)}</option>`,
      )
      .join("");

  $<HTMLDivElement>("triggers").innerHTML = doc.triggers
    .map((trigger, index) => triggerFields(trigger, index))
    .join("");

  const status = $<HTMLDivElement>("editor-status");
  const parts: string[] = [];
  if (editor.serverError) {
    parts.push(
      `<div class="error">${escapeHtml(editor.serverError.path)} ${escapeHtml(editor.serverError.message)}</div>`,
    );
  }
  for (const warning of editor.warnings) {
    parts.push(`<div class="warning">[${escapeHtml(warning.code)}] ${escapeHtml(warning.message)}</div>`);
  }
  if (editor.dirty) {
    parts.push(`<div class="dirty">unsaved changes</div>`);
  }
  if (editor.storyId) {
    parts.push(`<div class="muted">story id: ${escapeHtml(editor.storyId)}</div>`);
  }
  status.innerHTML = parts.join("");
  $<HTMLButtonElement>("save-story").disabled = !editor.canSave;
}

function parseIdList(value: string): string[] {
  return value
    .split(",")
    .map((s) => s.trim())
    .filter(Boolean);
}

function bindEditor(): void {
  $<HTMLInputElement>("story-title").addEventListener("input", (event) => {
    editor.update((doc) => {
      doc.title = (event.target as HTMLInputElement).value;
    });
    renderStatusOnly();
  });
  $<HTMLInputElement>("world-setting").addEventListener("input", (event) => {
    editor.update((doc) => {
      doc.world_setting = (event.target as HTMLInputElement).value;
    });
    renderStatusOnly();
  });
  $<HTMLSelectElement>("player-character").addEventListener("change", (event) => {
    const value = (event.target as HTMLSelectElement).value;
    editor.update((doc) => {
      doc.player_character = value || null;
    });
    renderStatusOnly();
  });

  $<HTMLDivElement>("characters").addEventListener("input", (event) => {
    const target = event.target as HTMLInputElement;
    const field = target.dataset.cfield;
    const index = Number(target.dataset.index);
    if (!field) return;
    editor.update((doc) => {
      (doc.characters[index] as unknown as Record<string, string>)[field] = target.value;
    });
    renderStatusOnly();
  });

  $<HTMLDivElement>("triggers").addEventListener("input", (event) => {
    const target = event.target as HTMLInputElement;
    const field = target.dataset.field;
    const index = Number(target.dataset.index);
    if (!field) return;
    editor.update((doc) => {
      const trigger = doc.triggers[index];
      switch (field) {
        case "condition":
          trigger.condition = target.value;
          break;
        case "actions":
          trigger.actions = target.value.split("\n").filter((a) => a.trim());
          break;
        case "type":
          trigger.type = target.value;
          break;
        case "repeatable":
          trigger.repeatable = target.checked;
          break;
        case "fallback_k":
          trigger.fallback_k = target.value ? Number(target.value) : null;
          break;
        case "cooldown_turns":
          trigger.cooldown_turns = Number(target.value) || 0;
          break;
        case "requires_fired":
          trigger.requires_fired = parseIdList(target.value);
          break;
        case "requires_not_fired":
          trigger.requires_not_fired = parseIdList(target.value);
          break;
      }
    });
    renderStatusOnly();
  });

  document.body.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset.action;
    if (!action) return;
    const index = Number(target.dataset.index);
    if (action === "remove-character") {
      editor.update((doc) => void doc.characters.splice(index, 1));
      renderEditor();
    } else if (action === "remove-trigger") {
      editor.update((doc) => void doc.triggers.splice(index, 1));
      renderEditor();
    }
  });

  $<HTMLButtonElement>("add-character").addEventListener("click", () => {
    editor.update((doc) =>
      doc.characters.push({ name: "", description: "", behavior_prompt: "" }),
    );
    renderEditor();
  });
  $<HTMLButtonElement>("add-trigger").addEventListener("click", () => {
    editor.update((doc) =>
      doc.triggers.push({
        condition: "",
        actions: [],
        type: "basic",
        repeatable: false,
        fallback_k: null,
        cooldown_turns: 0,
        requires_fired: [],
        requires_not_fired: [],
      }),
    );
    renderEditor();
  });

  $<HTMLButtonElement>("new-story").addEventListener("click", () => {
    editor.storyId = null;
    editor.doc = emptyStory();
    editor.dirty = false;
    editor.serverError = null;
    editor.warnings = [];
    renderEditor();
  });

  $<HTMLButtonElement>("save-story").addEventListener("click", async () => {
    await editor.save();
    renderEditor();
    await refreshStoryList();
  });

  $<HTMLSelectElement>("story-list").addEventListener("change", async (event) => {
    const id = (event.target as HTMLSelectElement).value;
    if (id) {
      await editor.load(id);
      renderEditor();
    }
  });
}

function renderStatusOnly(): void {
  // lightweight path for keystrokes: only the status box and save button
  const status = $<HTMLDivElement>("editor-status");
  const parts: string[] = [];
  if (editor.serverError) {
    parts.push(
      `<div class="error">${escapeHtml(editor.serverError.path)} ${escapeHtml(editor.serverError.message)}</div>`,
    );
  }
  if (editor.dirty) {
    parts.push(`<div class="dirty">unsaved changes</div>`);
  }
  status.innerHTML = parts.join("");
  $<HTMLButtonElement>("save-story").disabled = !editor.canSave;
}

async function refreshStoryList(): Promise<void> {
  const { stories } = await client.listStories();
  const select = $<HTMLSelectElement>("story-list");
  const current = editor.storyId ?? "";
  select.innerHTML =
    `<option value="">(load a story)</option>` +
    stories
      .map(
        (s) =>
          `<option value="${escapeHtml(s.id)}"${s.id === current ? " selected" : ""}>${escapeHtml(s.title)} (${s.characters}c/${s.triggers}t)</option>`,
      )
      .join("");
}

// ---------------------------------------------------------------------------
// playback rendering
// ---------------------------------------------------------------------------

function lineHtml(line: ScriptLine, index: number): string {
  if (line.kind === "dialogue") {
    const mark = playback.lineAnnotation(index);
    const markText = mark ? (mark.good ? " ✓good" : " ✗bad") : "";
    return `<div class="line dialogue" data-line="${index}">
      <span>${escapeHtml(renderLine(line))}</span>
      <span class="tools">
        <button data-annotate-line="${index}" data-good="1" title="good line">+</button>
        <button data-annotate-line="${index}" data-good="0" title="bad line">−</button>
        <span class="mark">${markText}</span>
      </span>
    </div>`;
  }
  const trigger = injectedTriggerId(line);
  const badge = trigger ? `<span class="badge">${escapeHtml(trigger)}</span>` : "";
  return `<div class="line action"><em>${escapeHtml(renderLine(line))}</em>${badge}</div>`;
}

function renderPlayback(): void {
  const info = $<HTMLDivElement>("session-info");
  const view = playback.view;
  if (!view) {
    info.textContent = "no session";
    $<HTMLDivElement>("script-view").innerHTML = "";
    $<HTMLDivElement>("firings").innerHTML = "";
    return;
  }
  info.textContent =
    `${view.title} — ${view.mode}, ${view.state}` +
    (view.ended_by ? ` (ended by ${view.ended_by})` : "") +
    ` — turn ${view.turn}, ${view.line_count} lines` +
    (playback.running ? " — running" : "");

  const script = $<HTMLDivElement>("script-view");
  script.innerHTML =
    `<div class="line setting"><em>${escapeHtml(`*${view.world_setting}*`)}</em></div>` +
    playback.lines.map((line, index) => lineHtml(line, index)).join("");
  script.scrollTop = script.scrollHeight;

  $<HTMLDivElement>("player-input-row").style.display = playback.awaitingPlayer
    ? "flex"
    : "none";
  if (playback.awaitingPlayer && view.player_character) {
    $<HTMLSpanElement>("player-name").textContent = `${view.player_character}:`;
  }

  const firings = $<HTMLDivElement>("firings");
  firings.innerHTML = playback.firings
    .map((firing, index) => {
      const mark = playback.firingAnnotation(index);
      const markText = mark ? (mark.correct ? "✓ correct" : "✗ incorrect") : "";
      return `<div class="firing">
        turn ${firing.turn}: <strong>${escapeHtml(firing.trigger_id)}</strong>[${firing.action_index}]
        <em>${escapeHtml(firing.text)}</em>
        <button data-annotate-firing="${index}" data-correct="1">correct</button>
        <button data-annotate-firing="${index}" data-correct="0">incorrect</button>
        <span class="mark">${markText}</span>
      </div>`;
    })
    .join("");

  const snapshotSelect = $<HTMLSelectElement>("snapshot-list");
  snapshotSelect.innerHTML = [...playback.snapshots]
    .sort((a, b) => a - b)
    .map((count) => `<option value="${count}">line ${count}</option>`)
    .join("");

  $<HTMLDivElement>("playback-notice").textContent = playback.notice ?? "";
}

function bindPlayback(): void {
  $<HTMLButtonElement>("create-session").addEventListener("click", async () => {
    if (!editor.storyId) {
      playback.notice = "save the story first";
      renderPlayback();
      return;
    }
    const mode = $<HTMLSelectElement>("session-mode").value as "interactive" | "autonomous";
    const backendKind = $<HTMLSelectElement>("backend-kind").value;
    const backend =
      backendKind === "scripted"
        ? { kind: "scripted" as const, responses: JSON.parse($<HTMLTextAreaElement>("scripted-json").value || "[]") }
        : { kind: "live" as const };
    await playback.createSession(editor.storyId, mode, backend);
    renderPlayback();
  });

  $<HTMLSelectElement>("backend-kind").addEventListener("change", (event) => {
    const scripted = (event.target as HTMLSelectElement).value === "scripted";
    $<HTMLTextAreaElement>("scripted-json").style.display = scripted ? "block" : "none";
  });

  $<HTMLButtonElement>("run").addEventListener("click", async () => {
    if (playback.running) return;
    const loop = playback.run();
    const repaint = setInterval(renderPlayback, 120);
    await loop;
    clearInterval(repaint);
    renderPlayback();
  });
  $<HTMLButtonElement>("pause").addEventListener("click", () => {
    playback.pause();
    renderPlayback();
  });
  $<HTMLButtonElement>("step").addEventListener("click", async () => {
    await playback.step();
    renderPlayback();
  });

  $<HTMLButtonElement>("send-player-line").addEventListener("click", async () => {
    const input = $<HTMLInputElement>("player-line");
    if (await playback.submitPlayerLine(input.value)) {
      input.value = "";
    }
    renderPlayback();
  });

  $<HTMLButtonElement>("reset").addEventListener("click", async () => {
    const value = $<HTMLSelectElement>("snapshot-list").value;
    if (value) {
      playback.pause();
      await playback.resetTo(Number(value));
      renderPlayback();
    }
  });

  $<HTMLButtonElement>("download-export").addEventListener("click", async () => {
    const exported = await playback.downloadExport();
    const blob = new Blob([JSON.stringify(exported, null, 2)], {
      type: "application/json",
    });
    const anchor = document.createElement("a");
    anchor.href = URL.createObjectURL(blob);
    anchor.download = `${exported.session_id}.json`;
    anchor.click();
    URL.revokeObjectURL(anchor.href);
  });

  $<HTMLDivElement>("script-view").addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset.annotateLine !== undefined) {
      await playback.annotateLine(
        Number(target.dataset.annotateLine),
        target.dataset.good === "1",
      );
      renderPlayback();
    }
  });

  $<HTMLDivElement>("firings").addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset.annotateFiring !== undefined) {
      await playback.annotateFiring(
        Number(target.dataset.annotateFiring),
        target.dataset.correct === "1",
      );
      renderPlayback();
    }
  });
}

// ---------------------------------------------------------------------------

async function start(): Promise<void> {
  bindEditor();
  bindPlayback();
  renderEditor();
  renderPlayback();
  await refreshStoryList();
}

start().catch((error) => {
  console.error(error);
  document.body.insertAdjacentHTML(
    "afterbegin",
    `<div class="error">failed to start: ${escapeHtml(String(error))}</div>`,
  );
});
