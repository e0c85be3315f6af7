// Round-trip acceptance: the UI state machines against the real session
// service with a scripted backend. Asserts the full authoring loop — edit
// and save, run to awaiting-player, submit a line, see the injected action,
// annotate the firing, download the export — and that the UI script view
// equals the server's .txt export line-for-line, and that every network
// call the UI made used a documented route.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { EditorState } from "../src/editor.js";
import { PlaybackState } from "../src/playback.js";
import type { StoryDocument } from "../src/types.js";

const PORT = 8700 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

const DOCUMENTED_ROUTES = [
  /^GET \/stories$/,
  /^POST \/stories$/,
  /^GET \/stories\/[^/]+$/,
  /^PUT \/stories\/[^/]+$/,
  /^POST \/sessions$/,
  /^GET \/sessions$/,
  /^GET \/sessions\/[^/]+$/,
  /^GET \/sessions\/[^/]+\/lines(\?.*)?$/,
  /^POST \/sessions\/[^/]+\/step$/,
  /^POST \/sessions\/[^/]+\/player-line$/,
  /^POST \/sessions\/[^/]+\/pause$/,
  /^POST \/sessions\/[^/]+\/resume$/,
  /^GET \/sessions\/[^/]+\/snapshots$/,
  /^POST \/sessions\/[^/]+\/snapshots$/,
  /^POST \/sessions\/[^/]+\/reset$/,
  /^GET \/sessions\/[^/]+\/annotations$/,
  /^POST \/sessions\/[^/]+\/annotations$/,
  /^GET \/sessions\/[^/]+\/export$/,
  /^GET \/sessions\/[^/]+\/export\.txt$/,
];

let server: ChildProcess;
let dataDir: string;
const networkLog: string[] = [];

const loggingFetch = (input: string, init?: RequestInit) => {
  const method = init?.method ?? "GET";
  networkLog.push(`${method} ${input.replace(BASE, "")}`);
  return fetch(input, init);
};

const client = new ApiClient(BASE, loggingFetch);

async function waitForService(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "dramakit-ui-"));
  server = spawn(
    "python3",
    [
      "-m",
      "dramakit.cli",
      "serve",
      "--data-dir",
      dataDir,
      "--bind",
      `127.0.0.1:${PORT}`,
      "--log-level",
      "warning",
    ],
    { stdio: "inherit" },
  );
  await waitForService();
});

afterAll(() => {
  server?.kill();
  rmSync(dataDir, { recursive: true, force: true });
});

describe("UI round trip against the live service", () => {
  const fixture = JSON.parse(
    readFileSync(join(__dirname, "..", "..", "fixtures", "dinner_table.json"), "utf-8"),
  ) as StoryDocument;

  const editor = new EditorState(client, fixture);
  const playback = new PlaybackState(client);

  it("author edits and saves the story", async () => {
    editor.update((doc) => {
      doc.title = "Dinner Table (authored in UI)";
    });
    expect(await editor.save()).toBe(true);
    expect(editor.storyId).not.toBeNull();
    expect(editor.dirty).toBe(false);

    // a second edit goes through PUT and round-trips
    editor.update((doc) => {
      doc.characters[1].description = "A quiet guest, mind elsewhere.";
    });
    expect(await editor.save()).toBe(true);
    const stored = await client.getStory(editor.storyId!);
    expect(stored.story.title).toBe("Dinner Table (authored in UI)");
    expect(stored.story.characters[1].description).toBe("A quiet guest, mind elsewhere.");
  });

  it("rejected documents disable save until edited", async () => {
    const scratch = new EditorState(
      client,
      JSON.parse(JSON.stringify(editor.doc)) as StoryDocument,
    );
    scratch.storyId = null;
    scratch.update((doc) => {
      doc.world_setting = "two\nlines";
    });
    expect(await scratch.save()).toBe(false);
    expect(scratch.canSave).toBe(false);
    expect(scratch.serverError?.message).toContain("newline");
    scratch.update((doc) => {
      doc.world_setting = "One line again.";
    });
    expect(scratch.canSave).toBe(true);
  });

  it("runs to awaiting-player, takes the typed line, shows the injected action", async () => {
    playback.tickMs = 0;
    await playback.createSession(editor.storyId!, "interactive", {
      kind: "scripted",
      responses: [
        { match: "simulation", response: "<line>Sepideh: You're somewhere else tonight.</line>" },
        { match: "trigger_check", response: "NO" },
        { match: "simulation", response: "<line>Byron: generated line, must be discarded</line>" },
        { match: "trigger_check", response: "YES" },
      ],
    });

    await playback.run(); // client loop: steps until the session awaits the player
    expect(playback.awaitingPlayer).toBe(true);
    expect(playback.lines.length).toBe(1); // the generated player line was discarded

    expect(await playback.submitPlayerLine("Sorry. Work has me wound up.")).toBe(true);
    const kinds = playback.lines.map((line) => line.kind);
    expect(kinds).toEqual(["dialogue", "dialogue", "stage_action"]);
    const last = playback.lines[2];
    expect(last.kind === "stage_action" && last.source.type === "trigger").toBe(true);
    expect(playback.firings.length).toBe(1);
    expect(playback.firings[0].trigger_id).toBe("trigger-0");
    // no generated player text ever entered the transcript
    const texts = playback.lines.map((line) => ("text" in line ? line.text : ""));
    expect(texts).not.toContain("generated line, must be discarded");
  });

  it("marks one firing correct", async () => {
    expect(await playback.annotateFiring(0, true, "author-1")).toBe(true);
    expect(playback.firingAnnotation(0)?.correct).toBe(true);
    // the duplicate is refused and surfaced as a notice
    expect(await playback.annotateFiring(0, false, "author-1")).toBe(false);
    expect(playback.notice).toContain("already annotated");
  });

  it("downloads an export matching the server's", async () => {
    const downloaded = await playback.downloadExport();
    const direct = await (await fetch(`${BASE}/sessions/${playback.sessionId}/export`)).json();
    expect(downloaded).toEqual(direct);
    expect(downloaded.annotations.length).toBe(1);
    expect(downloaded.firing_log.length).toBe(1);
  });

  it("script view equals the .txt export line-for-line", async () => {
    const text = await client.exportText(playback.sessionId);
    expect(playback.scriptText() + "\n").toBe(text);
    expect(playback.scriptText().split("\n")).toEqual(text.replace(/\n$/, "").split("\n"));
  });

  it("reset-to-line replays the scripted continuation", async () => {
    const before = playback.scriptText();
    await playback.resetTo(1); // back to just the first dialogue line
    expect(playback.lines.length).toBe(1);
    // the queue rewound too: stepping intercepts the player line again
    await playback.run();
    expect(playback.awaitingPlayer).toBe(true);
    expect(await playback.submitPlayerLine("Sorry. Work has me wound up.")).toBe(true);
    expect(playback.scriptText()).toBe(before);
  });

  it("only documented API routes were used", () => {
    expect(networkLog.length).toBeGreaterThan(0);
    for (const call of networkLog) {
      expect(
        DOCUMENTED_ROUTES.some((route) => route.test(call)),
        `undocumented call: ${call}`,
      ).toBe(true);
    }
  });
});
