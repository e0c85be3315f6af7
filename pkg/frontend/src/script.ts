// Script rendering. renderScriptText must stay line-for-line identical to
// the server's rendered .txt export (the round-trip test enforces it).

import type { ScriptLine } from "./types.js";

export function renderLine(line: ScriptLine): string {
  if (line.kind === "dialogue") {
    return `${line.speaker}: ${line.text}`;
  }
  return `*${line.text}*`;
}

export function renderScriptText(worldSetting: string, lines: ScriptLine[]): string {
  return [`*${worldSetting}*`, ...lines.map(renderLine)].join("\n");
}

export function isInjected(line: ScriptLine): boolean {
  return line.kind === "stage_action" && line.source.type === "trigger";
}

export function injectedTriggerId(line: ScriptLine): string | null {
  if (line.kind === "stage_action" && line.source.type === "trigger") {
    return line.source.trigger_id;
  }
  return null;
}
