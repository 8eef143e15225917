/**
 * Reader for the harness's prepared-instances JSONL (attribution task rows).
 */

import { readFileSync } from "node:fs";

export type CharRange = [number, number];

export interface AttributionInstance {
  instanceId: string;
  exampleId: string;
  promptText: string;
  forcedPrefix: string;
  pronounText: string;
  charSpans: Record<string, CharRange[]>;
}

export function readInstances(path: string): AttributionInstance[] {
  const out: AttributionInstance[] = [];
  const lines = readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, idx) => {
    if (!line.trim()) return;
    let record: any;
    try {
      record = JSON.parse(line);
    } catch (err) {
      throw new Error(`${path}:${idx + 1}: malformed JSON (${err})`);
    }
    for (const field of ["instance_id", "prompt_text"]) {
      if (!(field in record)) throw new Error(`${path}:${idx + 1}: missing field ${field}`);
    }
    out.push({
      instanceId: record.instance_id,
      exampleId: record.example_id ?? record.instance_id,
      promptText: record.prompt_text,
      forcedPrefix: record.forced_prefix ?? "",
      pronounText: record.pronoun_text ?? "",
      charSpans: record.char_spans ?? {},
    });
  });
  return out;
}
