/**
 * ap-v1 interchange records: one JSONL line per instance with non-negative
 * per-token scores and named token-index span sets. Character-range spans
 * from the instances file are resolved against this model's tokenization
 * here, so importers never need the tokenizer.
 */

import { CharRange } from "./instances.js";
import { TokenSpan } from "./tokenizer.js";

export const SCHEMA_VERSION = "ap-v1";

export interface ApRecord {
  schema: string;
  example_id: string;
  tokens: string[];
  scores: number[];
  spans: Record<string, number[]>;
  method: string;
  meta: Record<string, unknown>;
}

export function spansToTokenSets(
  charSpans: Record<string, CharRange[]>,
  offsets: TokenSpan[]
): Record<string, number[]> {
  const out: Record<string, number[]> = {};
  for (const [kind, ranges] of Object.entries(charSpans)) {
    const members = new Set<number>();
    for (const [start, end] of ranges) {
      offsets.forEach((span, index) => {
        if (span.start < end && start < span.end) members.add(index);
      });
    }
    out[kind] = [...members].sort((a, b) => a - b);
  }
  return out;
}

export function makeRecord(
  exampleId: string,
  tokens: string[],
  scores: number[],
  spans: Record<string, number[]>,
  meta: Record<string, unknown>
): ApRecord {
  if (tokens.length !== scores.length) {
    throw new Error(`${exampleId}: ${scores.length} scores for ${tokens.length} tokens`);
  }
  if (scores.some((s) => s < 0)) {
    throw new Error(`${exampleId}: negative score in ap-v1 record`);
  }
  for (const [kind, members] of Object.entries(spans)) {
    if (members.some((i) => i < 0 || i >= tokens.length)) {
      throw new Error(`${exampleId}: span ${kind} index out of range`);
    }
  }
  return { schema: SCHEMA_VERSION, example_id: exampleId, tokens, scores, spans, method: "alti_logit", meta };
}

export function toJsonl(records: ApRecord[]): string {
  return records.map((r) => JSON.stringify(r)).join("\n") + "\n";
}

export function attributionPercentage(record: ApRecord, spanKind: string): number | null {
  const total = record.scores.reduce((a, b) => a + b, 0);
  if (total <= 0) return null;
  const indices =
    spanKind === "full_input"
      ? record.scores.map((_, i) => i)
      : record.spans[spanKind] ?? [];
  const mass = indices.reduce((acc, i) => acc + record.scores[i], 0);
  return (mass / total) * 100;
}
