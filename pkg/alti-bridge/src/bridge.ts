/**
 * compute_alti: run ALTI-Logit over a prepared-instances file and emit ap-v1.
 *
 * Instances whose text or spans do not align to the model's tokenization are
 * rejected individually with a reason; the rest are emitted in input order.
 */

import { writeFileSync } from "node:fs";
import { altiLogitScores } from "./alti.js";
import { AttributionInstance, readInstances } from "./instances.js";
import { ApRecord, makeRecord, spansToTokenSets, toJsonl } from "./interchange.js";
import { ModelWeights, ToyTransformer } from "./model.js";

export interface BridgeResult {
  records: ApRecord[];
  rejected: { exampleId: string; reason: string }[];
}

export function computeInstance(model: ToyTransformer, instance: AttributionInstance): ApRecord {
  const fullInput = instance.promptText + instance.forcedPrefix;
  const { ids, offsets } = model.tokenizer.encodeWithOffsets(fullInput);
  if (ids.length === 0) throw new Error("instance has no input tokens");
  const pronounIds = model.tokenizer.encode(instance.pronounText);
  if (pronounIds.length === 0) throw new Error("pronoun does not tokenize");
  const spans = spansToTokenSets(instance.charSpans, offsets);
  const { scores, logits } = altiLogitScores(model, ids, pronounIds);
  const tokens = offsets.map((s) => fullInput.slice(s.start, s.end));
  return makeRecord(instance.instanceId ?? instance.exampleId, tokens, scores, spans, {
    method_detail: "alti_logit/l1-rollback",
    pronoun_logits: logits,
    n_layers: model.weights.layers.length,
  });
}

export function computeAlti(weights: ModelWeights, instancesPath: string): BridgeResult {
  const model = new ToyTransformer(weights);
  const records: ApRecord[] = [];
  const rejected: { exampleId: string; reason: string }[] = [];
  for (const instance of readInstances(instancesPath)) {
    try {
      records.push(computeInstance(model, instance));
    } catch (err) {
      rejected.push({ exampleId: instance.instanceId, reason: String(err) });
    }
  }
  return { records, rejected };
}

export function writeRecords(records: ApRecord[], outPath: string): void {
  writeFileSync(outPath, toJsonl(records), "utf-8");
}
