/**
 * Deterministic toy model builders used by tests and demos.
 */

import { writeFileSync } from "node:fs";
import { Mat, zeros } from "./matrix.js";
import { ModelWeights } from "./model.js";

/** Small deterministic generator (LCG) so hand-weighted models are stable. */
function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32 - 0.5;
  };
}

function randomMat(rows: number, cols: number, next: () => number, scale = 1): Mat {
  return Array.from({ length: rows }, () => Array.from({ length: cols }, () => next() * scale));
}

export const ORACLE_VOCAB = [
  "English:",
  "German:",
  "the",
  "cat",
  "sat",
  ".",
  "Die",
  "Katze",
  "sie",
  "er",
];

/** 1-layer, 2-head model with arbitrary (seeded) weights for oracle checks. */
export function handWeightedOneLayer(seed = 7): ModelWeights {
  const next = lcg(seed);
  const d = 4;
  const v = ORACLE_VOCAB.length;
  return {
    vocab: [...ORACLE_VOCAB],
    dModel: d,
    nHeads: 2,
    embedding: randomMat(v, d, next),
    positional: randomMat(16, d, next, 0.3),
    layers: [
      {
        wq: randomMat(d, d, next),
        wk: randomMat(d, d, next),
        wv: randomMat(d, d, next),
        wo: randomMat(d, d, next),
      },
    ],
    unembedding: randomMat(v, d, next),
  };
}

/** Two stacked hand-weighted layers; exercises the contribution rollback. */
export function handWeightedTwoLayer(seed = 9): ModelWeights {
  const base = handWeightedOneLayer(seed);
  const next = lcg(seed + 1);
  const d = base.dModel;
  base.layers.push({
    wq: randomMat(d, d, next),
    wk: randomMat(d, d, next),
    wv: randomMat(d, d, next),
    wo: randomMat(d, d, next),
  });
  return base;
}

/**
 * Model whose pronoun logit depends on exactly one vocabulary word.
 *
 * Attention is uniform (zero query/key weights); the trigger's embedding
 * channel is routed through the value/output path onto the channel the
 * pronoun's unembedding row reads, so logit(pronoun) is proportional to the
 * trigger's share of the input. Every other word is orthogonal to that path.
 */
export function singleDependenceModel(
  vocab: string[],
  trigger: string,
  pronoun: string,
  gain = 24
): ModelWeights {
  const d = 4;
  const v = vocab.length;
  const triggerId = vocab.indexOf(trigger);
  const pronounId = vocab.indexOf(pronoun);
  if (triggerId < 0 || pronounId < 0) throw new Error("trigger/pronoun must be in vocab");

  const embedding = zeros(v, d);
  for (let i = 0; i < v; i++) {
    if (i === triggerId) {
      embedding[i][2] = 1;
    } else {
      embedding[i][0] = 1;
      embedding[i][3] = (i + 1) / (v + 1); // distinct, but off the readout path
    }
  }
  const wo = zeros(d, d);
  wo[2][1] = 1; // route the trigger channel onto the readout channel
  const unembedding = zeros(v, d);
  unembedding[pronounId][1] = gain;

  return {
    vocab: [...vocab],
    dModel: d,
    nHeads: 1,
    embedding,
    positional: null,
    layers: [{ wq: zeros(d, d), wk: zeros(d, d), wv: identityMat(d), wo }],
    unembedding,
  };
}

function identityMat(n: number): Mat {
  const m = zeros(n, n);
  for (let i = 0; i < n; i++) m[i][i] = 1;
  return m;
}

export function writeWeights(weights: ModelWeights, path: string): void {
  writeFileSync(path, JSON.stringify(weights, null, 2), "utf-8");
}
