/**
 * ALTI-Logit vs an independent single-layer oracle, plus conservation laws.
 */

import { describe, expect, it } from "vitest";
import { altiLogitScores, attributeLogit, layerContributions } from "../src/alti.js";
import { ModelWeights, ToyTransformer } from "../src/model.js";
import { handWeightedOneLayer, handWeightedTwoLayer, ORACLE_VOCAB } from "../src/toy.js";

/**
 * Independent oracle: explicit matrix computation of the single layer's
 * contribution terms, written with its own plain loops (no model internals).
 */
function oneLayerOracle(weights: ModelWeights, ids: number[], targetId: number): number[] {
  const d = weights.dModel;
  const heads = weights.nHeads;
  const dHead = d / heads;
  const layer = weights.layers[0];
  const n = ids.length;

  // embeddings (+ positional)
  const x: number[][] = ids.map((id, pos) => {
    const row = [...weights.embedding[id]];
    if (weights.positional) {
      for (let c = 0; c < d; c++) row[c] += weights.positional[pos][c];
    }
    return row;
  });

  const mul = (v: number[], m: number[][]) => {
    const out = new Array(m[0].length).fill(0);
    for (let i = 0; i < v.length; i++)
      for (let j = 0; j < m[0].length; j++) out[j] += v[i] * m[i][j];
    return out;
  };
  const q = x.map((v) => mul(v, layer.wq));
  const k = x.map((v) => mul(v, layer.wk));
  const v = x.map((vv) => mul(vv, layer.wv));

  const t = n - 1;
  const u = weights.unembedding[targetId];

  // per-head causal softmax attention from the last position
  const attn: number[][] = [];
  for (let h = 0; h < heads; h++) {
    const scores: number[] = [];
    for (let j = 0; j <= t; j++) {
      let s = 0;
      for (let c = 0; c < dHead; c++) s += q[t][h * dHead + c] * k[j][h * dHead + c];
      scores.push(s / Math.sqrt(dHead));
    }
    const m = Math.max(...scores);
    const exps = scores.map((s) => Math.exp(s - m));
    const z = exps.reduce((a, b) => a + b, 0);
    attn.push(exps.map((e) => e / z));
  }

  // expected contribution of input j: u . (concat_h A_tj v_j^h) W_o,
  // plus the direct embedding path for j = t; clamped at zero.
  const raw = new Array(n).fill(0);
  for (let j = 0; j <= t; j++) {
    const mixed = new Array(d).fill(0);
    for (let h = 0; h < heads; h++) {
      for (let c = 0; c < dHead; c++) mixed[h * dHead + c] = attn[h][j] * v[j][h * dHead + c];
    }
    const term = mul(mixed, layer.wo);
    let delta = 0;
    for (let c = 0; c < d; c++) delta += u[c] * term[c];
    raw[j] += delta;
  }
  let direct = 0;
  for (let c = 0; c < d; c++) direct += u[c] * x[t][c];
  raw[t] += direct;
  return raw.map((s) => Math.max(0, s));
}

describe("ALTI-Logit", () => {
  it("matches the explicit one-layer matrix oracle within 1e-6", () => {
    const weights = handWeightedOneLayer(7);
    const model = new ToyTransformer(weights);
    const ids = ["English:", "the", "cat", "sat", ".", "German:"].map((w) =>
      model.tokenizer.idOf(w)
    );
    const pronoun = model.tokenizer.idOf("sie");
    const { scores } = altiLogitScores(model, ids, [pronoun]);
    const expected = oneLayerOracle(weights, ids, pronoun);
    expect(scores.length).toBe(expected.length);
    for (let i = 0; i < scores.length; i++) {
      expect(Math.abs(scores[i] - expected[i])).toBeLessThan(1e-6);
    }
  });

  it("matches the oracle on several seeds and inputs", () => {
    for (const seed of [1, 2, 3, 11]) {
      const weights = handWeightedOneLayer(seed);
      const model = new ToyTransformer(weights);
      const words = ["Die", "Katze", "sat", "the", "German:"];
      const ids = words.map((w) => model.tokenizer.idOf(w));
      for (const target of ["sie", "er"]) {
        const targetId = model.tokenizer.idOf(target);
        const { scores } = altiLogitScores(model, ids, [targetId]);
        const expected = oneLayerOracle(weights, ids, targetId);
        for (let i = 0; i < scores.length; i++) {
          expect(Math.abs(scores[i] - expected[i])).toBeLessThan(1e-6);
        }
      }
    }
  });

  it("raw contributions sum to the target logit (1 and 2 layers)", () => {
    for (const weights of [handWeightedOneLayer(5), handWeightedTwoLayer(9)]) {
      const model = new ToyTransformer(weights);
      const ids = ["the", "cat", "sat", "German:"].map((w) => model.tokenizer.idOf(w));
      const trace = model.forward(ids);
      const target = model.tokenizer.idOf("sie");
      const result = attributeLogit(trace, weights.unembedding[target], ids.length);
      const total = result.raw.reduce((a, b) => a + b, 0);
      expect(Math.abs(total - result.logit)).toBeLessThan(1e-9);
    }
  });

  it("contribution matrix rows are stochastic", () => {
    const model = new ToyTransformer(handWeightedTwoLayer(4));
    const ids = ["the", "cat", "sat", ".", "German:"].map((w) => model.tokenizer.idOf(w));
    const trace = model.forward(ids);
    for (const layer of trace.layers) {
      const c = layerContributions(layer);
      for (const row of c) {
        const sum = row.reduce((a, b) => a + b, 0);
        expect(Math.abs(sum - 1)).toBeLessThan(1e-12);
        for (const value of row) expect(value).toBeGreaterThanOrEqual(0);
      }
    }
  });

  it("is deterministic", () => {
    const model = new ToyTransformer(handWeightedOneLayer(3));
    const ids = ["the", "cat", "German:"].map((w) => model.tokenizer.idOf(w));
    const pronoun = [model.tokenizer.idOf("sie")];
    const a = altiLogitScores(model, ids, pronoun);
    const b = altiLogitScores(model, ids, pronoun);
    expect(a.scores).toEqual(b.scores);
  });

  it("emits only non-negative scores", () => {
    const model = new ToyTransformer(handWeightedTwoLayer(13));
    const ids = ORACLE_VOCAB.slice(0, 8).map((w) => model.tokenizer.idOf(w));
    const { scores } = altiLogitScores(model, ids, [model.tokenizer.idOf("er")]);
    for (const s of scores) expect(s).toBeGreaterThanOrEqual(0);
  });

  it("handles multi-token pronouns by summing steps", () => {
    const model = new ToyTransformer(handWeightedOneLayer(2));
    const ids = ["the", "cat", "German:"].map((w) => model.tokenizer.idOf(w));
    const pronoun = ["sie", "sat"].map((w) => model.tokenizer.idOf(w));
    const { scores, logits } = altiLogitScores(model, ids, pronoun);
    expect(scores.length).toBe(ids.length);
    expect(logits.length).toBe(2);
  });
});
