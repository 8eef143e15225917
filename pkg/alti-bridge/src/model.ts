/**
 * Toy decoder-only transformer: embeddings, causal self-attention layers with
 * residual connections, tied-nothing unembedding. No layer norm and no MLP,
 * so attribution decompositions are exact. Weights are hand-settable JSON.
 */

import { readFileSync } from "node:fs";
import { Mat, Vec, add, dot, logSoftmax, matMul, softmax, vecMat, zeros } from "./matrix.js";
import { WordTokenizer } from "./tokenizer.js";

export interface LayerWeights {
  wq: Mat; // d x d
  wk: Mat; // d x d
  wv: Mat; // d x d
  wo: Mat; // d x d
}

export interface ModelWeights {
  vocab: string[];
  dModel: number;
  nHeads: number;
  embedding: Mat; // V x d
  positional: Mat | null; // maxLen x d
  layers: LayerWeights[];
  unembedding: Mat; // V x d
}

export interface LayerTrace {
  /** Input states x^{l-1}, one vector per position. */
  inputs: Vec[];
  /** Attention weights per head: att[h][i][j]. */
  attention: Mat[];
  /** Per-position output of the attention block (before residual). */
  attnOut: Vec[];
  /**
   * Per-source attention terms for every position: terms[i][j] is the
   * contribution of source j to position i's attention output, i.e.
   * concat_h(A^h_ij * v^h_j) W_o. Summing over j gives attnOut[i].
   */
  terms: Vec[][];
}

export interface ForwardTrace {
  states: Vec[]; // final states x^L
  layers: LayerTrace[];
  logits: Vec[]; // per position
}

export function loadWeights(path: string): ModelWeights {
  const raw = JSON.parse(readFileSync(path, "utf-8"));
  return validateWeights(raw);
}

export function validateWeights(raw: any): ModelWeights {
  const required = ["vocab", "dModel", "nHeads", "embedding", "layers", "unembedding"];
  for (const field of required) {
    if (!(field in raw)) throw new Error(`model weights missing field: ${field}`);
  }
  const d = raw.dModel;
  if (d % raw.nHeads !== 0) throw new Error("dModel must be divisible by nHeads");
  if (raw.embedding.length !== raw.vocab.length) {
    throw new Error("embedding row count must match vocab size");
  }
  if (raw.unembedding.length !== raw.vocab.length) {
    throw new Error("unembedding row count must match vocab size");
  }
  return {
    vocab: raw.vocab,
    dModel: d,
    nHeads: raw.nHeads,
    embedding: raw.embedding,
    positional: raw.positional ?? null,
    layers: raw.layers,
    unembedding: raw.unembedding,
  };
}

export class ToyTransformer {
  readonly weights: ModelWeights;
  readonly tokenizer: WordTokenizer;

  constructor(weights: ModelWeights) {
    this.weights = weights;
    this.tokenizer = new WordTokenizer(weights.vocab);
  }

  get headDim(): number {
    return this.weights.dModel / this.weights.nHeads;
  }

  embed(ids: number[]): Vec[] {
    return ids.map((id, pos) => {
      const base = [...this.weights.embedding[id]];
      if (this.weights.positional) {
        const p = this.weights.positional[Math.min(pos, this.weights.positional.length - 1)];
        for (let k = 0; k < base.length; k++) base[k] += p[k];
      }
      return base;
    });
  }

  /** Full forward pass with the per-layer internals attribution needs. */
  forward(ids: number[]): ForwardTrace {
    const { dModel, nHeads } = this.weights;
    const dHead = this.headDim;
    let states = this.embed(ids);
    const layers: LayerTrace[] = [];

    for (const layer of this.weights.layers) {
      const n = states.length;
      const q = states.map((x) => vecMat(x, layer.wq));
      const k = states.map((x) => vecMat(x, layer.wk));
      const v = states.map((x) => vecMat(x, layer.wv));

      const attention: Mat[] = [];
      for (let h = 0; h < nHeads; h++) attention.push(zeros(n, n));
      const terms: Vec[][] = [];
      const attnOut: Vec[] = [];

      for (let i = 0; i < n; i++) {
        // causal scores per head over j <= i
        for (let h = 0; h < nHeads; h++) {
          const lo = h * dHead;
          const scores: number[] = [];
          for (let j = 0; j <= i; j++) {
            let s = 0;
            for (let c = 0; c < dHead; c++) s += q[i][lo + c] * k[j][lo + c];
            scores.push(s / Math.sqrt(dHead));
          }
          const probs = softmax(scores);
          for (let j = 0; j <= i; j++) attention[h][i][j] = probs[j];
        }
        // per-source terms: concat_h(A^h_ij v^h_j) W_o
        const rowTerms: Vec[] = [];
        let out = new Array(dModel).fill(0);
        for (let j = 0; j < n; j++) {
          if (j > i) {
            rowTerms.push(new Array(dModel).fill(0));
            continue;
          }
          const mixed = new Array(dModel).fill(0);
          for (let h = 0; h < nHeads; h++) {
            const lo = h * dHead;
            const a = attention[h][i][j];
            for (let c = 0; c < dHead; c++) mixed[lo + c] = a * v[j][lo + c];
          }
          const term = vecMat(mixed, layer.wo);
          rowTerms.push(term);
          out = add(out, term);
        }
        terms.push(rowTerms);
        attnOut.push(out);
      }

      layers.push({ inputs: states.map((x) => [...x]), attention, attnOut, terms });
      states = states.map((x, i) => add(x, attnOut[i]));
    }

    const logits = states.map((x) => this.weights.unembedding.map((row) => dot(row, x)));
    return { states, layers, logits };
  }

  /** Per-token log-probabilities of a forced token sequence (position 0 has none). */
  scoreTokens(ids: number[]): (number | null)[] {
    const trace = this.forward(ids);
    const out: (number | null)[] = [null];
    for (let pos = 1; pos < ids.length; pos++) {
      const lps = logSoftmax(trace.logits[pos - 1]);
      out.push(lps[ids[pos]]);
    }
    return out;
  }

  /** Greedy next-token ids. */
  generate(ids: number[], maxTokens: number): number[] {
    const out = [...ids];
    for (let step = 0; step < maxTokens; step++) {
      const trace = this.forward(out);
      const logits = trace.logits[out.length - 1];
      let best = 0;
      for (let i = 1; i < logits.length; i++) if (logits[i] > logits[best]) best = i;
      out.push(best);
    }
    return out.slice(ids.length);
  }
}

export { matMul };
