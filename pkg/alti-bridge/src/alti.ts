/**
 * ALTI-Logit input attributions for the toy transformer.
 *
 * The target token's logit at the final position decomposes exactly into the
 * direct embedding path plus, per layer, the per-source attention terms.
 * Each layer's sources are mapped back to the model inputs through the
 * rolled product of per-layer token-to-token contribution matrices, which
 * measure (in L1 distance) how much each source participates in each
 * position's layer output, including the residual path.
 */

import { Mat, Vec, dot, l1Norm, matMul, sub } from "./matrix.js";
import { ForwardTrace, LayerTrace, ToyTransformer } from "./model.js";

/** Token-to-token contribution matrix of one layer (rows sum to 1). */
export function layerContributions(layer: LayerTrace): Mat {
  const n = layer.inputs.length;
  const out: Mat = [];
  for (let i = 0; i < n; i++) {
    const outputVec = layer.inputs[i].map((x, c) => x + layer.attnOut[i][c]);
    const norm = l1Norm(outputVec);
    const row = new Array(n).fill(0);
    let rowSum = 0;
    for (let j = 0; j <= i; j++) {
      let term = layer.terms[i][j];
      if (j === i) term = term.map((x, c) => x + layer.inputs[i][c]);
      const contribution = Math.max(0, norm - l1Norm(sub(outputVec, term)));
      row[j] = contribution;
      rowSum += contribution;
    }
    if (rowSum > 0) {
      for (let j = 0; j < n; j++) row[j] /= rowSum;
    } else {
      row[i] = 1; // degenerate layer output: fall back to the residual path
    }
    out.push(row);
  }
  return out;
}

export interface LogitAttribution {
  /** Raw (signed) per-input-token contributions; they sum to the logit. */
  raw: Vec;
  logit: number;
}

/**
 * Contributions of every input position to logit[target] at the last position.
 */
export function attributeLogit(
  trace: ForwardTrace,
  unembeddingRow: Vec,
  nInputs: number
): LogitAttribution {
  const t = trace.layers[0].inputs.length - 1;
  const raw = new Array(nInputs).fill(0);

  // Direct path: the final position's own embedding feeds the logit.
  if (t < nInputs) raw[t] += dot(unembeddingRow, trace.layers[0].inputs[t]);

  // rolled = R^{l-1}: rows map layer-(l-1) positions back to input positions.
  let rolled: Mat | null = null;
  for (const layer of trace.layers) {
    for (let j = 0; j < layer.inputs.length; j++) {
      const delta = dot(unembeddingRow, layer.terms[t][j]);
      if (delta === 0) continue;
      if (rolled === null) {
        if (j < nInputs) raw[j] += delta;
      } else {
        const back = rolled[j];
        for (let i = 0; i < nInputs; i++) raw[i] += delta * back[i];
      }
    }
    const contributions = layerContributions(layer);
    rolled = rolled === null ? contributions : matMul(contributions, rolled);
  }

  const logit = dot(unembeddingRow, trace.states[t]);
  return { raw, logit };
}

/**
 * ALTI-Logit scores for force-decoding the pronoun after the given input.
 *
 * Multi-token pronouns force-decode step by step; raw contributions over the
 * original input positions are summed across steps and clamped at zero.
 */
export function altiLogitScores(
  model: ToyTransformer,
  inputIds: number[],
  pronounIds: number[]
): { scores: Vec; logits: number[] } {
  if (pronounIds.length === 0) throw new Error("pronoun must have at least one token");
  const n = inputIds.length;
  const raw = new Array(n).fill(0);
  const logits: number[] = [];
  for (let step = 0; step < pronounIds.length; step++) {
    const ids = [...inputIds, ...pronounIds.slice(0, step)];
    const trace = model.forward(ids);
    const result = attributeLogit(trace, model.weights.unembedding[pronounIds[step]], n);
    for (let i = 0; i < n; i++) raw[i] += result.raw[i];
    logits.push(result.logit);
  }
  return { scores: raw.map((x) => Math.max(0, x)), logits };
}
