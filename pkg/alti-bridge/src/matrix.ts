/**
 * Minimal dense linear algebra over number[][] (row-major).
 */

export type Vec = number[];
export type Mat = number[][];

export function zeros(rows: number, cols: number): Mat {
  return Array.from({ length: rows }, () => new Array(cols).fill(0));
}

export function identity(n: number): Mat {
  const out = zeros(n, n);
  for (let i = 0; i < n; i++) out[i][i] = 1;
  return out;
}

export function matVec(m: Mat, v: Vec): Vec {
  const out = new Array(m.length).fill(0);
  for (let i = 0; i < m.length; i++) {
    let acc = 0;
    const row = m[i];
    for (let j = 0; j < row.length; j++) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

/** Row vector times matrix: (1 x n) * (n x m) -> (1 x m). */
export function vecMat(v: Vec, m: Mat): Vec {
  const cols = m[0].length;
  const out = new Array(cols).fill(0);
  for (let i = 0; i < v.length; i++) {
    const vi = v[i];
    if (vi === 0) continue;
    const row = m[i];
    for (let j = 0; j < cols; j++) out[j] += vi * row[j];
  }
  return out;
}

export function matMul(a: Mat, b: Mat): Mat {
  const out = zeros(a.length, b[0].length);
  for (let i = 0; i < a.length; i++) {
    for (let k = 0; k < b.length; k++) {
      const aik = a[i][k];
      if (aik === 0) continue;
      const rowB = b[k];
      for (let j = 0; j < rowB.length; j++) out[i][j] += aik * rowB[j];
    }
  }
  return out;
}

export function dot(a: Vec, b: Vec): number {
  let acc = 0;
  for (let i = 0; i < a.length; i++) acc += a[i] * b[i];
  return acc;
}

export function add(a: Vec, b: Vec): Vec {
  return a.map((x, i) => x + b[i]);
}

export function sub(a: Vec, b: Vec): Vec {
  return a.map((x, i) => x - b[i]);
}

export function scale(v: Vec, c: number): Vec {
  return v.map((x) => x * c);
}

export function l1Norm(v: Vec): number {
  let acc = 0;
  for (const x of v) acc += Math.abs(x);
  return acc;
}

export function softmax(v: Vec): Vec {
  const max = Math.max(...v);
  const exps = v.map((x) => Math.exp(x - max));
  const total = exps.reduce((a, b) => a + b, 0);
  return exps.map((x) => x / total);
}

export function logSoftmax(v: Vec): Vec {
  const max = Math.max(...v);
  const logSum = Math.log(v.reduce((acc, x) => acc + Math.exp(x - max), 0)) + max;
  return v.map((x) => x - logSum);
}
