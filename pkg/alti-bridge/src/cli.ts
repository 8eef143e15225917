#!/usr/bin/env node
/**
 * alti-bridge --model <weights.json> --instances <path> --out <path> [--device cpu]
 *
 * Reads prepared forced-decode instances, computes ALTI-Logit attributions
 * against the toy model, and writes ap-v1 JSONL.
 */

import { computeAlti, writeRecords } from "./bridge.js";
import { loadWeights } from "./model.js";

function parseArgs(argv: string[]): Record<string, string> {
  const args: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || argv[i + 1] === undefined) {
      throw new Error(`malformed arguments near ${key}`);
    }
    args[key.slice(2)] = argv[i + 1];
  }
  return args;
}

export function main(argv: string[]): number {
  let args: Record<string, string>;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err));
    return 2;
  }
  for (const required of ["model", "instances", "out"]) {
    if (!(required in args)) {
      console.error(`missing --${required}`);
      console.error("usage: alti-bridge --model <weights.json> --instances <path> --out <path> [--device cpu]");
      return 2;
    }
  }
  const device = args.device ?? "cpu";
  if (device !== "cpu") {
    console.error(`unsupported device ${device}; the toy bridge runs on cpu`);
    return 2;
  }
  try {
    const weights = loadWeights(args.model);
    const result = computeAlti(weights, args.instances);
    writeRecords(result.records, args.out);
    console.log(`wrote ${result.records.length} records to ${args.out}`);
    for (const rej of result.rejected) {
      console.error(`rejected ${rej.exampleId}: ${rej.reason}`);
    }
    return 0;
  } catch (err) {
    console.error(String(err));
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
