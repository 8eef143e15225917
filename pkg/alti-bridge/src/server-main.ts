#!/usr/bin/env node
/** Standalone toy server: node dist/server-main.js --model <weights.json> [--port N] */

import { loadWeights, ToyTransformer } from "./model.js";
import { createToyServer, listen } from "./server.js";

async function run() {
  const argv = process.argv.slice(2);
  const args: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) args[argv[i].replace(/^--/, "")] = argv[i + 1];
  if (!args.model) {
    console.error("usage: server-main --model <weights.json> [--port N]");
    process.exit(2);
  }
  const model = new ToyTransformer(loadWeights(args.model));
  const port = await listen(createToyServer(model), Number(args.port ?? 0));
  console.log(`toy completions server on http://127.0.0.1:${port}`);
}

run();
