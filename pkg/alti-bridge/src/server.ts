/**
 * Completions-style HTTP server over a toy transformer, so external harnesses
 * can score and tokenize against the exact model the bridge attributes.
 *
 * Endpoints: POST /v1/completions (echo+logprobs scoring, greedy generation),
 * POST /tokenize, POST /detokenize, GET/POST /vocab_info.
 */

import http from "node:http";
import { ToyTransformer } from "./model.js";

function readBody(req: http.IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    req.on("error", reject);
  });
}

export function createToyServer(model: ToyTransformer): http.Server {
  return http.createServer(async (req, res) => {
    const reply = (code: number, payload: unknown) => {
      const body = JSON.stringify(payload);
      res.writeHead(code, { "Content-Type": "application/json" });
      res.end(body);
    };
    try {
      const url = req.url ?? "";
      if (url === "/vocab_info") {
        reply(200, { vocab_size: model.tokenizer.vocabSize, special_ids: [] });
        return;
      }
      const payload = JSON.parse((await readBody(req)) || "{}");
      if (url === "/tokenize") {
        const { ids, offsets } = model.tokenizer.encodeWithOffsets(payload.text ?? "");
        reply(200, { ids, offsets: offsets.map((o) => [o.start, o.end]) });
      } else if (url === "/detokenize") {
        reply(200, { text: model.tokenizer.decode(payload.ids ?? []) });
      } else if (url === "/v1/completions") {
        const prompt: string = payload.prompt ?? "";
        const { ids, offsets } = model.tokenizer.encodeWithOffsets(prompt);
        if (payload.echo && (payload.max_tokens ?? 0) === 0) {
          const logprobs = model.scoreTokens(ids);
          reply(200, {
            choices: [
              {
                text: prompt,
                finish_reason: "stop",
                logprobs: {
                  tokens: offsets.map((o) => prompt.slice(o.start, o.end)),
                  token_ids: ids,
                  token_logprobs: logprobs,
                  text_offset: offsets.map((o) => o.start),
                },
              },
            ],
            usage: { total_tokens: ids.length },
          });
        } else {
          const generated = model.generate(ids, payload.max_tokens ?? 16);
          reply(200, {
            choices: [{ text: " " + model.tokenizer.decode(generated), finish_reason: "length" }],
            usage: { total_tokens: ids.length + generated.length },
          });
        }
      } else {
        reply(404, { error: `unknown path ${url}` });
      }
    } catch (err) {
      reply(400, { error: String(err) });
    }
  });
}

export function listen(server: http.Server, port = 0): Promise<number> {
  return new Promise((resolve) => {
    server.listen(port, "127.0.0.1", () => {
      const address = server.address();
      resolve(typeof address === "object" && address ? address.port : port);
    });
  });
}
