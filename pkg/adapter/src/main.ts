/**
 * CLI entry: `node dist/main.js [--profile-seed N] [--epoch-duration S]
 * [--jitter J] [--noise-amplitude A] [--space file.json]`
 *
 * Invoked by the orchestrator as `--evaluator "exec:node dist/main.js ..."`.
 */

import * as fs from "node:fs";

import { defaultConfig, serve } from "./adapter.js";
import type { Domain } from "./synthetic.js";

function parseArgs(argv: string[]) {
  const config = defaultConfig();
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = () => {
      const v = argv[++i];
      if (v === undefined) {
        throw new Error(`missing value for ${flag}`);
      }
      return v;
    };
    switch (flag) {
      case "--profile-seed":
        config.profileSeed = Number(value());
        break;
      case "--epoch-duration":
        config.epochDurationS = Number(value());
        break;
      case "--jitter":
        config.durationJitter = Number(value());
        break;
      case "--noise-amplitude":
        config.noiseAmplitude = Number(value());
        break;
      case "--space": {
        const doc = JSON.parse(fs.readFileSync(value(), "utf-8"));
        config.domains = doc.domains as Domain[];
        break;
      }
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  return config;
}

async function main(): Promise<number> {
  let config;
  try {
    config = parseArgs(process.argv.slice(2));
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    return 2;
  }
  return serve(process.stdin, process.stdout, config);
}

// set exitCode rather than calling process.exit so queued stdout lines drain
main().then((code) => {
  process.exitCode = code;
});
