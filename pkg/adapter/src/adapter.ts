/**
 * Evaluator wire protocol, server side: NDJSON request/response over a pair
 * of streams. One trial in flight at a time; every message is flushed as one
 * line so the orchestrator's blocking per-epoch reads never stall.
 *
 * Simulate mode answers start_trial from the shared synthetic objective.
 * Train mode is the extension point for a real trainer: supply a hook that
 * maps (config, epoch) to an evaluation loss.
 */

import * as readline from "node:readline";
import type { Readable, Writable } from "node:stream";

import {
  DEFAULT_DOMAINS,
  DEFAULT_NOISE_AMPLITUDE,
  Domain,
  encodeConfig,
  epochDuration,
  evaluateLoss,
} from "./synthetic.js";

export const PROTOCOL_VERSION = 1;

export type TrainHook = (
  config: Record<string, number>,
  epoch: number,
) => number;

export interface AdapterConfig {
  mode: "simulate" | "train";
  profileSeed: number;
  epochDurationS: number;
  durationJitter: number;
  noiseAmplitude: number;
  domains: Domain[];
  trainHook?: TrainHook;
}

export function defaultConfig(): AdapterConfig {
  return {
    mode: "simulate",
    profileSeed: 0,
    epochDurationS: 240.0,
    durationJitter: 0.0,
    noiseAmplitude: DEFAULT_NOISE_AMPLITUDE,
    domains: DEFAULT_DOMAINS,
  };
}

interface Message {
  type?: string;
  protocol?: number;
  trial_id?: number;
  config?: Record<string, number>;
  max_epochs?: number;
}

/** Serve the protocol until the input stream closes. Resolves to the exit code. */
export function serve(
  input: Readable,
  output: Writable,
  config: AdapterConfig,
): Promise<number> {
  const send = (doc: object) => {
    output.write(JSON.stringify(doc) + "\n");
  };
  const sendError = (trialId: number, message: string) => {
    send({ type: "error", trial_id: trialId, message });
  };

  return new Promise((resolve) => {
    const rl = readline.createInterface({ input, terminal: false });
    let exitCode = 0;

    rl.on("line", (line) => {
      if (line.trim() === "") {
        return;
      }
      let msg: Message;
      try {
        msg = JSON.parse(line);
      } catch {
        sendError(-1, "malformed JSON line");
        return;
      }
      if (msg.type === "hello") {
        if (msg.protocol !== PROTOCOL_VERSION) {
          sendError(-1, `unsupported protocol ${msg.protocol}`);
          exitCode = 1;
          rl.close();
          return;
        }
        send({ type: "hello", protocol: PROTOCOL_VERSION });
        return;
      }
      if (msg.type !== "start_trial") {
        sendError(-1, `unexpected message type ${msg.type}`);
        return;
      }
      const trialId = msg.trial_id;
      const trialConfig = msg.config;
      const maxEpochs = msg.max_epochs;
      if (
        typeof trialId !== "number" ||
        typeof maxEpochs !== "number" ||
        trialConfig === undefined
      ) {
        sendError(trialId ?? -1, "start_trial missing trial_id/config/max_epochs");
        return;
      }
      let indices: number[];
      try {
        indices = encodeConfig(config.domains, trialConfig);
      } catch (err) {
        sendError(trialId, (err as Error).message);
        return;
      }
      for (let epoch = 0; epoch < maxEpochs; epoch++) {
        const loss =
          config.mode === "train" && config.trainHook
            ? config.trainHook(trialConfig, epoch)
            : evaluateLoss(
                config.domains,
                indices,
                epoch,
                config.profileSeed,
                config.noiseAmplitude,
              );
        send({
          type: "epoch",
          trial_id: trialId,
          epoch,
          eval_loss: loss,
          duration_s: epochDuration(
            indices,
            epoch,
            config.profileSeed,
            config.epochDurationS,
            config.durationJitter,
          ),
        });
      }
      send({ type: "trial_done", trial_id: trialId });
    });

    rl.on("close", () => resolve(exitCode));
  });
}
