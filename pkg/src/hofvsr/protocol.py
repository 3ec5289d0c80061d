"""NDJSON wire protocol to an external evaluator process.

The orchestrator opens the evaluator as a child process, exchanges a hello,
then drives one trial at a time: start_trial out, a stream of epoch messages
and one trial_done back. An error message fails the current trial but keeps
the session alive; EOF, timeouts, and unknown message types abort the run.
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import subprocess
import threading
from typing import Iterator

from .space import Configuration

WIRE_PROTOCOL_VERSION = 1


class ProtocolError(RuntimeError):
    """Handshake failure, stream loss, timeout, or malformed traffic."""


class TrialError(RuntimeError):
    """The evaluator reported an error for the current trial."""


class ExternalEvaluator:
    """Client side of the evaluator protocol over a child's stdin/stdout."""

    def __init__(self, command: str, epoch_timeout_s: float = 60.0) -> None:
        self.command = command
        self.epoch_timeout_s = epoch_timeout_s
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ProtocolError(f"cannot launch evaluator {command!r}: {exc}") from None
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _send(self, message: dict) -> None:
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(message, separators=(",", ":")) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"evaluator pipe closed: {exc}") from None

    def _recv(self) -> dict:
        try:
            line = self._lines.get(timeout=self.epoch_timeout_s)
        except queue.Empty:
            raise ProtocolError(
                f"evaluator silent for {self.epoch_timeout_s}s"
            ) from None
        if line is None:
            raise ProtocolError("evaluator closed its output stream")
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"evaluator sent invalid JSON: {exc.msg}") from None
        if not isinstance(doc, dict) or "type" not in doc:
            raise ProtocolError("evaluator message lacks a 'type' field")
        return doc

    def handshake(self) -> None:
        self._send({"type": "hello", "protocol": WIRE_PROTOCOL_VERSION})
        reply = self._recv()
        if reply.get("type") != "hello" or reply.get("protocol") != WIRE_PROTOCOL_VERSION:
            raise ProtocolError(f"bad hello reply: {reply}")

    def run_trial(
        self, trial_id: int, config: Configuration, max_epochs: int
    ) -> Iterator[tuple[int, float, float]]:
        self._send(
            {
                "type": "start_trial",
                "trial_id": trial_id,
                "config": config.as_dict(),
                "max_epochs": max_epochs,
            }
        )
        epochs_seen = 0
        while True:
            doc = self._recv()
            kind = doc.get("type")
            if kind == "epoch":
                if doc.get("trial_id") != trial_id:
                    raise ProtocolError(
                        f"epoch for trial {doc.get('trial_id')}, expected {trial_id}"
                    )
                if epochs_seen >= max_epochs:
                    raise ProtocolError(
                        f"evaluator exceeded max_epochs={max_epochs} for trial {trial_id}"
                    )
                try:
                    epoch = int(doc["epoch"])
                    eval_loss = float(doc["eval_loss"])
                    duration_s = float(doc["duration_s"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise ProtocolError(f"malformed epoch message: {exc}") from None
                if not math.isfinite(eval_loss):
                    # keep the session usable: swallow the rest of the trial,
                    # then fail just this trial
                    self._drain_trial(trial_id, max_epochs - epochs_seen)
                    raise TrialError(
                        f"non-finite eval_loss {eval_loss!r} at epoch {epoch}"
                    )
                epochs_seen += 1
                yield epoch, eval_loss, duration_s
            elif kind == "trial_done":
                if doc.get("trial_id") != trial_id:
                    raise ProtocolError(
                        f"trial_done for trial {doc.get('trial_id')}, expected {trial_id}"
                    )
                return
            elif kind == "error":
                raise TrialError(str(doc.get("message", "evaluator error")))
            else:
                raise ProtocolError(f"unknown message type {kind!r}")

    def _drain_trial(self, trial_id: int, remaining_epochs: int) -> None:
        """Consume the rest of a trial's messages up to its trial_done."""
        for _ in range(remaining_epochs + 2):
            doc = self._recv()
            kind = doc.get("type")
            if kind == "trial_done" and doc.get("trial_id") == trial_id:
                return
            if kind == "error":
                return
            if kind != "epoch" or doc.get("trial_id") != trial_id:
                raise ProtocolError(f"unexpected message while draining: {doc}")
        raise ProtocolError(f"trial {trial_id} never finished while draining")

    def close(self) -> None:
        if self._proc.stdin is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()
