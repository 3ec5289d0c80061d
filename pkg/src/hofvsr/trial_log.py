"""JSON-lines trial log: schema, append-only writer, and tolerant reader.

Line 1 is a header; every epoch is one line (persisted before the next epoch
starts, so convergence curves survive crashes); each trial closes with a
trial_done line; a finished run ends with a result line. All lines are
deterministic functions of the run inputs except the header's created_at.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO

from .space import Configuration

PROTOCOL_VERSION = 1

STATUS_COMPLETED = "completed"
STATUS_FAILED = "failed"
STATUS_CUT = "cut_by_budget"
STATUSES = (STATUS_COMPLETED, STATUS_FAILED, STATUS_CUT)


class LogError(ValueError):
    """Malformed trial log; message carries the offending line number."""


@dataclass(frozen=True)
class EpochReport:
    trial_id: int
    epoch: int
    eval_loss: float
    duration_s: float


@dataclass
class TrialRecord:
    trial_id: int
    config: Configuration
    epoch_reports: list[EpochReport] = field(default_factory=list)
    status: str = STATUS_COMPLETED
    objective: float | None = None


def _dump(doc: dict) -> str:
    return json.dumps(doc, separators=(",", ":"))


def header_line(
    space_hash: str,
    sampler: str,
    seed: int,
    max_trials: int,
    epochs_per_trial: int,
    wall_clock_s: int,
    rng: str,
    created_at: str | None = None,
) -> str:
    if created_at is None:
        created_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return _dump(
        {
            "type": "header",
            "protocol": PROTOCOL_VERSION,
            "space_hash": space_hash,
            "sampler": sampler,
            "seed": seed,
            "budget": {
                "max_trials": max_trials,
                "epochs_per_trial": epochs_per_trial,
                "wall_clock_s": wall_clock_s,
            },
            "rng": rng,
            "created_at": created_at,
        }
    )


def epoch_line(report: EpochReport, config: Configuration) -> str:
    return _dump(
        {
            "type": "epoch",
            "trial_id": report.trial_id,
            "epoch": report.epoch,
            "config": config.as_dict(),
            "eval_loss": report.eval_loss,
            "duration_s": report.duration_s,
        }
    )


def trial_done_line(trial_id: int, status: str, objective: float | None) -> str:
    return _dump(
        {
            "type": "trial_done",
            "trial_id": trial_id,
            "status": status,
            "objective": objective,
        }
    )


def result_line(best_trial: int | None, elapsed_s: float) -> str:
    return _dump({"type": "result", "best_trial": best_trial, "elapsed_s": elapsed_s})


class TrialLogWriter:
    """Append-only JSONL sink, flushed per line."""

    def __init__(self, path: str | Path, force: bool = False, append: bool = False):
        self.path = Path(path)
        if self.path.exists() and not (force or append):
            raise FileExistsError(
                f"{self.path} exists; pass force to overwrite or resume instead"
            )
        self._fh: IO[str] = open(self.path, "a" if append else "w", encoding="utf-8")

    def _write(self, line: str) -> None:
        self._fh.write(line + "\n")
        self._fh.flush()

    def header(self, **kwargs) -> None:
        self._write(header_line(**kwargs))

    def epoch(self, report: EpochReport, config: Configuration) -> None:
        self._write(epoch_line(report, config))

    def trial_done(self, trial_id: int, status: str, objective: float | None) -> None:
        self._write(trial_done_line(trial_id, status, objective))

    def result(self, best_trial: int | None, elapsed_s: float) -> None:
        self._write(result_line(best_trial, elapsed_s))

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TrialLogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class ListSink:
    """In-memory sink with the same surface as TrialLogWriter, for tests."""

    def __init__(self) -> None:
        self.lines: list[str] = []

    def header(self, **kwargs) -> None:
        self.lines.append(header_line(**kwargs))

    def epoch(self, report: EpochReport, config: Configuration) -> None:
        self.lines.append(epoch_line(report, config))

    def trial_done(self, trial_id: int, status: str, objective: float | None) -> None:
        self.lines.append(trial_done_line(trial_id, status, objective))

    def result(self, best_trial: int | None, elapsed_s: float) -> None:
        self.lines.append(result_line(best_trial, elapsed_s))

    def close(self) -> None:
        return None


@dataclass
class TrialLog:
    """Parsed log: completed/failed trials, plus any truncated trailing trial."""

    header: dict
    trials: list[TrialRecord]
    partial: TrialRecord | None
    result: dict | None

    @property
    def complete(self) -> bool:
        return self.result is not None


def _parse_line(raw: str, lineno: int) -> dict:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LogError(f"line {lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or "type" not in doc:
        raise LogError(f"line {lineno}: expected an object with a 'type' field")
    return doc


def read_log(path: str | Path, tolerate_torn_tail: bool = False) -> TrialLog:
    """Parse a trial log. Raises LogError (with line number) on corruption.

    With tolerate_torn_tail, an unparseable final line is dropped — it belongs
    to the partial trial a resume discards anyway.
    """
    raw_lines = Path(path).read_text(encoding="utf-8").splitlines()
    raw_lines = [ln for ln in raw_lines if ln.strip()]
    if not raw_lines:
        raise LogError("line 1: empty log")

    docs: list[tuple[int, dict]] = []
    for i, raw in enumerate(raw_lines, start=1):
        try:
            docs.append((i, _parse_line(raw, i)))
        except LogError:
            if tolerate_torn_tail and i == len(raw_lines):
                break
            raise

    lineno, head = docs[0]
    if head["type"] != "header":
        raise LogError(f"line {lineno}: first line must be the header")
    if head.get("protocol") != PROTOCOL_VERSION:
        raise LogError(f"line {lineno}: unsupported protocol {head.get('protocol')!r}")

    trials: list[TrialRecord] = []
    open_trial: TrialRecord | None = None
    result: dict | None = None

    for lineno, doc in docs[1:]:
        kind = doc["type"]
        if result is not None:
            raise LogError(f"line {lineno}: content after the result line")
        if kind == "epoch":
            try:
                report = EpochReport(
                    trial_id=doc["trial_id"],
                    epoch=doc["epoch"],
                    eval_loss=doc["eval_loss"],
                    duration_s=doc["duration_s"],
                )
                config = Configuration.from_mapping(doc["config"])
            except (KeyError, TypeError) as exc:
                raise LogError(f"line {lineno}: bad epoch line: {exc}") from None
            if open_trial is None:
                open_trial = TrialRecord(report.trial_id, config)
            elif open_trial.trial_id != report.trial_id:
                raise LogError(
                    f"line {lineno}: epoch for trial {report.trial_id} inside trial "
                    f"{open_trial.trial_id}"
                )
            open_trial.epoch_reports.append(report)
        elif kind == "trial_done":
            status = doc.get("status")
            if status not in STATUSES:
                raise LogError(f"line {lineno}: unknown status {status!r}")
            if open_trial is not None and open_trial.trial_id != doc.get("trial_id"):
                raise LogError(
                    f"line {lineno}: trial_done for trial {doc.get('trial_id')} "
                    f"inside trial {open_trial.trial_id}"
                )
            if open_trial is None:
                if status != STATUS_FAILED:
                    raise LogError(
                        f"line {lineno}: trial_done without matching epochs"
                    )
                # a trial can fail before its first epoch; synthesize the record
                open_trial = TrialRecord(
                    doc["trial_id"], Configuration(()), status=status
                )
            open_trial.status = status
            open_trial.objective = doc.get("objective")
            trials.append(open_trial)
            open_trial = None
        elif kind == "result":
            result = doc
        else:
            raise LogError(f"line {lineno}: unknown record type {kind!r}")

    return TrialLog(header=head, trials=trials, partial=open_trial, result=result)


def completed_trials(log: TrialLog) -> list[TrialRecord]:
    return [t for t in log.trials if t.status == STATUS_COMPLETED]
