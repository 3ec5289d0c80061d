"""Budgeted sequential search loop with per-epoch evaluation feedback.

One trial at a time: the sampler proposes a configuration, the evaluator
streams per-epoch evaluation losses (each persisted before the next epoch
starts), the trial's objective feeds back into the sampler state, and the
best configuration wins. New trials start only while both the trial-count
and wall-clock budgets hold; the clock is either real (monotonic) or
simulated from evaluator-reported durations so budget accounting is testable
in seconds.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

from .samplers import RNG_DESCRIPTOR, SamplerSpec, SamplerState, propose
from .space import Configuration, SearchSpace, space_hash
from .protocol import TrialError
from .trial_log import (
    STATUS_COMPLETED,
    STATUS_FAILED,
    EpochReport,
    LogError,
    TrialLog,
    TrialLogWriter,
    TrialRecord,
    read_log,
)


@dataclass(frozen=True)
class BudgetSpec:
    max_trials: int = 40
    epochs_per_trial: int = 20
    wall_clock_s: int = 32 * 3600
    clock_mode: str = "simulated"

    def __post_init__(self) -> None:
        if min(self.max_trials, self.epochs_per_trial, self.wall_clock_s) <= 0:
            raise ValueError("budget fields must be positive")
        if self.clock_mode not in ("real", "simulated"):
            raise ValueError(f"unknown clock_mode {self.clock_mode!r}")


@dataclass
class SearchResult:
    trials: list[TrialRecord] = field(default_factory=list)
    best: Configuration | None = None
    best_objective: float | None = None
    best_trial_id: int | None = None
    elapsed_s: float = 0.0


def _aggregate(losses: list[float], aggregator: str) -> float:
    if aggregator == "last":
        return losses[-1]
    return min(losses)


def _pick_best(trials: list[TrialRecord]) -> TrialRecord | None:
    completed = [t for t in trials if t.status == STATUS_COMPLETED]
    if not completed:
        return None
    return min(completed, key=lambda t: (t.objective, t.trial_id))


class _Clock:
    def __init__(self, mode: str, start_elapsed: float = 0.0) -> None:
        self.mode = mode
        self.simulated = start_elapsed
        self._t0 = time.monotonic() - (start_elapsed if mode == "real" else 0.0)

    def advance(self, duration_s: float) -> None:
        self.simulated += duration_s

    @property
    def elapsed(self) -> float:
        if self.mode == "simulated":
            return self.simulated
        return time.monotonic() - self._t0


def _run_loop(
    space: SearchSpace,
    sampler_spec: SamplerSpec,
    evaluator,
    budget: BudgetSpec,
    sink,
    state: SamplerState,
    trials: list[TrialRecord],
    clock: _Clock,
    aggregator: str,
) -> SearchResult:
    while len(trials) < budget.max_trials and clock.elapsed < budget.wall_clock_s:
        trial_id = len(trials)
        config = propose(space, state, sampler_spec)
        state.proposal_count += 1

        record = TrialRecord(trial_id, config)
        try:
            for epoch, eval_loss, duration_s in evaluator.run_trial(
                trial_id, config, budget.epochs_per_trial
            ):
                report = EpochReport(trial_id, epoch, eval_loss, duration_s)
                sink.epoch(report, config)
                record.epoch_reports.append(report)
                clock.advance(duration_s)
        except TrialError:
            record.status = STATUS_FAILED
            record.objective = None
            sink.trial_done(trial_id, STATUS_FAILED, None)
            trials.append(record)
            continue

        if not record.epoch_reports:
            # no epochs means no objective; treat like a failed trial
            record.status = STATUS_FAILED
            sink.trial_done(trial_id, STATUS_FAILED, None)
            trials.append(record)
            continue

        record.status = STATUS_COMPLETED
        record.objective = _aggregate(
            [r.eval_loss for r in record.epoch_reports], aggregator
        )
        sink.trial_done(trial_id, STATUS_COMPLETED, record.objective)
        trials.append(record)
        state.record(config, record.objective)

    best = _pick_best(trials)
    elapsed = clock.elapsed
    sink.result(best.trial_id if best else None, elapsed)
    return SearchResult(
        trials=trials,
        best=best.config if best else None,
        best_objective=best.objective if best else None,
        best_trial_id=best.trial_id if best else None,
        elapsed_s=elapsed,
    )


def run_search(
    space: SearchSpace,
    sampler_spec: SamplerSpec,
    evaluator,
    budget: BudgetSpec,
    seed: int,
    sink,
    aggregator: str = "min",
) -> SearchResult:
    """Run a fresh search: handshake, header, then the trial loop."""
    evaluator.handshake()
    sink.header(
        space_hash=space_hash(space),
        sampler=sampler_spec.name,
        seed=seed,
        max_trials=budget.max_trials,
        epochs_per_trial=budget.epochs_per_trial,
        wall_clock_s=budget.wall_clock_s,
        rng=RNG_DESCRIPTOR,
    )
    state = SamplerState(rng_seed=seed)
    clock = _Clock(budget.clock_mode)
    return _run_loop(
        space, sampler_spec, evaluator, budget, sink, state, [], clock, aggregator
    )


def _check_header(log: TrialLog, space, sampler_spec, budget, seed) -> None:
    head = log.header
    mismatches = []
    if head.get("sampler") != sampler_spec.name:
        mismatches.append(f"sampler {head.get('sampler')!r} != {sampler_spec.name!r}")
    if head.get("seed") != seed:
        mismatches.append(f"seed {head.get('seed')!r} != {seed!r}")
    if head.get("space_hash") != space_hash(space):
        mismatches.append("space_hash differs")
    logged = head.get("budget", {})
    wanted = {
        "max_trials": budget.max_trials,
        "epochs_per_trial": budget.epochs_per_trial,
        "wall_clock_s": budget.wall_clock_s,
    }
    if logged != wanted:
        mismatches.append(f"budget {logged} != {wanted}")
    if mismatches:
        raise LogError("resume refused: " + "; ".join(mismatches))


def _result_from_log(log: TrialLog) -> SearchResult:
    best = _pick_best(log.trials)
    return SearchResult(
        trials=log.trials,
        best=best.config if best else None,
        best_objective=best.objective if best else None,
        best_trial_id=best.trial_id if best else None,
        elapsed_s=float(log.result["elapsed_s"]) if log.result else 0.0,
    )


def resume_search(
    log_path: str | Path,
    space: SearchSpace,
    sampler_spec: SamplerSpec,
    evaluator,
    budget: BudgetSpec,
    seed: int,
    aggregator: str = "min",
) -> SearchResult:
    """Continue a truncated run under the remaining budget.

    Completed and failed trials are kept; a trailing partial trial is
    discarded and re-proposed (the per-proposal RNG derivation makes the
    re-proposal identical to the original). The log file is rewritten to the
    retained prefix and then appended to, so a resumed log is byte-identical
    to an uninterrupted run's log.
    """
    log_path = Path(log_path)
    log = read_log(log_path, tolerate_torn_tail=True)
    _check_header(log, space, sampler_spec, budget, seed)

    if log.complete:
        return _result_from_log(log)

    raw_lines = [
        ln for ln in log_path.read_text(encoding="utf-8").splitlines() if ln.strip()
    ]
    retained = 1 + sum(len(t.epoch_reports) + 1 for t in log.trials)
    tmp_path = log_path.with_suffix(log_path.suffix + ".resume")
    tmp_path.write_text(
        "".join(line + "\n" for line in raw_lines[:retained]), encoding="utf-8"
    )
    tmp_path.replace(log_path)

    state = SamplerState(rng_seed=seed)
    for trial in log.trials:
        if trial.status == STATUS_COMPLETED:
            state.record(trial.config, trial.objective)
    state.proposal_count = len(log.trials)

    elapsed = sum(
        report.duration_s for trial in log.trials for report in trial.epoch_reports
    )
    clock = _Clock(budget.clock_mode, start_elapsed=elapsed)

    evaluator.handshake()
    with TrialLogWriter(log_path, append=True) as sink:
        return _run_loop(
            space,
            sampler_spec,
            evaluator,
            budget,
            sink,
            state,
            list(log.trials),
            clock,
            aggregator,
        )
