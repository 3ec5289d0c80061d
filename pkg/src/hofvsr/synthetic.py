"""Deterministic synthetic trial evaluator.

Stands in for GPU training: a separable quadratic over the encoded search
space, scaled by an exponential per-epoch decay that plateaus at 30% of the
configuration's base error, plus small seeded noise. Every value is a pure
function of (profile_seed, config, epoch), derived through a splitmix64-style
hash over 64-bit integers, so an external process in any language can
reproduce the exact loss series (integer hashing is bit-exact; the float
arithmetic below is plain IEEE-754 double ops in a fixed order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .space import Configuration, SearchSpace, encode

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# hash stream tags; the TypeScript adapter mirrors these constants
_TAG_WEIGHT = 1
_TAG_OPTIMUM = 2
_TAG_NOISE = 3
_TAG_DURATION = 4

DECAY_FLOOR = 0.3
DECAY_SCALE = 0.7
DECAY_RATE = 5.0
DEFAULT_NOISE_AMPLITUDE = 0.01


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def hash_u64(parts: Sequence[int]) -> int:
    """Chain-hash non-negative 64-bit integers into one 64-bit value."""
    h = 0
    for p in parts:
        h = _mix64((h + _GOLDEN + (p & _MASK64)) & _MASK64)
    return h


def unit_float(parts: Sequence[int]) -> float:
    """Uniform in [0, 1) from the top 53 bits of the chain hash."""
    return (hash_u64(parts) >> 11) * (2.0 ** -53)


@dataclass(frozen=True)
class ObjectiveProfile:
    """Per-dimension weights and optima drawn once from a profile seed."""

    seed: int
    weights: tuple[float, ...]
    optima: tuple[float, ...]

    @classmethod
    def from_seed(cls, seed: int, n_dims: int) -> "ObjectiveProfile":
        weights = tuple(
            0.5 + unit_float((seed, _TAG_WEIGHT, d)) for d in range(n_dims)
        )
        optima = tuple(
            0.05 + 0.9 * unit_float((seed, _TAG_OPTIMUM, d)) for d in range(n_dims)
        )
        return cls(seed, weights, optima)


def base_error(space: SearchSpace, config: Configuration, profile: ObjectiveProfile) -> float:
    """Separable quadratic distance of the encoded config from the profile optimum."""
    indices = encode(space, config)
    total = 0.0
    for d, idx in enumerate(indices):
        n = len(space.domains[d].values)
        pos = idx / (n - 1) if n > 1 else 0.0
        diff = pos - profile.optima[d]
        total += profile.weights[d] * diff * diff
    return total


def decay(epoch: int) -> float:
    return DECAY_FLOOR + DECAY_SCALE * math.exp(-epoch / DECAY_RATE)


def synthetic_evaluate(
    space: SearchSpace,
    config: Configuration,
    epoch: int,
    profile_seed: int,
    noise_amplitude: float = DEFAULT_NOISE_AMPLITUDE,
) -> float:
    """Evaluation loss for one (config, epoch): base * decay + seeded noise.

    Noise is uniform on +/- noise_amplitude * base, so the loss stays positive
    for any base > 0 and collapses to 0 exactly at the profile optimum.
    """
    profile = ObjectiveProfile.from_seed(profile_seed, len(space.domains))
    base = base_error(space, config, profile)
    indices = encode(space, config)
    u = unit_float((profile_seed, _TAG_NOISE, *indices, epoch))
    noise = base * noise_amplitude * (2.0 * u - 1.0)
    return base * decay(epoch) + noise


def epoch_duration(
    space: SearchSpace,
    config: Configuration,
    epoch: int,
    profile_seed: int,
    base_seconds: float,
    jitter: float,
) -> float:
    """Simulated wall seconds for one epoch, jittered uniformly by +/- jitter."""
    if jitter == 0.0:
        return base_seconds
    indices = encode(space, config)
    u = unit_float((profile_seed, _TAG_DURATION, *indices, epoch))
    return base_seconds * (1.0 + jitter * (2.0 * u - 1.0))


def true_optimum(
    space: SearchSpace, profile_seed: int
) -> tuple[Configuration, float]:
    """Exhaustive argmin of the base error and its plateau loss (0.3 * base)."""
    from .space import enumerate_space

    profile = ObjectiveProfile.from_seed(profile_seed, len(space.domains))
    best_config: Configuration | None = None
    best_base = math.inf
    for cand in enumerate_space(space):
        b = base_error(space, cand, profile)
        if b < best_base:
            best_base = b
            best_config = cand
    assert best_config is not None
    return best_config, DECAY_FLOOR * best_base


class SyntheticEvaluator:
    """In-process evaluator speaking the orchestrator's trial interface."""

    def __init__(
        self,
        space: SearchSpace,
        profile_seed: int = 0,
        epoch_duration_s: float = 240.0,
        duration_jitter: float = 0.0,
        noise_amplitude: float = DEFAULT_NOISE_AMPLITUDE,
    ) -> None:
        self.space = space
        self.profile_seed = profile_seed
        self.epoch_duration_s = epoch_duration_s
        self.duration_jitter = duration_jitter
        self.noise_amplitude = noise_amplitude

    def handshake(self) -> None:
        return None

    def run_trial(
        self, trial_id: int, config: Configuration, max_epochs: int
    ) -> Iterator[tuple[int, float, float]]:
        for epoch in range(max_epochs):
            loss = synthetic_evaluate(
                self.space, config, epoch, self.profile_seed, self.noise_amplitude
            )
            duration = epoch_duration(
                self.space,
                config,
                epoch,
                self.profile_seed,
                self.epoch_duration_s,
                self.duration_jitter,
            )
            yield epoch, loss, duration

    def close(self) -> None:
        return None
