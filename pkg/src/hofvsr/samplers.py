"""Search strategies: random search, TPE, and a random-forest SMAC variant.

Every sampler is a pure function of (space, state, params): the generator for
proposal k is derived from (rng_seed, proposal_count), never carried across
calls. That makes startup delegation bitwise-identical to random search,
makes logs replayable, and keeps resume trivial.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .space import Configuration, SearchSpace, decode, encode

RNG_DESCRIPTOR = "mt19937/blake2b(seed,proposal)"

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Observation:
    config: Configuration
    objective: float
    trial_index: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.objective):
            raise ValueError(f"objective must be finite, got {self.objective}")


@dataclass
class SamplerState:
    """Accumulated feedback owned by the orchestrator loop."""

    rng_seed: int
    observations: list[Observation] = field(default_factory=list)
    proposal_count: int = 0

    def record(self, config: Configuration, objective: float) -> None:
        self.observations.append(
            Observation(config, objective, trial_index=len(self.observations))
        )


@dataclass(frozen=True)
class TpeParams:
    gamma: float = 0.25
    n_startup: int = 8
    n_candidates: int = 24
    smoothing: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.n_startup < 1 or self.n_candidates < 1:
            raise ValueError("n_startup and n_candidates must be >= 1")
        if self.smoothing <= 0.0:
            raise ValueError("smoothing must be positive")


@dataclass(frozen=True)
class SmacParams:
    n_trees: int = 10
    n_startup: int = 8
    n_candidates: int = 100
    interleave_every: int = 2
    bootstrap_fraction: float = 1.0

    def __post_init__(self) -> None:
        if min(self.n_trees, self.n_startup, self.n_candidates) < 1:
            raise ValueError("counts must be >= 1")
        if self.interleave_every < 1:
            raise ValueError("interleave_every must be >= 1")


def derive_rng(seed: int, proposal_count: int) -> random.Random:
    """Deterministic per-proposal generator, platform-stable via blake2b."""
    digest = hashlib.blake2b(
        f"{seed}:{proposal_count}".encode("ascii"), digest_size=8
    ).digest()
    return random.Random(int.from_bytes(digest, "big"))


def _uniform_indices(space: SearchSpace, rng: random.Random) -> tuple[int, ...]:
    return tuple(rng.randrange(len(d.values)) for d in space.domains)


def random_next(space: SearchSpace, state: SamplerState) -> Configuration:
    """Uniform draw per domain; best-effort dedup with up to 10 retries."""
    rng = derive_rng(state.rng_seed, state.proposal_count)
    seen = {encode(space, obs.config) for obs in state.observations}
    indices = _uniform_indices(space, rng)
    retries = 0
    while indices in seen and retries < 10:
        indices = _uniform_indices(space, rng)
        retries += 1
    return decode(space, indices)


def quantile_split(
    observations: Sequence[Observation], gamma: float
) -> tuple[list[Observation], list[Observation]]:
    """Lowest ceil(gamma*n) observations (ties to lower trial_index) vs rest."""
    if not observations:
        raise ValueError("quantile_split needs at least one observation")
    ranked = sorted(observations, key=lambda o: (o.objective, o.trial_index))
    n_good = math.ceil(gamma * len(ranked))
    return list(ranked[:n_good]), list(ranked[n_good:])


def _smoothed_density(
    space: SearchSpace, members: Sequence[Observation], smoothing: float
) -> list[list[float]]:
    """Per-dimension categorical probs with additive smoothing over the domain."""
    counts = [[0] * len(d.values) for d in space.domains]
    for obs in members:
        for dim, idx in enumerate(encode(space, obs.config)):
            counts[dim][idx] += 1
    density = []
    for dim, d in enumerate(space.domains):
        total = len(members) + smoothing * len(d.values)
        density.append([(c + smoothing) / total for c in counts[dim]])
    return density


def _sample_categorical(probs: Sequence[float], rng: random.Random) -> int:
    u = rng.random()
    acc = 0.0
    for idx, p in enumerate(probs):
        acc += p
        if u < acc:
            return idx
    return len(probs) - 1


def _argmax_candidate(
    scored: list[tuple[tuple[int, ...], float]], seen: set[tuple[int, ...]]
) -> tuple[int, ...]:
    """Highest-scoring candidate, preferring unobserved ones (best-effort
    dedup); ties break to the lower encoded lexicographic order."""
    best_indices: tuple[int, ...] | None = None
    best_key: tuple[float, float] | None = None
    for indices, score in scored:
        key = (0.0 if indices in seen else 1.0, score)
        if (
            best_key is None
            or key > best_key
            or (key == best_key and indices < best_indices)
        ):
            best_key = key
            best_indices = indices
    assert best_indices is not None
    return best_indices


def tpe_next(
    space: SearchSpace, state: SamplerState, params: TpeParams = TpeParams()
) -> Configuration:
    """Propose the candidate maximizing the good/bad density ratio."""
    if len(state.observations) < params.n_startup:
        return random_next(space, state)
    rng = derive_rng(state.rng_seed, state.proposal_count)
    good, bad = quantile_split(state.observations, params.gamma)
    l_density = _smoothed_density(space, good, params.smoothing)
    g_density = _smoothed_density(space, bad, params.smoothing)

    scored = []
    for _ in range(params.n_candidates):
        indices = tuple(
            _sample_categorical(l_density[dim], rng)
            for dim in range(len(space.domains))
        )
        score = 1.0
        for dim, idx in enumerate(indices):
            score *= l_density[dim][idx] / g_density[dim][idx]
        scored.append((indices, score))
    seen = {encode(space, obs.config) for obs in state.observations}
    return decode(space, _argmax_candidate(scored, seen))


def ei(mean: float, std: float, incumbent: float) -> float:
    """Expected improvement of a normal predictive below the incumbent."""
    if std < 0.0:
        raise ValueError("std must be nonnegative")
    if std == 0.0:
        return max(incumbent - mean, 0.0)
    z = (incumbent - mean) / std
    cdf = 0.5 * (1.0 + math.erf(z / _SQRT2))
    pdf = _INV_SQRT_2PI * math.exp(-0.5 * z * z)
    return std * (z * cdf + pdf)


class _TreeNode:
    __slots__ = ("dim", "threshold", "left", "right", "value")

    def __init__(self) -> None:
        self.dim = -1
        self.threshold = 0.0
        self.left: _TreeNode | None = None
        self.right: _TreeNode | None = None
        self.value = 0.0


def _fit_tree(
    rows: list[tuple[tuple[int, ...], float]], rng: random.Random
) -> _TreeNode:
    """Regression tree: random dimension, random midpoint between adjacent
    observed indices, mean-predicting leaves."""
    node = _TreeNode()
    node.value = sum(y for _, y in rows) / len(rows)
    splittable = [
        dim
        for dim in range(len(rows[0][0]))
        if len({x[dim] for x, _ in rows}) > 1
    ]
    if not splittable:
        return node
    dim = splittable[rng.randrange(len(splittable))]
    levels = sorted({x[dim] for x, _ in rows})
    cut = rng.randrange(len(levels) - 1)
    node.dim = dim
    node.threshold = (levels[cut] + levels[cut + 1]) / 2.0
    left = [(x, y) for x, y in rows if x[dim] <= node.threshold]
    right = [(x, y) for x, y in rows if x[dim] > node.threshold]
    node.left = _fit_tree(left, rng)
    node.right = _fit_tree(right, rng)
    return node


def _predict_tree(node: _TreeNode, x: tuple[int, ...]) -> float:
    while node.left is not None:
        node = node.left if x[node.dim] <= node.threshold else node.right
    return node.value


def _forest_predict(
    trees: list[_TreeNode], x: tuple[int, ...]
) -> tuple[float, float]:
    preds = [_predict_tree(t, x) for t in trees]
    mean = sum(preds) / len(preds)
    var = sum((p - mean) ** 2 for p in preds) / len(preds)
    return mean, math.sqrt(var)


def smac_next(
    space: SearchSpace, state: SamplerState, params: SmacParams = SmacParams()
) -> Configuration:
    """Random-forest surrogate with EI acquisition, interleaved with random."""
    if (
        len(state.observations) < params.n_startup
        or state.proposal_count % params.interleave_every == 0
    ):
        return random_next(space, state)
    rng = derive_rng(state.rng_seed, state.proposal_count)

    rows = [
        (encode(space, obs.config), obs.objective) for obs in state.observations
    ]
    n_boot = max(1, round(params.bootstrap_fraction * len(rows)))
    trees = []
    for _ in range(params.n_trees):
        sample = [rows[rng.randrange(len(rows))] for _ in range(n_boot)]
        trees.append(_fit_tree(sample, rng))

    incumbent = min(state.observations, key=lambda o: (o.objective, o.trial_index))
    incumbent_enc = encode(space, incumbent.config)

    candidates = [
        _uniform_indices(space, rng) for _ in range(params.n_candidates)
    ]
    for dim, d in enumerate(space.domains):
        for step in (-1, 1):
            idx = incumbent_enc[dim] + step
            if 0 <= idx < len(d.values):
                neighbor = list(incumbent_enc)
                neighbor[dim] = idx
                candidates.append(tuple(neighbor))

    scored = []
    for indices in candidates:
        mean, std = _forest_predict(trees, indices)
        scored.append((indices, ei(mean, std, incumbent.objective)))
    seen = {row[0] for row in rows}
    return decode(space, _argmax_candidate(scored, seen))


@dataclass(frozen=True)
class SamplerSpec:
    """Named strategy plus its parameters, as configured by the run config."""

    name: str
    tpe: TpeParams = TpeParams()
    smac: SmacParams = SmacParams()

    def __post_init__(self) -> None:
        if self.name not in ("random", "tpe", "smac"):
            raise ValueError(f"unknown sampler {self.name!r}")


def propose(
    space: SearchSpace, state: SamplerState, spec: SamplerSpec
) -> Configuration:
    if spec.name == "random":
        return random_next(space, state)
    if spec.name == "tpe":
        return tpe_next(space, state, spec.tpe)
    return smac_next(space, state, spec.smac)
