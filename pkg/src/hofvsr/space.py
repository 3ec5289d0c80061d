"""Discrete hyper-parameter search spaces.

A space is an ordered product of named integer domains. Configurations are
points in that product; samplers and the cost model work on the stable
per-domain ordinal encoding rather than raw values, so surrogate models stay
scale-free across dimensions.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterator, Mapping, Sequence


class SpaceError(ValueError):
    """Invalid space definition, configuration, or space file."""


@dataclass(frozen=True)
class ParamDomain:
    """One named dimension: a strictly increasing list of candidate values."""

    name: str
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise SpaceError("domain name must be nonempty")
        if not self.values:
            raise SpaceError(f"domain {self.name!r}: value list must be nonempty")
        for a, b in zip(self.values, self.values[1:]):
            if b <= a:
                raise SpaceError(
                    f"domain {self.name!r}: values must be strictly increasing, "
                    f"got {a} before {b}"
                )

    def index_of(self, value: int) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise SpaceError(
                f"value {value} not in domain {self.name!r}"
            ) from None


@dataclass(frozen=True)
class SearchSpace:
    """Ordered collection of domains; immutable and safe to share."""

    domains: tuple[ParamDomain, ...]

    def __post_init__(self) -> None:
        if not self.domains:
            raise SpaceError("space must have at least one domain")
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SpaceError(f"duplicate domain name(s): {', '.join(dupes)}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.domains)

    def domain(self, name: str) -> ParamDomain:
        for d in self.domains:
            if d.name == name:
                return d
        raise SpaceError(f"no domain named {name!r}")

    def to_dict(self) -> dict:
        return {
            "domains": [
                {"name": d.name, "values": list(d.values)} for d in self.domains
            ]
        }


@dataclass(frozen=True)
class Configuration:
    """One assignment per domain. Values are validated against the space."""

    assignments: tuple[tuple[str, int], ...]

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, int]) -> "Configuration":
        return cls(tuple(mapping.items()))

    def as_dict(self) -> dict[str, int]:
        return dict(self.assignments)

    def __getitem__(self, name: str) -> int:
        for key, value in self.assignments:
            if key == name:
                return value
        raise KeyError(name)


def build_space(domain_specs: Sequence[tuple[str, Sequence[int]]]) -> SearchSpace:
    """Build a space from (name, values) pairs, in declaration order."""
    return SearchSpace(
        tuple(ParamDomain(name, tuple(values)) for name, values in domain_specs)
    )


def space_size(space: SearchSpace) -> int:
    size = 1
    for d in space.domains:
        size *= len(d.values)
    return size


def validate(space: SearchSpace, config: Configuration) -> None:
    """Raise SpaceError unless config assigns exactly one in-domain value per domain."""
    seen = dict(config.assignments)
    if len(seen) != len(config.assignments):
        raise SpaceError("configuration repeats a domain name")
    for d in space.domains:
        if d.name not in seen:
            raise SpaceError(f"configuration missing domain {d.name!r}")
        d.index_of(seen[d.name])
    extra = set(seen) - set(space.names)
    if extra:
        raise SpaceError(f"configuration has unknown domain(s): {sorted(extra)}")


def encode(space: SearchSpace, config: Configuration) -> tuple[int, ...]:
    """Per-domain 0-based index vector of the chosen values."""
    validate(space, config)
    mapping = config.as_dict()
    return tuple(d.index_of(mapping[d.name]) for d in space.domains)


def decode(space: SearchSpace, indices: Sequence[int]) -> Configuration:
    if len(indices) != len(space.domains):
        raise SpaceError(
            f"expected {len(space.domains)} indices, got {len(indices)}"
        )
    assignments = []
    for d, idx in zip(space.domains, indices):
        if not 0 <= idx < len(d.values):
            raise SpaceError(f"index {idx} out of range for domain {d.name!r}")
        assignments.append((d.name, d.values[idx]))
    return Configuration(tuple(assignments))


def enumerate_space(space: SearchSpace) -> Iterator[Configuration]:
    """All configurations in lexicographic encoded order, first domain slowest."""
    ranges = [range(len(d.values)) for d in space.domains]
    for indices in itertools.product(*ranges):
        yield decode(space, indices)


def space_hash(space: SearchSpace) -> str:
    """Stable content hash used to guard log resume against space drift."""
    canonical = json.dumps(space.to_dict(), separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


_ALLOWED_TOP_KEYS = {"domains"}
_ALLOWED_DOMAIN_KEYS = {"name", "values"}


def space_from_dict(doc: object) -> SearchSpace:
    """Parse the space-file document. Unknown keys are rejected."""
    if not isinstance(doc, dict):
        raise SpaceError("space document must be an object")
    unknown = set(doc) - _ALLOWED_TOP_KEYS
    if unknown:
        raise SpaceError(f"unknown top-level key(s): {sorted(unknown)}")
    if "domains" not in doc or not isinstance(doc["domains"], list):
        raise SpaceError('space document needs a "domains" list')
    specs = []
    for i, entry in enumerate(doc["domains"]):
        if not isinstance(entry, dict):
            raise SpaceError(f"domains[{i}] must be an object")
        unknown = set(entry) - _ALLOWED_DOMAIN_KEYS
        if unknown:
            raise SpaceError(f"domains[{i}] has unknown key(s): {sorted(unknown)}")
        name = entry.get("name")
        values = entry.get("values")
        if not isinstance(name, str):
            raise SpaceError(f"domains[{i}].name must be a string")
        if not isinstance(values, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in values
        ):
            raise SpaceError(f"domains[{i}].values must be a list of integers")
        specs.append((name, values))
    return build_space(specs)


def load_space(path: str | Path) -> SearchSpace:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpaceError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return space_from_dict(doc)


def default_space() -> SearchSpace:
    """The shipped VSR architecture space: 10 x 8 x 10 = 800 configurations."""
    with resources.files("hofvsr.data").joinpath("hofvsr_space.json").open(
        "r", encoding="utf-8"
    ) as fh:
        return space_from_dict(json.load(fh))
