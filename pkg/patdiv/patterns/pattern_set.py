import enum
from dataclasses import dataclass, field
from typing import Optional

from patdiv.binary.program import Pattern, PatternKind
from patdiv.utils.errors import ValidationError


class PatternMethod(enum.Enum):
    PERM = "perm"
    PAD = "pad"
    PAD_NOISE = "pad-noise"
    BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class NoiseConfig:
    rate: float

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValidationError("noise rate must lie in [0, 1], got %r" % self.rate)


@dataclass(frozen=True)
class BernoulliConfig:
    rate: float

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValidationError("bernoulli rate must lie in [0, 1], got %r" % self.rate)


def pattern_label(generation_index, prefix=""):
    return "%sv%04d" % (prefix, generation_index)


@dataclass
class Blacklist:
    """(gadget class, offset) states already reachable in some emitted variant. Only grows."""

    entries: dict = field(default_factory=dict)

    @classmethod
    def from_map(cls, rmap):
        blacklist = cls()
        blacklist.add(rmap)
        return blacklist

    def add(self, rmap):
        for cls, offsets in rmap.entries.items():
            self.entries.setdefault(cls, set()).update(offsets)

    def __contains__(self, state):
        cls, off = state
        return off in self.entries.get(cls, ())

    def __len__(self):
        return sum(len(offsets) for offsets in self.entries.values())

    def intersects(self, rmap):
        return any(not self.entries.get(cls, set()).isdisjoint(offsets) for cls, offsets in rmap.entries.items())

    def collisions(self, rmap):
        hits = [(cls, off) for cls, offsets in rmap.entries.items() for off in offsets & self.entries.get(cls, set())]
        return sorted(hits, key=lambda state: (state[1], state[0]))


@dataclass(frozen=True)
class PatternSet:
    method: PatternMethod
    patterns: tuple
    population: int
    seed: int
    params: dict = field(default_factory=dict)
    program_hash: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "patterns", tuple(self.patterns))
        if self.population < 1:
            raise ValidationError("population must be >= 1, got %d" % self.population)
        if len(self.patterns) != self.population:
            raise ValidationError("pattern set holds %d patterns for population %d" % (len(self.patterns), self.population))
        labels = [pattern.label for pattern in self.patterns]
        if len(set(labels)) != len(labels):
            raise ValidationError("pattern labels must be unique")
        if self.method in (PatternMethod.PAD, PatternMethod.PAD_NOISE):
            totals = [pattern.total_nops for pattern in self.in_generation_order()]
            if any(b <= a for a, b in zip(totals, totals[1:])):
                raise ValidationError("NOP totals must strictly increase along generation order")

    def in_generation_order(self):
        return sorted(self.patterns, key=lambda pattern: pattern.generation_index)

    def by_label(self):
        return {pattern.label: pattern for pattern in self.patterns}

    @property
    def labels(self):
        return [pattern.label for pattern in self.patterns]


def pattern_to_dict(pattern):
    doc = {"label": pattern.label, "generation_index": int(pattern.generation_index), "kind": pattern.kind.value}
    if pattern.kind is PatternKind.PERMUTATION:
        doc["permutation"] = [int(f) for f in pattern.permutation]
    else:
        doc["insertions"] = [[int(f), int(i), int(n)] for f, i, n in pattern.insertions]
    return doc


def pattern_from_dict(doc):
    try:
        kind = PatternKind(doc["kind"])
        if kind is PatternKind.PERMUTATION:
            return Pattern(kind, doc["label"], permutation=tuple(doc["permutation"]), generation_index=int(doc["generation_index"]))
        return Pattern(kind, doc["label"], insertions=tuple(tuple(entry) for entry in doc["insertions"]),
                       generation_index=int(doc["generation_index"]))
    except (KeyError, TypeError, ValueError) as err:
        raise ValidationError("malformed pattern document: %s" % err) from err


def pattern_set_to_dict(pattern_set):
    return {
        "method": pattern_set.method.value,
        "population": int(pattern_set.population),
        "seed": int(pattern_set.seed),
        "params": dict(pattern_set.params),
        "program_hash": pattern_set.program_hash,
        "patterns": [pattern_to_dict(pattern) for pattern in pattern_set.patterns],
    }


def pattern_set_from_dict(doc):
    try:
        return PatternSet(
            method=PatternMethod(doc["method"]),
            patterns=tuple(pattern_from_dict(pdoc) for pdoc in doc["patterns"]),
            population=int(doc["population"]),
            seed=int(doc["seed"]),
            params=dict(doc.get("params", {})),
            program_hash=doc.get("program_hash"),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ValidationError("malformed pattern set document: %s" % err) from err
