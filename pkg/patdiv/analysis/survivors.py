import itertools
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from scipy.special import comb

from patdiv.binary.program import InstructionKind
from patdiv.binary.reachability import DEFAULT_SLED_WINDOW, scan_reachability
from patdiv.utils.errors import ValidationError
from patdiv.utils.named_stage import named_stage

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class GadgetState:
    gadget_class: int
    offset: int


@dataclass(frozen=True)
class GadgetSpread:
    state: GadgetState
    build_count: int


@dataclass(frozen=True)
class SurvivorReport:
    """Spread of every (class, offset) state over a community of `population` variants.

    raw_count counts variant pairs sharing a state, aggregate_count the states shared by at
    least two variants, histogram maps b >= 2 to the number of states found in exactly b variants.
    """

    population: int
    spreads: tuple
    program_hash: Optional[str] = None
    sled_window: Optional[int] = None
    raw_count: int = field(init=False)
    aggregate_count: int = field(init=False)
    histogram: dict = field(init=False)
    singleton_states: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "spreads", tuple(self.spreads))
        if self.population < 1:
            raise ValidationError("population must be >= 1, got %d" % self.population)
        builds = Counter(spread.build_count for spread in self.spreads)
        if builds and (min(builds) < 1 or max(builds) > self.population):
            raise ValidationError("build counts must lie in [1, %d]" % self.population)
        object.__setattr__(self, "histogram", {b: builds[b] for b in sorted(builds) if b >= 2})
        object.__setattr__(self, "singleton_states", builds.get(1, 0))
        object.__setattr__(self, "aggregate_count", sum(self.histogram.values()))
        object.__setattr__(self, "raw_count", int(sum(comb(b, 2, exact=True) * n for b, n in self.histogram.items())))

    @classmethod
    def from_histogram(cls, population, histogram, singleton_states=0, program_hash=None, sled_window=None):
        """Report with anonymous states, one per counted (b, state) entry."""
        spreads = []
        for b, n in sorted({**histogram, 1: singleton_states}.items()):
            spreads.extend(GadgetSpread(GadgetState(int(b), j), int(b)) for j in range(int(n)))
        return cls(population, tuple(spreads), program_hash, sled_window)


def _source_signature(variant):
    kinds = Counter()
    for function in variant.program.functions:
        for instr in function.body:
            if instr.kind is not InstructionKind.NOP:
                kinds[(instr.kind, instr.byte_len, instr.gadget_class)] += 1
    return kinds


def pairwise_raw_count(maps):
    """Brute force: number of shared states summed over all variant pairs."""
    states = [rmap.states() for rmap in maps]
    return sum(len(a & b) for a, b in itertools.combinations(states, 2))


@named_stage("survivors")
def survivors(variants, sled_window=DEFAULT_SLED_WINDOW, workers=None, program_hash=None):
    if len(variants) < 2:
        raise ValidationError("survivor analysis needs at least 2 variants, got %d" % len(variants))
    reference = _source_signature(variants[0])
    if any(_source_signature(variant) != reference for variant in variants[1:]):
        raise ValidationError("variants do not come from the same source program")

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            maps = list(executor.map(lambda v: scan_reachability(v, sled_window), variants))
    else:
        maps = [scan_reachability(variant, sled_window) for variant in variants]

    spread = Counter()
    for rmap in maps:
        spread.update(rmap.states())
    spreads = tuple(GadgetSpread(GadgetState(cls, off), b) for (cls, off), b in sorted(spread.items()))
    report = SurvivorReport(len(variants), spreads, program_hash, sled_window)
    logger.info("survivors over %d variants: raw %d, aggregate %d", len(variants), report.raw_count, report.aggregate_count)
    return report


def spread_histogram(report):
    """Number of states per build count b >= 2; b = 1 is report.singleton_states."""
    return dict(report.histogram)


def survivor_report_to_dict(report, entropy_report=None, label=None):
    doc = {
        "population": int(report.population),
        "raw": int(report.raw_count),
        "aggregate": int(report.aggregate_count),
        "histogram": {str(b): int(n) for b, n in report.histogram.items()},
        "singleton_states": int(report.singleton_states),
        "entropy_bits": None if entropy_report is None else float(entropy_report.shannon_bits),
    }
    if label is not None:
        doc["label"] = label
    if report.program_hash is not None:
        doc["program_hash"] = report.program_hash
    if report.sled_window is not None:
        doc["sled_window"] = int(report.sled_window)
    return doc


def survivor_report_from_dict(doc):
    try:
        sled_window = None if doc.get("sled_window") is None else int(doc["sled_window"])
        histogram = {int(b): int(n) for b, n in doc["histogram"].items()}
        return SurvivorReport.from_histogram(int(doc["population"]), histogram, int(doc.get("singleton_states", 0)),
                                             doc.get("program_hash"), sled_window)
    except (KeyError, TypeError, ValueError) as err:
        raise ValidationError("malformed survivor report: %s" % err) from err
