import logging
from dataclasses import dataclass

import pandas as pd

from patdiv.utils.errors import ProgramMismatchError, ValidationError
from patdiv.utils.named_stage import named_stage

logger = logging.getLogger(__name__)

COLUMNS = ["Method", "Gadgets Found", "Aggregate Gadgets", "Builds per Gadget Found", "Single-build States", "Shannon Entropy"]


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    population: int
    raw: int
    aggregate: int
    histogram: dict
    singleton_states: int
    entropy_bits: float

    @property
    def spread_summary(self):
        if not self.histogram:
            return "none"
        return ", ".join("%d-build: %d" % (b, n) for b, n in sorted(self.histogram.items()))


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple

    def to_records(self):
        return [
            {
                "label": row.label,
                "population": row.population,
                "raw": row.raw,
                "aggregate": row.aggregate,
                "histogram": {str(b): n for b, n in sorted(row.histogram.items())},
                "singleton_states": row.singleton_states,
                "entropy_bits": row.entropy_bits,
            }
            for row in self.rows
        ]

    def to_frame(self):
        return pd.DataFrame(
            [[row.label, row.raw, row.aggregate, row.spread_summary, row.singleton_states, row.entropy_bits] for row in self.rows],
            columns=COLUMNS,
        )

    def to_text(self):
        return self.to_frame().to_string(index=False, justify="left", float_format=lambda x: "%.3f" % x)

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)


@named_stage("compare")
def compare(reports):
    """Method comparison sorted by descending entropy, ties broken by label.

    reports is a list of (label, SurvivorReport, EntropyReport) over the same program, N and sled window.
    """
    if len(reports) < 2:
        raise ValidationError("comparison needs at least 2 labelled reports, got %d" % len(reports))
    populations = {survivor.population for _, survivor, _ in reports}
    if len(populations) > 1:
        raise ValidationError("reports cover different population sizes: %s" % sorted(populations))
    hashes = {survivor.program_hash for _, survivor, _ in reports if survivor.program_hash is not None}
    if len(hashes) > 1:
        raise ProgramMismatchError("reports were computed on different programs")
    windows = {survivor.sled_window for _, survivor, _ in reports if survivor.sled_window is not None}
    if len(windows) > 1:
        raise ValidationError("reports were scored with different sled windows: %s" % sorted(windows))

    rows = [
        ComparisonRow(label, survivor.population, survivor.raw_count, survivor.aggregate_count, dict(survivor.histogram),
                      survivor.singleton_states, float(ent.shannon_bits))
        for label, survivor, ent in reports
    ]
    rows.sort(key=lambda row: (-row.entropy_bits, row.label))
    logger.info("compared %d methods, highest entropy: %s", len(rows), rows[0].label)
    return ComparisonTable(tuple(rows))
