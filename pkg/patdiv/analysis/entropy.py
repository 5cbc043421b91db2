import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import entr

from patdiv.utils.named_stage import named_stage

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntropyReport:
    shannon_bits: float
    per_state: Optional[tuple] = None
    empty: bool = False


@named_stage("entropy")
def entropy(report, detail=False):
    """Shannon entropy in bits over gadget states, with P(c) = b_c / N.

    States found in a single build are included; a state present in every build contributes 0.
    """
    if len(report.spreads) == 0:
        logger.warning("entropy of an empty spread list is reported as 0 bits")
        return EntropyReport(0.0, () if detail else None, empty=True)
    builds = np.fromiter((spread.build_count for spread in report.spreads), dtype=np.float64, count=len(report.spreads))
    contributions = entr(builds / report.population) / np.log(2)
    perState = tuple(zip((spread.state for spread in report.spreads), contributions.tolist())) if detail else None
    return EntropyReport(float(contributions.sum()), perState)
