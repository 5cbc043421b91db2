import logging

import numpy as np

from patdiv.binary.program import Pattern
from patdiv.patterns.pattern_set import PatternMethod, PatternSet, pattern_label
from patdiv.utils.errors import ValidationError
from patdiv.utils.named_stage import named_stage

logger = logging.getLogger(__name__)


def rotations(base_permutation):
    """The F rotations of a base permutation, rotation r starting at base[r]."""
    base = np.asarray(base_permutation, dtype=int)
    return [tuple(np.roll(base, -r).tolist()) for r in range(len(base))]


@named_stage("permutation_patterns")
def permutation_patterns(num_functions, seed, label_prefix="", program_hash=None):
    """Function permutation community of size F.

    A seeded base permutation and its F-1 rotations place every function in every position
    exactly once; the list is then shuffled with the same seed.
    """
    if num_functions < 1:
        raise ValidationError("permutation patterns need at least one function, got %d" % num_functions)
    baseSeq, shuffleSeq = np.random.SeedSequence(seed).spawn(2)
    base = np.random.default_rng(baseSeq).permutation(num_functions)
    generated = [Pattern.from_order(order, pattern_label(g, label_prefix), g) for g, order in enumerate(rotations(base))]
    order = np.random.default_rng(shuffleSeq).permutation(num_functions)
    logger.info("permutation patterns: base %s, %d rotations", " ".join(map(str, base.tolist())), num_functions)
    return PatternSet(PatternMethod.PERM, tuple(generated[i] for i in order), num_functions, seed,
                      params={"base_permutation": base.tolist()}, program_hash=program_hash)
