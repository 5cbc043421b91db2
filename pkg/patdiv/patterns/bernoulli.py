import logging

import numpy as np

from patdiv.binary.program import Pattern
from patdiv.patterns.pattern_set import BernoulliConfig, PatternMethod, PatternSet, pattern_label
from patdiv.utils.errors import ValidationError
from patdiv.utils.named_stage import named_stage

logger = logging.getLogger(__name__)


@named_stage("bernoulli_patterns")
def bernoulli_patterns(program, population, cfg, seed, label_prefix="", program_hash=None):
    """Compile-time baseline: every instruction independently gets one NOP in front with probability cfg.rate.

    Patterns share no state with each other, like separate compilation sessions.
    """
    if population < 1:
        raise ValidationError("population must be >= 1, got %d" % population)
    if not isinstance(cfg, BernoulliConfig):
        cfg = BernoulliConfig(float(cfg))
    sites = [(f, i) for f, function in enumerate(program.functions) for i in range(len(function.body))]
    rng = np.random.default_rng(seed)
    patterns = []
    for g in range(population):
        hits = np.flatnonzero(rng.random(len(sites)) < cfg.rate)
        patterns.append(Pattern.from_counts({sites[j]: 1 for j in hits}, pattern_label(g, label_prefix), g))
    logger.info("bernoulli patterns: p=%g, mean insertions %.1f", cfg.rate,
                np.mean([pattern.total_nops for pattern in patterns]))
    return PatternSet(PatternMethod.BERNOULLI, tuple(patterns), population, seed,
                      params={"bernoulli_rate": cfg.rate}, program_hash=program_hash)
