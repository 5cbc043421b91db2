#
# Module for pattern generation
#

from patdiv.patterns.pattern_set import PatternMethod, PatternSet, Blacklist, NoiseConfig, BernoulliConfig, pattern_set_to_dict, pattern_set_from_dict
from patdiv.patterns.permutation import permutation_patterns, rotations
from patdiv.patterns.padding import minimum_pad, nop_padding_patterns, nop_noise_patterns, DEFAULT_MAX_PAD
from patdiv.patterns.bernoulli import bernoulli_patterns
from patdiv.patterns.noise_cost import noise_cost
