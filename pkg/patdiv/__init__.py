#
# Module for pattern-based software diversification
#

from patdiv.binary.program import Program, Pattern, Variant, build_program
from patdiv.patterns.pattern_set import PatternSet
from patdiv.analysis.survivors import survivors
from patdiv.analysis.entropy import entropy
