#
# Module for community analysis
#

from patdiv.analysis.survivors import GadgetState, GadgetSpread, SurvivorReport, survivors, spread_histogram, pairwise_raw_count, survivor_report_to_dict, survivor_report_from_dict
from patdiv.analysis.entropy import EntropyReport, entropy
from patdiv.analysis.compare import ComparisonRow, ComparisonTable, compare
