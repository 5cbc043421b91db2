#
# Module for the abstract binary model
#

from patdiv.binary.program import Instruction, InstructionKind, Function, Program, ProgramSpec, Pattern, PatternKind, Variant, build_program, program_from_slots, program_hash
from patdiv.binary.layout import ProgramArrays, Layout, expand, layout, materialize
from patdiv.binary.apply_pattern import apply_pattern, apply_patterns, layout_pattern
from patdiv.binary.reachability import ReachabilityMap, DEFAULT_SLED_WINDOW, gadget_reach, scan_layout, scan_reachability
from patdiv.binary.file_size import file_size, size_overhead, file_size_table
