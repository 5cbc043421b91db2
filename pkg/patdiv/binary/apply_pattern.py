from concurrent.futures import ThreadPoolExecutor

from patdiv.binary.layout import ProgramArrays, expand, materialize
from patdiv.binary.program import PatternKind, Variant
from patdiv.utils.named_stage import named_stage


def layout_pattern(program, pattern, arrays=None):
    arrays = ProgramArrays.from_program(program) if arrays is None else arrays
    if pattern.kind is PatternKind.PERMUTATION:
        return expand(arrays, order=pattern.permutation)
    return expand(arrays, counts=pattern.counts)


@named_stage("apply_pattern")
def apply_pattern(program, pattern, arrays=None):
    """Apply a pattern to a program and return the resulting Variant.

    Permutations put source function pattern.permutation[k] at output position k. NOP
    insertions place nop_count NOPs right before the addressed instruction of the untransformed
    body. With alignment, every function start is padded with NOPs to the next multiple. The
    source program is left untouched.
    """
    pattern.validate_for(program)
    lay = layout_pattern(program, pattern, arrays)
    return Variant(materialize(program, lay), pattern.label, lay.total_bytes, lay.function_order)


@named_stage("apply_patterns")
def apply_patterns(program, patterns, workers=None):
    """Apply every pattern to the same program, optionally on a thread pool; order is kept."""
    arrays = ProgramArrays.from_program(program)
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(lambda pattern: apply_pattern(program, pattern, arrays), patterns))
    return [apply_pattern(program, pattern, arrays) for pattern in patterns]
