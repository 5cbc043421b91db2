from dataclasses import dataclass

import numpy as np

from patdiv.binary.program import Function, Instruction, InstructionKind, Program

KIND_CODES = {InstructionKind.NOP: 0, InstructionKind.PLAIN: 1, InstructionKind.GADGET: 2}
KIND_NOP, KIND_PLAIN, KIND_GADGET = 0, 1, 2
NO_CLASS = -1


@dataclass(frozen=True)
class ProgramArrays:
    """Per-function instruction arrays of a program, computed once and reused by every expansion."""

    kinds: tuple
    lens: tuple
    classes: tuple
    alignment: int
    nop_byte_len: int

    @classmethod
    def from_program(cls, program):
        kinds, lens, classes = [], [], []
        for function in program.functions:
            kinds.append(np.fromiter((KIND_CODES[instr.kind] for instr in function.body), dtype=np.int8, count=len(function.body)))
            lens.append(np.fromiter((instr.byte_len for instr in function.body), dtype=np.int64, count=len(function.body)))
            classes.append(np.fromiter((NO_CLASS if instr.gadget_class is None else instr.gadget_class for instr in function.body),
                                       dtype=np.int64, count=len(function.body)))
        return cls(tuple(kinds), tuple(lens), tuple(classes), program.alignment, program.nop_byte_len)

    @property
    def num_functions(self):
        return len(self.kinds)


@dataclass(frozen=True)
class Layout:
    """Flat instruction stream of a (transformed) program with absolute byte offsets.

    src_function / src_index locate each stream entry in the untransformed program; inserted
    and alignment NOPs have src_index -1 and belong to the function they were emitted with.
    segments[p] is the stream slice emitted for output position p, trailing alignment included.
    """

    kinds: np.ndarray
    lens: np.ndarray
    classes: np.ndarray
    offsets: np.ndarray
    src_function: np.ndarray
    src_index: np.ndarray
    segments: tuple
    function_order: tuple
    total_bytes: int


def _alignment_fill(gap, nop_byte_len):
    full, rest = divmod(gap, nop_byte_len)
    fill = [nop_byte_len] * full
    if rest:
        fill.append(rest)
    return np.asarray(fill, dtype=np.int64)


def expand(arrays, counts=None, order=None):
    """Lay out a program after NOP insertion (counts) and function reordering (order)."""
    counts = counts or {}
    order = tuple(range(arrays.num_functions)) if order is None else tuple(order)
    perFunction = [dict() for _ in range(arrays.num_functions)]
    for (f, i), n in counts.items():
        perFunction[f][i] = perFunction[f].get(i, 0) + n

    pieces = []
    cursor = 0
    for p, f in enumerate(order):
        k, l, c = arrays.kinds[f], arrays.lens[f], arrays.classes[f]
        nopCount = np.zeros(len(k), dtype=np.int64)
        for i, n in perFunction[f].items():
            nopCount[i] += n
        reps = nopCount + 1
        size = int(reps.sum())
        pos = np.cumsum(reps) - 1
        fk = np.full(size, KIND_NOP, dtype=np.int8)
        fl = np.full(size, arrays.nop_byte_len, dtype=np.int64)
        fc = np.full(size, NO_CLASS, dtype=np.int64)
        fi = np.full(size, -1, dtype=np.int64)
        fk[pos], fl[pos], fc[pos], fi[pos] = k, l, c, np.arange(len(k))

        if p > 0 and arrays.alignment > 0:
            gap = (-cursor) % arrays.alignment
            if gap:
                fill = _alignment_fill(gap, arrays.nop_byte_len)
                prev = pieces[-1]
                pieces[-1] = (
                    np.concatenate([prev[0], np.full(len(fill), KIND_NOP, dtype=np.int8)]),
                    np.concatenate([prev[1], fill]),
                    np.concatenate([prev[2], np.full(len(fill), NO_CLASS, dtype=np.int64)]),
                    np.concatenate([prev[3], np.full(len(fill), -1, dtype=np.int64)]),
                    prev[4],
                )
                cursor += gap
        pieces.append((fk, fl, fc, fi, f))
        cursor += int(fl.sum())

    kinds = np.concatenate([piece[0] for piece in pieces])
    lens = np.concatenate([piece[1] for piece in pieces])
    classes = np.concatenate([piece[2] for piece in pieces])
    srcIndex = np.concatenate([piece[3] for piece in pieces])
    srcFunction = np.concatenate([np.full(len(piece[0]), piece[4], dtype=np.int64) for piece in pieces])
    bounds = np.cumsum([0] + [len(piece[0]) for piece in pieces])
    segments = tuple((int(bounds[p]), int(bounds[p + 1])) for p in range(len(pieces)))
    offsets = np.concatenate([[0], np.cumsum(lens)[:-1]]).astype(np.int64)
    return Layout(kinds, lens, classes, offsets, srcFunction, srcIndex, segments, order, int(lens.sum()))


def layout(program):
    return expand(ProgramArrays.from_program(program))


def materialize(program, lay):
    """Turn a layout of `program` back into a Program whose bodies hold every inserted NOP."""
    nops = {}
    functions = []
    for p, (start, end) in enumerate(lay.segments):
        f = lay.function_order[p]
        source = program.functions[f].body
        body = []
        for s in range(start, end):
            idx = lay.src_index[s]
            if idx >= 0:
                body.append(source[idx])
            else:
                nl = int(lay.lens[s])
                if nl not in nops:
                    nops[nl] = Instruction.nop(nl)
                body.append(nops[nl])
        functions.append(Function(p, body))
    return Program(tuple(functions), alignment=program.alignment, nop_byte_len=program.nop_byte_len)
