import enum
import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import ujson as json

from patdiv.utils.errors import ValidationError
from patdiv.utils.named_stage import named_stage

DEFAULT_NOP_BYTE_LEN = 1


class InstructionKind(enum.Enum):
    NOP = "nop"
    PLAIN = "plain"
    GADGET = "gadget"


@dataclass(frozen=True)
class Instruction:
    kind: InstructionKind
    byte_len: int = 1
    gadget_class: Optional[int] = None

    def __post_init__(self):
        if self.byte_len < 1:
            raise ValidationError("instruction byte_len must be >= 1, got %d" % self.byte_len)
        if (self.kind is InstructionKind.GADGET) != (self.gadget_class is not None):
            raise ValidationError("gadget_class must be set exactly for gadget instructions")

    @classmethod
    def nop(cls, byte_len=1):
        return cls(InstructionKind.NOP, byte_len)

    @classmethod
    def plain(cls, byte_len=1):
        return cls(InstructionKind.PLAIN, byte_len)

    @classmethod
    def gadget(cls, gadget_class, byte_len=1):
        return cls(InstructionKind.GADGET, byte_len, int(gadget_class))


@dataclass(frozen=True)
class Function:
    id: int
    body: tuple

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        if len(self.body) == 0:
            raise ValidationError("function %d has an empty body" % self.id)


@dataclass(frozen=True)
class Program:
    functions: tuple
    alignment: int = 0
    nop_byte_len: int = DEFAULT_NOP_BYTE_LEN

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        if len(self.functions) == 0:
            raise ValidationError("a program needs at least one function")
        for expected, function in enumerate(self.functions):
            if function.id != expected:
                raise ValidationError("function ids must be 0..F-1 in order, found %d at position %d" % (function.id, expected))
        if self.alignment < 0 or (self.alignment > 0 and self.alignment & (self.alignment - 1)):
            raise ValidationError("alignment must be 0 or a power of two, got %d" % self.alignment)
        if self.nop_byte_len < 1:
            raise ValidationError("nop_byte_len must be >= 1, got %d" % self.nop_byte_len)

    @property
    def num_functions(self):
        return len(self.functions)

    @property
    def num_instructions(self):
        return sum(len(function.body) for function in self.functions)

    @property
    def gadget_count(self):
        return sum(instr.kind is InstructionKind.GADGET for function in self.functions for instr in function.body)


class PatternKind(enum.Enum):
    PERMUTATION = "permutation"
    NOP_INSERTION = "nop-insertion"


@dataclass(frozen=True)
class Pattern:
    """Declarative build-time transformation.

    A permutation pattern lists source function indices in output order. A NOP insertion
    pattern lists (function_id, instruction_index, nop_count) entries addressing positions
    of the untransformed function bodies, sorted and unique by (function_id, instruction_index).
    """

    kind: PatternKind
    label: str = ""
    permutation: Optional[tuple] = None
    insertions: Optional[tuple] = None
    generation_index: int = 0

    def __post_init__(self):
        if self.kind is PatternKind.PERMUTATION:
            if self.permutation is None or self.insertions is not None:
                raise ValidationError("permutation patterns carry a permutation and no insertions")
            perm = tuple(int(x) for x in self.permutation)
            if sorted(perm) != list(range(len(perm))):
                raise ValidationError("pattern %r is not a permutation of 0..%d" % (self.label, len(perm) - 1))
            object.__setattr__(self, "permutation", perm)
        else:
            if self.insertions is None or self.permutation is not None:
                raise ValidationError("NOP insertion patterns carry insertions and no permutation")
            ins = tuple((int(f), int(i), int(n)) for f, i, n in self.insertions)
            keys = [(f, i) for f, i, _ in ins]
            if keys != sorted(set(keys)):
                raise ValidationError("insertions of %r must be sorted with unique (function, index) keys" % self.label)
            if any(n < 1 or f < 0 or i < 0 for f, i, n in ins):
                raise ValidationError("insertions of %r need nop_count >= 1 and non-negative indices" % self.label)
            object.__setattr__(self, "insertions", ins)

    @classmethod
    def from_order(cls, order, label="", generation_index=0):
        return cls(PatternKind.PERMUTATION, label, permutation=tuple(order), generation_index=generation_index)

    @classmethod
    def from_counts(cls, counts, label="", generation_index=0):
        ins = tuple((f, i, n) for (f, i), n in sorted(counts.items()) if n > 0)
        return cls(PatternKind.NOP_INSERTION, label, insertions=ins, generation_index=generation_index)

    @property
    def counts(self):
        return {(f, i): n for f, i, n in (self.insertions or ())}

    @property
    def total_nops(self):
        return sum(n for _, _, n in (self.insertions or ()))

    @property
    def noise_sites(self):
        # index 0 of a function is its head pad, everything else is interior noise
        return frozenset((f, i) for f, i, _ in (self.insertions or ()) if i > 0)

    def validate_for(self, program):
        if self.kind is PatternKind.PERMUTATION:
            if len(self.permutation) != program.num_functions:
                raise ValidationError("permutation %r has %d entries for a program of %d functions"
                                      % (self.label, len(self.permutation), program.num_functions))
            return
        for f, i, _ in self.insertions:
            if f >= program.num_functions or i >= len(program.functions[f].body):
                raise ValidationError("insertion (%d, %d) of %r is out of range" % (f, i, self.label))


@dataclass(frozen=True)
class Variant:
    program: Program
    pattern_label: str
    total_bytes: int
    function_order: tuple = field(default=())


@dataclass(frozen=True)
class ProgramSpec:
    functions: int
    instructions_per_function: int
    gadget_density: float
    class_count: int
    duplicate_class_rate: float = 0.1
    alignment: int = 0
    seed: int = 0
    nop_byte_len: int = DEFAULT_NOP_BYTE_LEN
    max_instruction_len: int = 1

    def __post_init__(self):
        if self.functions < 1:
            raise ValidationError("functions must be >= 1, got %d" % self.functions)
        if self.instructions_per_function < 1:
            raise ValidationError("instructions_per_function must be >= 1, got %d" % self.instructions_per_function)
        if self.class_count < 1:
            raise ValidationError("class_count must be >= 1, got %d" % self.class_count)
        for name in ("gadget_density", "duplicate_class_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValidationError("%s must lie in [0, 1], got %r" % (name, rate))
        if self.max_instruction_len < 1:
            raise ValidationError("max_instruction_len must be >= 1, got %d" % self.max_instruction_len)


@named_stage("build_program")
def build_program(spec):
    """Generate a synthetic program deterministically from a ProgramSpec.

    Each instruction is a gadget start with probability gadget_density. A gadget site reuses
    an already assigned class with probability duplicate_class_rate (or when all classes are
    taken), otherwise it draws a class never used before.
    """
    if isinstance(spec, dict):
        spec = ProgramSpec(**spec)
    rng = np.random.default_rng(spec.seed)
    nf, ni = spec.functions, spec.instructions_per_function

    isGadget = rng.random((nf, ni)) < spec.gadget_density
    if spec.max_instruction_len > 1:
        lens = rng.integers(1, spec.max_instruction_len + 1, size=(nf, ni))
    else:
        lens = np.ones((nf, ni), dtype=int)

    freshClasses = rng.permutation(spec.class_count)
    nextFresh = 0
    used = []
    functions = []
    for f in range(nf):
        body = []
        for i in range(ni):
            if not isGadget[f, i]:
                body.append(Instruction.plain(int(lens[f, i])))
                continue
            reuse = len(used) > 0 and rng.random() < spec.duplicate_class_rate
            if reuse or nextFresh == spec.class_count:
                cls = used[rng.integers(len(used))]
            else:
                cls = int(freshClasses[nextFresh])
                nextFresh += 1
            used.append(cls)
            body.append(Instruction.gadget(cls, int(lens[f, i])))
        functions.append(Function(f, body))
    return Program(tuple(functions), alignment=spec.alignment, nop_byte_len=spec.nop_byte_len)


def program_from_slots(slots, alignment=0, nop_byte_len=DEFAULT_NOP_BYTE_LEN):
    """Build a program from slot notation such as "A B N C D | E F".

    Letters are gadgets of class ord(letter) - ord("A"), N is a NOP, "." a plain instruction
    and "|" separates functions. All slots are one byte long.
    """
    functions = []
    for f, chunk in enumerate(slots.split("|")):
        body = []
        for token in chunk.split():
            if token == "N":
                body.append(Instruction.nop(nop_byte_len))
            elif token == ".":
                body.append(Instruction.plain())
            else:
                body.append(Instruction.gadget(ord(token) - ord("A")))
        functions.append(Function(f, body))
    return Program(tuple(functions), alignment=alignment, nop_byte_len=nop_byte_len)


def instruction_to_dict(instr):
    doc = {"kind": instr.kind.value, "len": int(instr.byte_len)}
    if instr.gadget_class is not None:
        doc["class"] = int(instr.gadget_class)
    return doc


def program_to_dict(program):
    return {
        "alignment": int(program.alignment),
        "nop_byte_len": int(program.nop_byte_len),
        "functions": [
            {"id": int(function.id), "body": [instruction_to_dict(instr) for instr in function.body]}
            for function in program.functions
        ],
    }


def program_from_dict(doc):
    try:
        functions = [
            Function(int(fdoc["id"]), [Instruction(InstructionKind(idoc["kind"]), int(idoc["len"]), idoc.get("class"))
                                       for idoc in fdoc["body"]])
            for fdoc in doc["functions"]
        ]
        return Program(tuple(functions), alignment=int(doc["alignment"]), nop_byte_len=int(doc["nop_byte_len"]))
    except (KeyError, TypeError, ValueError) as err:
        raise ValidationError("malformed program document: %s" % err) from err


def variant_to_dict(variant):
    doc = program_to_dict(variant.program)
    doc["label"] = variant.pattern_label
    doc["total_bytes"] = int(variant.total_bytes)
    doc["function_order"] = [int(f) for f in variant.function_order]
    return doc


def variant_from_dict(doc):
    program = program_from_dict(doc)
    try:
        return Variant(program, doc.get("label", ""), int(doc["total_bytes"]), tuple(doc.get("function_order", ())))
    except (KeyError, TypeError, ValueError) as err:
        raise ValidationError("malformed variant document: %s" % err) from err


def program_hash(program):
    """Content hash of the canonical program document."""
    canonical = json.dumps(program_to_dict(program), sort_keys=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
