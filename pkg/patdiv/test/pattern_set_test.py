import pytest

from patdiv.binary.program import Pattern, program_from_slots, program_hash
from patdiv.patterns.padding import nop_noise_patterns
from patdiv.patterns.pattern_set import PatternMethod, PatternSet, pattern_label, pattern_set_from_dict, pattern_set_to_dict
from patdiv.patterns.permutation import permutation_patterns
from patdiv.utils.errors import ValidationError


def test_pattern_label():

    assert pattern_label(7) == "v0007"
    assert pattern_label(301, "ext-") == "ext-v0301"


def test_pattern_set_rejects_duplicate_labels():

    patterns = [Pattern.from_counts({}, "v0000", 0), Pattern.from_counts({(0, 0): 1}, "v0000", 1)]

    with pytest.raises(ValidationError):
        PatternSet(PatternMethod.BERNOULLI, patterns, 2, seed=1)


def test_pattern_set_rejects_population_mismatch():

    with pytest.raises(ValidationError):
        PatternSet(PatternMethod.BERNOULLI, [Pattern.from_counts({}, "v0000")], 2, seed=1)


def test_pattern_set_rejects_non_increasing_pads():

    patterns = [Pattern.from_counts({(0, 0): 2}, "v0000", 0), Pattern.from_counts({(0, 0): 2}, "v0001", 1)]

    with pytest.raises(ValidationError):
        PatternSet(PatternMethod.PAD, patterns, 2, seed=1)


def test_pattern_set_document():

    program = program_from_slots("A B . C | D . E")
    noisy = nop_noise_patterns(program, 4, 0.3, seed=2, program_hash=program_hash(program))
    perm = permutation_patterns(5, seed=2)

    doc = pattern_set_to_dict(noisy)

    assert doc["method"] == "pad-noise"
    assert doc["program_hash"] == program_hash(program)
    assert set(doc["patterns"][0]) == {"label", "generation_index", "kind", "insertions"}
    assert pattern_set_from_dict(doc) == noisy
    assert pattern_set_from_dict(pattern_set_to_dict(perm)) == perm


def test_pattern_set_document_malformed():

    with pytest.raises(ValidationError):
        pattern_set_from_dict({"method": "pad", "patterns": []})
