import pytest

from patdiv.analysis.entropy import entropy
from patdiv.analysis.survivors import SurvivorReport
from patdiv.binary.apply_pattern import apply_patterns
from patdiv.binary.program import program_from_slots, program_hash
from patdiv.patterns.permutation import permutation_patterns
from patdiv.utils.errors import ValidationError
from patdiv.utils.export_json_utils import (
    load_json,
    load_pattern_set_from_json,
    load_program_from_json,
    load_report_from_json,
    load_variants_from_json,
    save_json,
    save_pattern_set_to_json,
    save_program_to_json,
    save_report_to_json,
    save_variants_to_json,
)


def test_program_and_patterns_files(tmp_path):

    program = program_from_slots("A B | C . | D", alignment=4)
    pattern_set = permutation_patterns(3, seed=1, program_hash=program_hash(program))

    save_program_to_json(program, str(tmp_path / "program.json"))
    save_pattern_set_to_json(pattern_set, str(tmp_path / "patterns.json"))

    assert load_program_from_json(str(tmp_path / "program.json")) == program
    assert load_pattern_set_from_json(str(tmp_path / "patterns.json")) == pattern_set


def test_variants_file(tmp_path):

    program = program_from_slots("A B | C . | D", alignment=4)
    variants = apply_patterns(program, permutation_patterns(3, seed=1).patterns)

    save_variants_to_json(variants, str(tmp_path / "variants.json"), program_hash(program))
    loaded, phash = load_variants_from_json(str(tmp_path / "variants.json"))

    assert loaded == variants
    assert phash == program_hash(program)


def test_report_file(tmp_path):

    report = SurvivorReport.from_histogram(25, {2: 296, 3: 5}, 12)

    save_report_to_json(report, entropy(report), str(tmp_path / "report.json"), label="pad-noise")
    label, loaded, bits = load_report_from_json(str(tmp_path / "report.json"))

    assert label == "pad-noise"
    assert (loaded.raw_count, loaded.aggregate_count, loaded.singleton_states) == (311, 301, 12)
    assert bits == pytest.approx(entropy(report).shannon_bits)


def test_save_json_creates_directories(tmp_path):

    path = tmp_path / "a" / "b" / "doc.json"

    save_json({"x": [1, 2]}, str(path))

    assert load_json(str(path)) == {"x": [1, 2]}
    assert [p.name for p in path.parent.iterdir()] == ["doc.json"]


def test_load_json_errors(tmp_path):

    (tmp_path / "bad.json").write_text("{not json")

    with pytest.raises(ValidationError):
        load_json(str(tmp_path / "missing.json"))
    with pytest.raises(ValidationError):
        load_json(str(tmp_path / "bad.json"))
