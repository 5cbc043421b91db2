import pytest

from patdiv.analysis.compare import compare
from patdiv.analysis.entropy import entropy
from patdiv.analysis.survivors import SurvivorReport
from patdiv.utils.errors import ProgramMismatchError, ValidationError


def _simple_reports(program_hash=None):
    inputs = {
        "pad": SurvivorReport.from_histogram(25, {2: 379, 3: 3}, 1000, program_hash),
        "pad-noise": SurvivorReport.from_histogram(25, {2: 296, 3: 5}, 1200, program_hash),
        "bernoulli-0.5": SurvivorReport.from_histogram(25, {2: 586, 3: 13, 4: 1}, 400, program_hash),
    }
    return [(label, report, entropy(report)) for label, report in inputs.items()]


def test_compare_orders_by_entropy():

    table = compare(_simple_reports())

    assert [row.label for row in table.rows] == ["pad-noise", "pad", "bernoulli-0.5"]
    entropies = [row.entropy_bits for row in table.rows]
    assert entropies == sorted(entropies, reverse=True)
    assert table.rows[0].raw == 311 and table.rows[0].aggregate == 301


def test_compare_tie_break_by_label():

    report = SurvivorReport.from_histogram(10, {2: 4}, 3)

    table = compare([("b", report, entropy(report)), ("a", report, entropy(report))])

    assert [row.label for row in table.rows] == ["a", "b"]
    first, second = table.rows
    assert (first.raw, first.aggregate, first.histogram, first.entropy_bits) == \
        (second.raw, second.aggregate, second.histogram, second.entropy_bits)


def test_compare_renderings(tmp_path):

    table = compare(_simple_reports())

    text = table.to_text()
    lines = text.splitlines()
    assert len(lines) == 4
    assert "Shannon Entropy" in lines[0]
    assert lines[1].lstrip().startswith("pad-noise")
    assert text == compare(_simple_reports()).to_text()

    records = table.to_records()
    assert records[0]["histogram"] == {"2": 296, "3": 5}
    assert set(records[0]) == {"label", "population", "raw", "aggregate", "histogram", "singleton_states", "entropy_bits"}

    table.to_csv(tmp_path / "comparison.csv")
    assert (tmp_path / "comparison.csv").read_text().splitlines()[0].startswith("Method,")


def test_compare_rejects_single_report():

    with pytest.raises(ValidationError):
        compare(_simple_reports()[:1])


def test_compare_rejects_mismatched_population():

    reports = _simple_reports()
    other = SurvivorReport.from_histogram(10, {2: 3})
    reports.append(("other", other, entropy(other)))

    with pytest.raises(ValidationError):
        compare(reports)


def test_compare_rejects_mismatched_program():

    reports = _simple_reports("aaa")[:2] + _simple_reports("bbb")[2:]

    with pytest.raises(ProgramMismatchError):
        compare(reports)


def test_compare_rejects_mixed_sled_windows():

    reports = []
    for label, window in (("w0", 0), ("w1", 1)):
        report = SurvivorReport.from_histogram(25, {2: 10}, 50, sled_window=window)
        reports.append((label, report, entropy(report)))

    with pytest.raises(ValidationError):
        compare(reports)


def test_compare_accepts_unrecorded_sled_window():

    reports = _simple_reports()
    scored = SurvivorReport.from_histogram(25, {2: 10}, 50, sled_window=0)
    reports.append(("scored", scored, entropy(scored)))

    assert len(compare(reports).rows) == 4
