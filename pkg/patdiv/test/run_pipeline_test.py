import ujson as json
import pytest

from patdiv.binary.program import ProgramSpec, build_program, program_from_slots, program_hash
from patdiv.run_pipeline import main
from patdiv.utils.export_json_utils import load_pattern_set_from_json, load_program_from_json, save_program_to_json


def _gen_program(tmp_path, name="program.json", seed=42, functions=4, instrs=50):
    path = str(tmp_path / name)
    status = main(["gen-program", "--functions", str(functions), "--instrs", str(instrs), "--gadget-density", "0.1",
                   "--classes", "40", "--align", "16", "--seed", str(seed), "-o", path])
    assert status == 0
    return path


def _read(path):
    with open(path) as fp:
        return json.load(fp)


def test_gen_program(tmp_path):

    path = str(tmp_path / "prog.json")

    status = main(["gen-program", "--functions", "10", "--instrs", "200", "--gadget-density", "0.08", "--classes", "120",
                   "--align", "16", "--seed", "42", "-o", path])

    assert status == 0
    expected = build_program(ProgramSpec(functions=10, instructions_per_function=200, gadget_density=0.08, class_count=120,
                                         alignment=16, seed=42))
    assert load_program_from_json(path) == expected


@pytest.mark.parametrize("flags, flag_name", [
    (["--gadget-density", "1.5"], "--gadget-density"),
    (["--functions", "0"], "--functions"),
])
def test_gen_program_rejects(tmp_path, capsys, flags, flag_name):

    status = main(["gen-program", "--seed", "1", "-o", str(tmp_path / "p.json")] + flags)

    assert status == 2
    assert flag_name in capsys.readouterr().err


def test_gen_program_requires_seed(tmp_path):

    assert main(["gen-program", "-o", str(tmp_path / "p.json")]) == 2


def test_gen_patterns_pad_noise(tmp_path):

    program = _gen_program(tmp_path)
    out = str(tmp_path / "patterns.json")

    status = main(["gen-patterns", "--program", program, "--method", "pad-noise", "--population", "25",
                   "--noise-rate", "0.05", "--seed", "7", "-o", out])

    assert status == 0
    pattern_set = load_pattern_set_from_json(out)
    assert pattern_set.population == 25
    assert pattern_set.program_hash == program_hash(load_program_from_json(program))
    assert pattern_set.params["noise_rate"] == 0.05


def test_gen_patterns_perm_population(tmp_path):

    program = _gen_program(tmp_path, functions=7)

    assert main(["gen-patterns", "--program", program, "--method", "perm", "--population", "9", "--seed", "1",
                 "-o", str(tmp_path / "perm.json")]) == 2
    assert main(["gen-patterns", "--program", program, "--method", "perm", "--seed", "1",
                 "-o", str(tmp_path / "perm.json")]) == 0
    assert load_pattern_set_from_json(str(tmp_path / "perm.json")).population == 7


def test_gen_patterns_bernoulli_zero(tmp_path):

    program = _gen_program(tmp_path)
    out = str(tmp_path / "b.json")

    assert main(["gen-patterns", "--program", program, "--method", "bernoulli", "--population", "25", "--rate", "0",
                 "--seed", "3", "-o", out]) == 0
    pattern_set = load_pattern_set_from_json(out)
    assert len(pattern_set.patterns) == 25
    assert {pattern.insertions for pattern in pattern_set.patterns} == {()}


@pytest.mark.parametrize("method, flags", [
    ("pad", ["--rate", "0.5"]),
    ("bernoulli", ["--rate", "0.5", "--noise-rate", "0.1"]),
    ("perm", ["--base-pad", "4"]),
    ("pad-noise", []),
    ("bernoulli", []),
])
def test_gen_patterns_rejects_flags(tmp_path, method, flags):

    program = _gen_program(tmp_path)

    assert main(["gen-patterns", "--program", program, "--method", method, "--population", "5", "--seed", "1",
                 "-o", str(tmp_path / "x.json")] + flags) == 2


def test_gen_patterns_search_failure(tmp_path):

    path = str(tmp_path / "dense.json")
    save_program_to_json(program_from_slots("A A A A"), path)

    status = main(["gen-patterns", "--program", path, "--method", "pad", "--population", "3", "--seed", "1",
                   "--max-pad", "1", "-o", str(tmp_path / "x.json")])

    assert status == 3


def test_build_all_program_mismatch(tmp_path):

    program = _gen_program(tmp_path)
    other = _gen_program(tmp_path, name="other.json", seed=43)
    patterns = str(tmp_path / "patterns.json")
    assert main(["gen-patterns", "--program", program, "--method", "pad", "--population", "3", "--seed", "1",
                 "-o", patterns]) == 0

    assert main(["build-all", "--program", other, "--patterns", patterns, "-o", str(tmp_path / "build")]) == 4


def test_pipeline_pad_against_bernoulli(tmp_path):

    program = _gen_program(tmp_path)
    reports = []
    for method, flags in (("pad", []), ("bernoulli", ["--rate", "0.5"])):
        patterns = str(tmp_path / ("%s.json" % method))
        build = str(tmp_path / method)
        report = str(tmp_path / ("%s-report.json" % method))
        assert main(["gen-patterns", "--program", program, "--method", method, "--population", "25", "--seed", "5",
                     "-o", patterns] + flags) == 0
        assert main(["build-all", "--program", program, "--patterns", patterns, "--workers", "2", "-o", build]) == 0
        assert main(["analyze", "--variants", str(tmp_path / method / "variants.json"), "--program", program,
                     "--label", method, "-o", report]) == 0
        reports.append(report)

    pad = _read(reports[0])
    assert (pad["raw"], pad["aggregate"]) == (0, 0)
    assert (tmp_path / "pad" / "file_sizes.csv").exists()
    assert "community mean" in (tmp_path / "pad" / "file_sizes.txt").read_text()

    out = str(tmp_path / "comparison")
    assert main(["compare"] + reports + ["-o", out]) == 0
    rows = _read(out + ".json")
    assert [row["label"] for row in rows] == ["pad", "bernoulli"]
    assert rows[1]["raw"] > 0
    assert (tmp_path / "comparison.txt").read_text().splitlines()[1].lstrip().startswith("pad")


def test_analyze_program_mismatch(tmp_path):

    program = _gen_program(tmp_path)
    other = _gen_program(tmp_path, name="other.json", seed=43)
    patterns = str(tmp_path / "patterns.json")
    main(["gen-patterns", "--program", program, "--method", "pad", "--population", "3", "--seed", "1", "-o", patterns])
    main(["build-all", "--program", program, "--patterns", patterns, "-o", str(tmp_path / "build")])

    assert main(["analyze", "--variants", str(tmp_path / "build" / "variants.json"), "--program", other,
                 "-o", str(tmp_path / "r.json")]) == 4


def test_queue_commands(tmp_path, capsys):

    program = _gen_program(tmp_path)
    patterns = str(tmp_path / "patterns.json")
    state = str(tmp_path / "queue.json")
    main(["gen-patterns", "--program", program, "--method", "bernoulli", "--population", "3", "--rate", "0.1",
          "--seed", "1", "-o", patterns])
    assert main(["queue", "init", "--patterns", patterns, "--seed", "9", "--state", state]) == 0
    capsys.readouterr()

    assert main(["queue", "pop", "--state", state, "-n", "3"]) == 0
    popped = capsys.readouterr().out.split()
    assert sorted(popped) == ["v0000", "v0001", "v0002"]

    assert main(["queue", "pop", "--state", state]) == 5
    assert "reuse" in capsys.readouterr().err

    assert main(["queue", "status", "--state", state]) == 0
    status = json.loads(capsys.readouterr().out)
    assert (status["remaining"], status["dispensed"]) == (0, 3)

    extra = str(tmp_path / "extra.json")
    main(["gen-patterns", "--program", program, "--method", "bernoulli", "--population", "2", "--rate", "0.1",
          "--seed", "2", "--label-prefix", "x-", "-o", extra])
    assert main(["queue", "extend", "--state", state, "--patterns", extra, "--seed", "3"]) == 0
    capsys.readouterr()
    assert main(["queue", "pop", "--state", state]) == 0
    assert capsys.readouterr().out.startswith("x-")


def test_experiment(tmp_path):

    program = _gen_program(tmp_path)
    out = tmp_path / "experiment"

    status = main(["experiment", "--program", program, "--seed", "4", "--population", "6", "--rates", "0.5", "1.0",
                   "-o", str(out)])

    assert status == 0
    rows = _read(str(out / "comparison.json"))
    labels = [row["label"] for row in rows]
    assert set(labels) == {"pad", "pad-noise-0.05", "bernoulli-0.5", "bernoulli-1"}
    assert labels[-1] == "bernoulli-1"
    assert (out / "pad" / "report.json").exists()
    assert (out / "comparison.txt").exists()


def test_help(capsys):

    assert main(["gen-patterns", "--help"]) == 0
    assert "default" in capsys.readouterr().out


@pytest.mark.parametrize("field, value", [("kind", "bogus"), ("len", "wide")])
def test_gen_patterns_malformed_program(tmp_path, field, value):

    path = str(tmp_path / "bad.json")
    save_program_to_json(program_from_slots("A B | C D"), path)
    doc = _read(path)
    doc["functions"][0]["body"][0][field] = value
    with open(path, "w") as fp:
        json.dump(doc, fp)

    status = main(["gen-patterns", "--program", path, "--method", "pad", "--population", "3", "--seed", "1",
                   "-o", str(tmp_path / "x.json")])

    assert status == 2


@pytest.mark.parametrize("edit", [
    lambda doc: doc.update(method="shuffle"),
    lambda doc: doc["patterns"][0].update(kind="reorder"),
    lambda doc: doc.update(population="many"),
])
def test_build_all_malformed_patterns(tmp_path, edit):

    program = _gen_program(tmp_path)
    patterns = str(tmp_path / "patterns.json")
    assert main(["gen-patterns", "--program", program, "--method", "pad", "--population", "3", "--seed", "1",
                 "-o", patterns]) == 0
    doc = _read(patterns)
    edit(doc)
    with open(patterns, "w") as fp:
        json.dump(doc, fp)

    assert main(["build-all", "--program", program, "--patterns", patterns, "-o", str(tmp_path / "build")]) == 2


def test_compare_rejects_mixed_sled_windows(tmp_path):

    program = _gen_program(tmp_path)
    patterns = str(tmp_path / "patterns.json")
    assert main(["gen-patterns", "--program", program, "--method", "bernoulli", "--rate", "0.5", "--population", "4",
                 "--seed", "2", "-o", patterns]) == 0
    assert main(["build-all", "--program", program, "--patterns", patterns, "-o", str(tmp_path / "build")]) == 0
    variants = str(tmp_path / "build" / "variants.json")
    reports = []
    for window in ("0", "1"):
        report = str(tmp_path / ("w%s.json" % window))
        assert main(["analyze", "--variants", variants, "--program", program, "--sled-window", window,
                     "--label", "w" + window, "-o", report]) == 0
        reports.append(report)

    assert _read(reports[0])["sled_window"] == 0
    assert _read(reports[1])["sled_window"] == 1
    assert main(["compare"] + reports + ["-o", str(tmp_path / "comparison")]) == 2
