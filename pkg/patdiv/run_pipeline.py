import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass, field

import ujson as json

from patdiv.analysis.compare import compare
from patdiv.analysis.entropy import EntropyReport, entropy
from patdiv.analysis.survivors import survivors
from patdiv.binary.apply_pattern import apply_pattern, apply_patterns
from patdiv.binary.file_size import file_size_table
from patdiv.binary.program import DEFAULT_NOP_BYTE_LEN, Pattern, ProgramSpec, build_program, program_hash
from patdiv.binary.reachability import DEFAULT_SLED_WINDOW
from patdiv.distribution.distribution_queue import (
    QueuePolicy,
    enqueue,
    extend_queue,
    load_queue,
    pop_next,
    queue_status,
    save_queue,
)
from patdiv.patterns.bernoulli import bernoulli_patterns
from patdiv.patterns.padding import DEFAULT_MAX_PAD, nop_noise_patterns, nop_padding_patterns
from patdiv.patterns.pattern_set import PatternMethod
from patdiv.patterns.permutation import permutation_patterns
from patdiv.utils.errors import PatdivError, ProgramMismatchError, ValidationError
from patdiv.utils.export_json_utils import (
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

logger = logging.getLogger(__name__)

# the analysis window is 0 by default: with W >= 1 every random insertion also opens sled states
DEFAULT_ANALYSIS_SLED_WINDOW = 0
EXPERIMENT_RATES = [0.05, 0.25, 0.5, 0.75, 1.0]

# flags each method refuses, keyed by argparse dest
IRRELEVANT_FLAGS = {
    PatternMethod.PERM: ["noise_rate", "rate", "base_pad", "max_pad", "sled_window"],
    PatternMethod.PAD: ["noise_rate", "rate"],
    PatternMethod.PAD_NOISE: ["rate"],
    PatternMethod.BERNOULLI: ["noise_rate", "base_pad", "max_pad", "sled_window"],
}


class PipelineArgumentParser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as ValidationError instead of exiting."""

    def error(self, message):
        raise ValidationError("%s: %s" % (self.prog, message))


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1, got %d" % value)
    return value


def _non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0, got %d" % value)
    return value


def _unit_rate(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1], got %s" % text)
    return value


def _flag(dest):
    return "--" + dest.replace("_", "-")


def _check_program_hash(expected, found, what):
    if expected is not None and found is not None and expected != found:
        raise ProgramMismatchError("%s was generated for program %s..., not %s..." % (what, found[:12], expected[:12]))


@dataclass
class ExperimentConfig:
    program_path: str
    seed: int
    output_dir: str
    population: int = 25
    noise_rate: float = 0.05
    rates: list = field(default_factory=lambda: list(EXPERIMENT_RATES))
    base_pad: int = None
    max_pad: int = DEFAULT_MAX_PAD
    sled_window: int = DEFAULT_SLED_WINDOW
    score_window: int = DEFAULT_ANALYSIS_SLED_WINDOW
    workers: int = None

    def __post_init__(self):
        if not os.path.isfile(self.program_path):
            raise ValidationError("program file %s does not exist" % self.program_path)
        if self.population < 2:
            raise ValidationError("experiment population must be >= 2, got %d" % self.population)


def cmd_gen_program(args):
    spec = ProgramSpec(
        functions=args.functions,
        instructions_per_function=args.instrs,
        gadget_density=args.gadget_density,
        class_count=args.classes,
        duplicate_class_rate=args.dup_rate,
        alignment=args.align,
        seed=args.seed,
        nop_byte_len=args.nop_len,
        max_instruction_len=args.max_instr_len,
    )
    program = build_program(spec)
    save_program_to_json(program, args.output)
    print("program: %d functions, %d instructions, %d gadgets, hash %s -> %s"
          % (program.num_functions, program.num_instructions, program.gadget_count, program_hash(program), args.output))
    return 0


def _generate(program, method, population, seed, noise_rate=None, rate=None, base_pad=None, max_pad=DEFAULT_MAX_PAD,
              sled_window=DEFAULT_SLED_WINDOW, label_prefix=""):
    phash = program_hash(program)
    if method is PatternMethod.PERM:
        if population is not None and population != program.num_functions:
            raise ValidationError("permutation population is fixed at F=%d, got --population %d"
                                  % (program.num_functions, population))
        return permutation_patterns(program.num_functions, seed, label_prefix, phash)
    if population is None:
        raise ValidationError("--population is required for --method %s" % method.value)
    if method is PatternMethod.PAD:
        return nop_padding_patterns(program, population, seed, base_pad, max_pad, sled_window, label_prefix, phash)
    if method is PatternMethod.PAD_NOISE:
        if noise_rate is None:
            raise ValidationError("--noise-rate is required for --method pad-noise")
        return nop_noise_patterns(program, population, noise_rate, seed, base_pad, max_pad, sled_window, label_prefix, phash)
    if rate is None:
        raise ValidationError("--rate is required for --method bernoulli")
    return bernoulli_patterns(program, population, rate, seed, label_prefix, phash)


def cmd_gen_patterns(args):
    method = PatternMethod(args.method)
    refused = [_flag(dest) for dest in IRRELEVANT_FLAGS[method] if getattr(args, dest) is not None]
    if refused:
        raise ValidationError("%s does not apply to --method %s" % (", ".join(refused), method.value))
    program = load_program_from_json(args.program)
    pattern_set = _generate(
        program, method, args.population, args.seed,
        noise_rate=args.noise_rate,
        rate=args.rate,
        base_pad=args.base_pad,
        max_pad=DEFAULT_MAX_PAD if args.max_pad is None else args.max_pad,
        sled_window=DEFAULT_SLED_WINDOW if args.sled_window is None else args.sled_window,
        label_prefix=args.label_prefix,
    )
    save_pattern_set_to_json(pattern_set, args.output)
    print("%d %s patterns -> %s" % (pattern_set.population, method.value, args.output))
    return 0


def _build(program, pattern_set, workers, output_dir):
    phash = program_hash(program)
    _check_program_hash(phash, pattern_set.program_hash, "pattern set")
    startTime = time.time()
    variants = apply_patterns(program, pattern_set.in_generation_order(), workers)
    baseline = apply_pattern(program, Pattern.from_counts({}, "baseline"))
    logger.info("built %d variants in %.1f sec", len(variants), time.time() - startTime)

    os.makedirs(output_dir, exist_ok=True)
    save_variants_to_json(variants, os.path.join(output_dir, "variants.json"), phash)
    table = file_size_table(variants, baseline)
    table.to_csv(os.path.join(output_dir, "file_sizes.csv"), index=False)
    with open(os.path.join(output_dir, "file_sizes.txt"), "w") as fp:
        fp.write(table.to_string(index=False, float_format=lambda x: "%.3f" % x) + "\n")
    return variants, table


def cmd_build_all(args):
    program = load_program_from_json(args.program)
    pattern_set = load_pattern_set_from_json(args.patterns)
    variants, _ = _build(program, pattern_set, args.workers, args.output)
    print("%d variants -> %s" % (len(variants), args.output))
    return 0


def _analyze(variants, phash, sled_window, workers):
    report = survivors(variants, sled_window, workers, phash)
    return report, entropy(report)


def cmd_analyze(args):
    variants, phash = load_variants_from_json(args.variants)
    if args.program is not None:
        _check_program_hash(program_hash(load_program_from_json(args.program)), phash, "variants file")
    report, ent = _analyze(variants, phash, args.sled_window, args.workers)
    label = args.label or os.path.splitext(os.path.basename(args.variants))[0]
    save_report_to_json(report, ent, args.output, label)
    print("%s: raw %d, aggregate %d, entropy %.3f bits -> %s" % (label, report.raw_count, report.aggregate_count,
                                                                 ent.shannon_bits, args.output))
    return 0


def _write_comparison(table, output_prefix):
    save_json(table.to_records(), output_prefix + ".json")
    table.to_csv(output_prefix + ".csv")
    text = table.to_text()
    with open(output_prefix + ".txt", "w") as fp:
        fp.write(text + "\n")
    return text


def cmd_compare(args):
    reports = []
    for path in args.reports:
        label, report, bits = load_report_from_json(path)
        label = label or os.path.splitext(os.path.basename(path))[0]
        reports.append((label, report, entropy(report) if bits is None else EntropyReport(float(bits))))
    print(_write_comparison(compare(reports), args.output))
    return 0


def cmd_queue_init(args):
    queue = enqueue(load_pattern_set_from_json(args.patterns), args.seed, QueuePolicy(args.policy))
    save_queue(queue, args.state)
    print(json.dumps(queue_status(queue)))
    return 0


def cmd_queue_pop(args):
    queue = load_queue(args.state)
    try:
        for _ in range(args.count):
            print(pop_next(queue))
    finally:
        save_queue(queue, args.state)
    return 0


def cmd_queue_status(args):
    print(json.dumps(queue_status(load_queue(args.state))))
    return 0


def cmd_queue_extend(args):
    queue = extend_queue(load_queue(args.state), load_pattern_set_from_json(args.patterns), args.seed)
    save_queue(queue, args.state)
    print(json.dumps(queue_status(queue)))
    return 0


def run_experiment(config):
    """Generate, build and score pad, pad-noise and bernoulli communities on one program."""
    program = load_program_from_json(config.program_path)
    runs = [("pad", PatternMethod.PAD, {}),
            ("pad-noise-%g" % config.noise_rate, PatternMethod.PAD_NOISE, {"noise_rate": config.noise_rate})]
    runs += [("bernoulli-%g" % rate, PatternMethod.BERNOULLI, {"rate": rate}) for rate in config.rates]

    reports = []
    for label, method, params in runs:
        startTime = time.time()
        runDir = os.path.join(config.output_dir, label)
        pattern_set = _generate(program, method, config.population, config.seed, base_pad=config.base_pad,
                                max_pad=config.max_pad, sled_window=config.sled_window, **params)
        save_pattern_set_to_json(pattern_set, os.path.join(runDir, "patterns.json"))
        variants, _ = _build(program, pattern_set, config.workers, runDir)
        report, ent = _analyze(variants, pattern_set.program_hash, config.score_window, config.workers)
        save_report_to_json(report, ent, os.path.join(runDir, "report.json"), label)
        reports.append((label, report, ent))
        logger.info("%s: raw %d, aggregate %d, entropy %.3f bits (%.1f sec)", label, report.raw_count,
                    report.aggregate_count, ent.shannon_bits, time.time() - startTime)
    return compare(reports)


def cmd_experiment(args):
    config = ExperimentConfig(
        program_path=args.program,
        seed=args.seed,
        output_dir=args.output,
        population=args.population,
        noise_rate=args.noise_rate,
        rates=args.rates,
        base_pad=args.base_pad,
        max_pad=args.max_pad,
        sled_window=args.sled_window,
        score_window=args.score_window,
        workers=args.workers,
    )
    table = run_experiment(config)
    print(_write_comparison(table, os.path.join(config.output_dir, "comparison")))
    return 0


def build_parser():
    formatter = argparse.ArgumentDefaultsHelpFormatter
    argParser = PipelineArgumentParser(prog="patdiv", description="Pattern-based software diversification workbench",
                                       formatter_class=formatter)
    argParser.add_argument("-v", "--verbose", action="count", default=0,
                           help="print information messages (-v) and stage timings (-vv)")
    commands = argParser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("gen-program", help="generate a synthetic program", formatter_class=formatter)
    p.add_argument("--functions", type=_positive_int, default=10, help="number of functions")
    p.add_argument("--instrs", type=_positive_int, default=200, help="instructions per function")
    p.add_argument("--gadget-density", type=_unit_rate, default=0.08, help="probability that an instruction starts a gadget")
    p.add_argument("--classes", type=_positive_int, default=120, help="number of gadget classes")
    p.add_argument("--dup-rate", type=_unit_rate, default=0.1, help="probability that a gadget reuses an assigned class")
    p.add_argument("--align", type=_non_negative_int, default=0, help="function alignment in bytes, 0 disables alignment")
    p.add_argument("--nop-len", type=_positive_int, default=DEFAULT_NOP_BYTE_LEN, help="bytes per NOP")
    p.add_argument("--max-instr-len", type=_positive_int, default=1, help="maximum instruction length in bytes")
    p.add_argument("--seed", type=int, required=True, help="random number generator seed")
    p.add_argument("-o", "--output", type=str, default="program.json", help="output program file")
    p.set_defaults(handler=cmd_gen_program)

    p = commands.add_parser("gen-patterns", help="generate a pattern set for a program", formatter_class=formatter)
    p.add_argument("--program", type=str, required=True, help="program file")
    p.add_argument("--method", type=str, required=True, choices=[m.value for m in PatternMethod], help="generation method")
    p.add_argument("--population", type=_positive_int, default=None, help="number of patterns, fixed at F for perm")
    p.add_argument("--seed", type=int, required=True, help="random number generator seed")
    p.add_argument("--noise-rate", type=_unit_rate, default=None, help="pad-noise: per-instruction noise NOP probability")
    p.add_argument("--rate", type=_unit_rate, default=None, help="bernoulli: per-instruction NOP probability")
    p.add_argument("--base-pad", type=_positive_int, default=None,
                   help="pad, pad-noise: pad increment, defaults to the identified minimum base pad")
    p.add_argument("--max-pad", type=_positive_int, default=None,
                   help="pad, pad-noise: largest pad tried, %d if unset" % DEFAULT_MAX_PAD)
    p.add_argument("--sled-window", type=_non_negative_int, default=None,
                   help="pad, pad-noise: NOP sled window used by the blacklist, %d if unset" % DEFAULT_SLED_WINDOW)
    p.add_argument("--label-prefix", type=str, default="", help="prefix of pattern labels")
    p.add_argument("-o", "--output", type=str, default="patterns.json", help="output pattern file")
    p.set_defaults(handler=cmd_gen_patterns)

    p = commands.add_parser("build-all", help="apply every pattern of a set", formatter_class=formatter)
    p.add_argument("--program", type=str, required=True, help="program file")
    p.add_argument("--patterns", type=str, required=True, help="pattern file")
    p.add_argument("--workers", type=_positive_int, default=None, help="number of worker threads")
    p.add_argument("-o", "--output", type=str, default="build", help="output directory")
    p.set_defaults(handler=cmd_build_all)

    p = commands.add_parser("analyze", help="survivor and entropy analysis of a variant community", formatter_class=formatter)
    p.add_argument("--variants", type=str, required=True, help="variants file written by build-all")
    p.add_argument("--program", type=str, default=None, help="program file to check the variants against")
    p.add_argument("--label", type=str, default=None, help="method label stored in the report")
    p.add_argument("--sled-window", type=_non_negative_int, default=DEFAULT_ANALYSIS_SLED_WINDOW,
                   help="NOP sled window used when scanning variants")
    p.add_argument("--workers", type=_positive_int, default=None, help="number of worker threads")
    p.add_argument("-o", "--output", type=str, default="report.json", help="output report file")
    p.set_defaults(handler=cmd_analyze)

    p = commands.add_parser("compare", help="compare labelled reports", formatter_class=formatter)
    p.add_argument("reports", type=str, nargs="+", help="report files written by analyze")
    p.add_argument("-o", "--output", type=str, default="comparison", help="output prefix for .json, .csv and .txt")
    p.set_defaults(handler=cmd_compare)

    p = commands.add_parser("queue", help="distribution queue management", formatter_class=formatter)
    queueCommands = p.add_subparsers(dest="queue_command", required=True)
    q = queueCommands.add_parser("init", help="shuffle a pattern set into a new queue", formatter_class=formatter)
    q.add_argument("--patterns", type=str, required=True, help="pattern file")
    q.add_argument("--seed", type=int, required=True, help="shuffle seed")
    q.add_argument("--policy", type=str, default=QueuePolicy.STRICT.value, choices=[m.value for m in QueuePolicy],
                   help="behaviour once every pattern was dispensed")
    q.add_argument("--state", type=str, default="queue.json", help="queue state file")
    q.set_defaults(handler=cmd_queue_init)
    q = queueCommands.add_parser("pop", help="dispense the next pattern label", formatter_class=formatter)
    q.add_argument("--state", type=str, default="queue.json", help="queue state file")
    q.add_argument("-n", "--count", type=_positive_int, default=1, help="number of labels to dispense")
    q.set_defaults(handler=cmd_queue_pop)
    q = queueCommands.add_parser("status", help="print the queue state", formatter_class=formatter)
    q.add_argument("--state", type=str, default="queue.json", help="queue state file")
    q.set_defaults(handler=cmd_queue_status)
    q = queueCommands.add_parser("extend", help="append a complementary pattern set", formatter_class=formatter)
    q.add_argument("--state", type=str, default="queue.json", help="queue state file")
    q.add_argument("--patterns", type=str, required=True, help="complementary pattern file with new labels")
    q.add_argument("--seed", type=int, required=True, help="shuffle seed")
    q.set_defaults(handler=cmd_queue_extend)

    p = commands.add_parser("experiment", help="full method comparison on one program", formatter_class=formatter)
    p.add_argument("--program", type=str, required=True, help="program file")
    p.add_argument("--seed", type=int, required=True, help="pattern generation seed")
    p.add_argument("--population", type=_positive_int, default=25, help="community size")
    p.add_argument("--noise-rate", type=_unit_rate, default=0.05, help="pad-noise noise rate")
    p.add_argument("--rates", type=_unit_rate, nargs="+", default=EXPERIMENT_RATES, help="bernoulli rates")
    p.add_argument("--base-pad", type=_positive_int, default=None, help="pad increment, identified if unset")
    p.add_argument("--max-pad", type=_positive_int, default=DEFAULT_MAX_PAD, help="largest pad tried")
    p.add_argument("--sled-window", type=_non_negative_int, default=DEFAULT_SLED_WINDOW,
                   help="NOP sled window used during generation")
    p.add_argument("--score-window", type=_non_negative_int, default=DEFAULT_ANALYSIS_SLED_WINDOW,
                   help="NOP sled window used during analysis")
    p.add_argument("--workers", type=_positive_int, default=None, help="number of worker threads")
    p.add_argument("-o", "--output", type=str, default="experiment", help="output directory")
    p.set_defaults(handler=cmd_experiment)
    return argParser


def _configure_logging(verbose):
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")
    logging.getLogger("patdiv").setLevel(level)


def main(argv=None):
    argParser = build_parser()
    try:
        args = argParser.parse_args(argv)
        _configure_logging(args.verbose)
        logger.info("args=%s", args)
        logger.info("working directory %s", os.getcwd())
        startTime = time.time()
        status = args.handler(args)
        logger.info("%s done in %.1f sec", args.command, time.time() - startTime)
        return status
    except PatdivError as err:
        print("error: %s" % err, file=sys.stderr)
        return err.exit_code
    except SystemExit as err:
        # --help
        return err.code if isinstance(err.code, int) else 0


if __name__ == "__main__":
    sys.exit(main())
