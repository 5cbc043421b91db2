import logging

import numpy as np

from patdiv.binary.layout import ProgramArrays, expand
from patdiv.binary.program import Pattern
from patdiv.binary.reachability import DEFAULT_SLED_WINDOW, gadget_reach, scan_layout
from patdiv.patterns.pattern_set import Blacklist, NoiseConfig, PatternMethod, PatternSet, pattern_label
from patdiv.utils.errors import PatternGenerationError, ValidationError
from patdiv.utils.named_stage import named_stage

logger = logging.getLogger(__name__)

DEFAULT_MAX_PAD = 4096


def _with_pad(counts, num_functions, k):
    padded = dict(counts)
    for f in range(num_functions):
        padded[(f, 0)] = padded.get((f, 0), 0) + k
    return padded


def _search_pad(arrays, counts, blacklist, start, max_pad, sled_window):
    for k in range(start, max_pad + 1):
        rmap = scan_layout(expand(arrays, _with_pad(counts, arrays.num_functions, k)), sled_window)
        if not blacklist.intersects(rmap):
            return k
    raise PatternGenerationError("no pad between %d and %d NOPs clears the blacklist" % (start, max_pad))


def _repair(arrays, counts, blacklist, max_repairs, sled_window):
    """Push gadgets off blacklisted states by one NOP at a time, lowest offset first."""
    counts = dict(counts)
    for _ in range(max_repairs + 1):
        lay = expand(arrays, counts)
        gIdx, classes, lo, hi = gadget_reach(lay, sled_window)
        hit = None
        for g, cls, a, b in zip(gIdx.tolist(), classes.tolist(), lo.tolist(), hi.tolist()):
            if any((cls, off) in blacklist for off in range(a, b + 1)):
                hit = g
                break
        if hit is None:
            return counts, scan_layout(lay, sled_window)
        key = (int(lay.src_function[hit]), int(lay.src_index[hit]))
        counts[key] = counts.get(key, 0) + 1
    raise PatternGenerationError("blacklisted gadgets remain after %d repair NOPs" % max_repairs)


@named_stage("minimum_pad")
def minimum_pad(program, prior_blacklist, start=1, max_pad=DEFAULT_MAX_PAD, sled_window=DEFAULT_SLED_WINDOW):
    """Smallest per-function head pad k >= start whose variant avoids every blacklisted state."""
    if program.gadget_count == 0:
        raise ValidationError("minimum pad is undefined for a program without gadgets")
    if not isinstance(prior_blacklist, Blacklist):
        prior_blacklist = Blacklist.from_map(prior_blacklist)
    return _search_pad(ProgramArrays.from_program(program), {}, prior_blacklist, start, max_pad, sled_window)


def _padding_community(program, population, seed, noise, base_pad, max_pad, sled_window, label_prefix):
    if population < 1:
        raise ValidationError("population must be >= 1, got %d" % population)
    if base_pad is not None and base_pad < 1:
        raise ValidationError("base pad must be >= 1, got %d" % base_pad)
    arrays = ProgramArrays.from_program(program)
    F = program.num_functions
    shuffleSeq, noiseSeq = np.random.SeedSequence(seed).spawn(2)
    noiseRng = np.random.default_rng(noiseSeq)
    interiorSites = [(f, i) for f, function in enumerate(program.functions) for i in range(1, len(function.body))]

    counts = {}
    blacklist = Blacklist.from_map(scan_layout(expand(arrays), sled_window))
    identified = minimum_pad(program, blacklist, 1, max_pad, sled_window) if program.gadget_count else None
    increment = base_pad if base_pad is not None else (identified or 1)
    logger.info("minimum base pad %s, pad increment %d", identified, increment)

    generated = [Pattern.from_counts(counts, pattern_label(0, label_prefix), 0)]
    for g in range(1, population):
        k = _search_pad(arrays, counts, blacklist, increment, max_pad, sled_window)
        counts = _with_pad(counts, F, k)
        if noise is not None and noise.rate > 0:
            for j in np.flatnonzero(noiseRng.random(len(interiorSites)) < noise.rate):
                counts[interiorSites[j]] = counts.get(interiorSites[j], 0) + 1
            counts, rmap = _repair(arrays, counts, blacklist, max_pad, sled_window)
        else:
            rmap = scan_layout(expand(arrays, counts), sled_window)
        blacklist.add(rmap)
        generated.append(Pattern.from_counts(counts, pattern_label(g, label_prefix), g))
        logger.debug("pattern %d: pad grew by %d, %d NOPs, blacklist %d states", g, k, generated[-1].total_nops, len(blacklist))

    order = np.random.default_rng(shuffleSeq).permutation(population)
    params = {"base_pad": identified, "increment": increment}
    return tuple(generated[i] for i in order), params


@named_stage("nop_padding_patterns")
def nop_padding_patterns(program, population, seed, base_pad=None, max_pad=DEFAULT_MAX_PAD,
                         sled_window=DEFAULT_SLED_WINDOW, label_prefix="", program_hash=None):
    """Iterative NOP padding community.

    Pattern 0 is the unmodified build. Each next pattern copies the previous one and grows the
    head pad of every function by the smallest k >= increment that keeps the new variant clear of
    every state reachable in an earlier variant, so the community has pairwise disjoint gadget
    states. The increment is the minimum base pad of the unmodified build unless base_pad is given.
    """
    patterns, params = _padding_community(program, population, seed, None, base_pad, max_pad, sled_window, label_prefix)
    return PatternSet(PatternMethod.PAD, patterns, population, seed, params=params, program_hash=program_hash)


@named_stage("nop_noise_patterns")
def nop_noise_patterns(program, population, noise, seed, base_pad=None, max_pad=DEFAULT_MAX_PAD,
                       sled_window=DEFAULT_SLED_WINDOW, label_prefix="", program_hash=None):
    """NOP padding plus preserved interior noise.

    After the pad grows, every interior instruction gets a noise NOP with probability
    noise.rate. Noise from earlier patterns is kept at its site. Any gadget then reachable from
    a blacklisted state gets one more NOP in front of it until none is left.
    """
    if not isinstance(noise, NoiseConfig):
        noise = NoiseConfig(float(noise))
    patterns, params = _padding_community(program, population, seed, noise, base_pad, max_pad, sled_window, label_prefix)
    params["noise_rate"] = noise.rate
    return PatternSet(PatternMethod.PAD_NOISE, patterns, population, seed, params=params, program_hash=program_hash)
