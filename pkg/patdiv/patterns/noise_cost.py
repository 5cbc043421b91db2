import itertools
import logging

from patdiv.binary.layout import ProgramArrays, expand
from patdiv.patterns.padding import _with_pad
from patdiv.utils.errors import ValidationError
from patdiv.utils.named_stage import named_stage

logger = logging.getLogger(__name__)


def _signature(arrays, counts):
    lay = expand(arrays, counts)
    return lay.kinds.tobytes(), lay.lens.tobytes(), lay.classes.tobytes()


@named_stage("noise_cost")
def noise_cost(program, budget):
    """Distinct variants constructible within a NOP budget, without and with noise.

    Pad-only variants are the unmodified build plus every uniform head pad that fits the budget.
    With noise, a placement of n >= 1 interior NOPs is fixed and only pads of at least one NOP
    can be added on top of it; the reported count is the best placement. Both counts include
    the unmodified build.
    """
    if budget < 0:
        raise ValidationError("NOP budget must be >= 0, got %d" % budget)
    arrays = ProgramArrays.from_program(program)
    F = program.num_functions
    padOnly = {_signature(arrays, _with_pad({}, F, k)) for k in range(0, budget // F + 1)}

    sites = [(f, i) for f, function in enumerate(program.functions) for i in range(1, len(function.body))]
    best = 1
    for n in range(1, budget - F + 1):
        for placement in itertools.combinations_with_replacement(sites, n):
            noise = {}
            for site in placement:
                noise[site] = noise.get(site, 0) + 1
            variants = {_signature(arrays, {})}
            variants.update(_signature(arrays, _with_pad(noise, F, k)) for k in range(1, (budget - n) // F + 1))
            best = max(best, len(variants))
    logger.info("noise cost at budget %d: %d pad-only vs %d pad+noise variants", budget, len(padOnly), best)
    return len(padOnly), best
