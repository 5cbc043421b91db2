from dataclasses import dataclass

import numpy as np

from patdiv.binary.layout import KIND_GADGET, KIND_NOP, layout
from patdiv.utils.named_stage import named_stage

DEFAULT_SLED_WINDOW = 1


@dataclass(frozen=True)
class ReachabilityMap:
    """Gadget class -> frozenset of absolute byte offsets from which the class is reachable."""

    entries: dict

    def states(self):
        return {(cls, off) for cls, offsets in self.entries.items() for off in offsets}

    def __len__(self):
        return sum(len(offsets) for offsets in self.entries.values())

    def __getitem__(self, gadget_class):
        return self.entries.get(gadget_class, frozenset())

    def __eq__(self, other):
        if not isinstance(other, ReachabilityMap):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(frozenset(self.entries.items()))


def gadget_reach(lay, sled_window=DEFAULT_SLED_WINDOW):
    """Reach interval of every gadget start in a layout.

    Returns stream indices, classes, and the first / last reachable byte offsets. A gadget is
    always reachable at its own offset; a run of L NOPs right in front of it extends the reach
    to every byte of the run when 1 <= L <= sled_window.
    """
    idx = np.arange(len(lay.kinds))
    lastNonNop = np.maximum.accumulate(np.where(lay.kinds != KIND_NOP, idx, -1))
    prevNonNop = np.concatenate([[-1], lastNonNop[:-1]])
    gIdx = np.flatnonzero(lay.kinds == KIND_GADGET)
    run = gIdx - prevNonNop[gIdx] - 1
    hi = lay.offsets[gIdx]
    sled = (run >= 1) & (run <= sled_window)
    lo = np.where(sled, lay.offsets[prevNonNop[gIdx] + 1], hi)
    return gIdx, lay.classes[gIdx], lo, hi


def scan_layout(lay, sled_window=DEFAULT_SLED_WINDOW):
    gIdx, classes, lo, hi = gadget_reach(lay, sled_window)
    entries = {}
    for cls, a, b in zip(classes.tolist(), lo.tolist(), hi.tolist()):
        entries.setdefault(cls, set()).update(range(a, b + 1))
    return ReachabilityMap({cls: frozenset(offsets) for cls, offsets in entries.items()})


@named_stage("scan_reachability")
def scan_reachability(variant, sled_window=DEFAULT_SLED_WINDOW):
    return scan_layout(layout(variant.program), sled_window)
