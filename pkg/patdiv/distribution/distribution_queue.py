import enum
import logging
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from patdiv.utils.errors import QueueExhaustedError, QueueExtensionRequired, ValidationError
from patdiv.utils.export_json_utils import load_json, save_json

logger = logging.getLogger(__name__)

EXHAUSTION_HINT = "switch the queue to the reuse policy to hand out every variant again, or extend it with a complementary pattern set"


class QueuePolicy(enum.Enum):
    STRICT = "strict"
    REUSE = "reuse"
    EXTEND = "extend"


@dataclass(eq=False)
class DistributionQueue:
    """Shuffled pattern labels, each handed to one build.

    order is the full shuffled sequence the queue was created (and extended) with; remaining is
    the not yet dispensed tail of it. Pops are serialized by the queue lock.
    """

    remaining: list
    seed: int
    policy: QueuePolicy = QueuePolicy.STRICT
    dispensed: list = field(default_factory=list)
    order: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if len(set(self.remaining)) != len(self.remaining):
            raise ValidationError("queue holds duplicate labels")
        if not self.order:
            self.order = [label for label, _ in self.dispensed] + list(self.remaining)

    def __eq__(self, other):
        if not isinstance(other, DistributionQueue):
            return NotImplemented
        # dispense timestamps are informational
        return (self.remaining == other.remaining and self.seed == other.seed and self.policy == other.policy
                and [label for label, _ in self.dispensed] == [label for label, _ in other.dispensed]
                and self.order == other.order)

    @property
    def labels(self):
        return set(self.order)

    def pop_next(self):
        with self.lock:
            if not self.remaining:
                if self.policy is QueuePolicy.STRICT:
                    raise QueueExhaustedError("queue of %d patterns is exhausted under the strict policy; %s"
                                              % (len(self.order), EXHAUSTION_HINT))
                if self.policy is QueuePolicy.EXTEND:
                    raise QueueExtensionRequired("queue of %d patterns is exhausted; generate a complementary pattern "
                                                 "set with a new label prefix and extend the queue" % len(self.order))
                logger.info("queue exhausted, reusing the recorded order of %d labels", len(self.order))
                self.remaining = list(self.order)
            label = self.remaining.pop(0)
            self.dispensed.append((label, datetime.now(timezone.utc).isoformat()))
            return label


def _shuffled_labels(pattern_set, seed):
    labels = sorted(pattern_set.labels)
    return [labels[i] for i in np.random.default_rng(seed).permutation(len(labels))]


def enqueue(pattern_set, seed, policy=QueuePolicy.STRICT):
    if pattern_set is None or len(pattern_set.patterns) == 0:
        raise ValidationError("cannot enqueue an empty pattern set")
    policy = QueuePolicy(policy)
    remaining = _shuffled_labels(pattern_set, seed)
    logger.info("queued %d patterns (%s policy)", len(remaining), policy.value)
    return DistributionQueue(remaining, int(seed), policy, order=list(remaining))


def pop_next(queue):
    return queue.pop_next()


def extend_queue(queue, pattern_set, seed):
    """Append a seeded shuffle of a complementary pattern set to the queue."""
    added = _shuffled_labels(pattern_set, seed)
    with queue.lock:
        clash = queue.labels.intersection(added)
        if clash:
            raise ValidationError("complementary set reuses %d known labels, e.g. %s" % (len(clash), sorted(clash)[0]))
        queue.remaining.extend(added)
        queue.order.extend(added)
    logger.info("extended queue by %d patterns", len(added))
    return queue


def queue_status(queue):
    return {
        "policy": queue.policy.value,
        "remaining": len(queue.remaining),
        "dispensed": len(queue.dispensed),
        "total": len(queue.order),
        "next": queue.remaining[0] if queue.remaining else None,
    }


def queue_to_dict(queue):
    return {
        "seed": int(queue.seed),
        "policy": queue.policy.value,
        "remaining": list(queue.remaining),
        "dispensed": [{"label": label, "at": at} for label, at in queue.dispensed],
        "order": list(queue.order),
    }


def queue_from_dict(doc):
    try:
        return DistributionQueue(
            remaining=list(doc["remaining"]),
            seed=int(doc["seed"]),
            policy=QueuePolicy(doc["policy"]),
            dispensed=[(entry["label"], entry["at"]) for entry in doc.get("dispensed", [])],
            order=list(doc.get("order", [])),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ValidationError("malformed queue state: %s" % err) from err


def save_queue(queue, path):
    with queue.lock:
        doc = queue_to_dict(queue)
    save_json(doc, path)


def load_queue(path):
    return queue_from_dict(load_json(path))
