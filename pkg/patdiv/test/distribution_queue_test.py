import threading

import pytest

from patdiv.binary.program import Pattern
from patdiv.distribution.distribution_queue import (
    QueuePolicy,
    enqueue,
    extend_queue,
    load_queue,
    pop_next,
    queue_status,
    save_queue,
)
from patdiv.patterns.pattern_set import PatternMethod, PatternSet, pattern_label
from patdiv.utils.errors import QueueExhaustedError, QueueExtensionRequired, ValidationError


def _simple_set(population, prefix=""):
    patterns = [Pattern.from_counts({(0, 0): g}, pattern_label(g, prefix), g) for g in range(population)]
    return PatternSet(PatternMethod.BERNOULLI, patterns, population, seed=0)


def test_enqueue_single():

    queue = enqueue(_simple_set(1), seed=3)

    assert queue.remaining == ["v0000"]
    assert queue.dispensed == []


def test_enqueue_deterministic():

    assert enqueue(_simple_set(25), seed=5).remaining == enqueue(_simple_set(25), seed=5).remaining
    assert enqueue(_simple_set(25), seed=5).remaining != enqueue(_simple_set(25), seed=6).remaining


def test_enqueue_rejects_empty():

    with pytest.raises(ValidationError):
        enqueue(None, seed=1)


def test_strict_drain():

    pattern_set = _simple_set(25)
    queue = enqueue(pattern_set, seed=1)

    labels = [pop_next(queue) for _ in range(25)]

    assert sorted(labels) == sorted(pattern_set.labels)
    assert [label for label, _ in queue.dispensed] == labels
    with pytest.raises(QueueExhaustedError) as err:
        pop_next(queue)
    assert "reuse" in str(err.value) and "extend" in str(err.value)
    assert err.value.exit_code == 5


def test_reuse_wraps_to_recorded_order():

    queue = enqueue(_simple_set(7), seed=2, policy=QueuePolicy.REUSE)

    labels = [pop_next(queue) for _ in range(8)]

    assert labels[7] == labels[0]
    assert len(set(labels[:7])) == 7


def test_extend_signals_and_extends():

    queue = enqueue(_simple_set(3), seed=2, policy=QueuePolicy.EXTEND)
    for _ in range(3):
        pop_next(queue)

    with pytest.raises(QueueExtensionRequired):
        pop_next(queue)

    extend_queue(queue, _simple_set(3, prefix="x-"), seed=4)
    assert pop_next(queue).startswith("x-")
    assert queue_status(queue)["total"] == 6
    with pytest.raises(ValidationError):
        extend_queue(queue, _simple_set(2), seed=4)


def test_queue_round_trip(tmp_path):

    queue = enqueue(_simple_set(25), seed=8, policy=QueuePolicy.REUSE)
    for _ in range(10):
        pop_next(queue)
    path = tmp_path / "queue.json"

    save_queue(queue, str(path))
    loaded = load_queue(str(path))

    assert loaded == queue
    assert loaded.dispensed == queue.dispensed
    assert pop_next(loaded) == pop_next(queue)
    assert [p.name for p in tmp_path.iterdir()] == ["queue.json"]


def test_queue_status():

    queue = enqueue(_simple_set(4), seed=1)
    first = queue.remaining[0]

    status = queue_status(queue)

    assert status == {"policy": "strict", "remaining": 4, "dispensed": 0, "total": 4, "next": first}


def test_concurrent_pops():

    queue = enqueue(_simple_set(200), seed=1)
    popped = []

    def worker():
        for _ in range(50):
            popped.append(pop_next(queue))

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()

    assert len(popped) == 200
    assert len(set(popped)) == 200
