import time

from src.utils.workers import WORKERS_ENV, default_workers, parallel_map


def test_default_workers(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert default_workers() == 1
    monkeypatch.setenv(WORKERS_ENV, "4")
    assert default_workers() == 4
    monkeypatch.setenv(WORKERS_ENV, "0")
    assert default_workers() == 1
    monkeypatch.setenv(WORKERS_ENV, "many")
    assert default_workers() == 1


def test_parallel_map_keeps_order():
    def slow_square(x):
        time.sleep(0.001 * (10 - x))
        return x * x

    assert parallel_map(slow_square, range(10), workers=4) == [x * x for x in range(10)]
    assert parallel_map(slow_square, range(10), workers=1) == [x * x for x in range(10)]
    assert parallel_map(slow_square, [], workers=4) == []
