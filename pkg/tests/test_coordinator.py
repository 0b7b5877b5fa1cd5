"""Tests for the sweep coordinator."""

from __future__ import annotations

import pytest

from acstab.coordinator import SweepCoordinator
from acstab.exceptions import DomainError


def test_results_follow_task_order():
    coordinator = SweepCoordinator(abs, "abs")
    assert coordinator.run([-3, 1, -2]) == [3, 1, 2]
    assert coordinator.run([]) == []


def test_failures_are_counted_and_raised():
    def fail_on_negative(value: float) -> float:
        if value < 0:
            raise DomainError("value", f"{value} < 0")
        return value

    coordinator = SweepCoordinator(fail_on_negative, "positive")
    with pytest.raises(DomainError):
        coordinator.run([1.0, -1.0, 2.0])
    assert coordinator.failures == 1


def test_workers_are_at_least_one():
    assert SweepCoordinator(abs, "abs", workers=0).workers == 1


@pytest.mark.slow
def test_process_pool_keeps_order():
    assert SweepCoordinator(abs, "abs", workers=2).run(list(range(-5, 5))) == [
        abs(value) for value in range(-5, 5)
    ]
