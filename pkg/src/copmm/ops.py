"""Arithmetic-operation counters used for cost accounting.

Counting is opt-in: code that performs bulk field arithmetic calls
:func:`tally`, which is a no-op unless some :func:`count_ops` block is active.
Counters nest; every active counter sees every tally.
"""

from __future__ import annotations

from contextlib import contextmanager
from contextvars import ContextVar


class OpCounter:
    """Number of scalar multiply-add operations observed."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def __repr__(self):
        return f"OpCounter({self.count})"


_ACTIVE: ContextVar[tuple] = ContextVar("copmm_op_counters", default=())


@contextmanager
def count_ops():
    counter = OpCounter()
    token = _ACTIVE.set(_ACTIVE.get() + (counter,))
    try:
        yield counter
    finally:
        _ACTIVE.reset(token)


def tally(n: int) -> None:
    for counter in _ACTIVE.get():
        counter.count += int(n)
