"""Manycore machine description and hardware-thread occupancy bookkeeping.

Cores are interchangeable (the modeled part has no NUMA effects), so
placement tie-breaks are lowest-index-first for determinism.  A core may
host up to ``max_corun_per_core`` operation slots; the default is 2 because
the co-run interference number this model is calibrated against was measured
with two-way sharing, even though each core exposes 4 hardware threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ConfigError, ConsistencyError


@dataclass(frozen=True)
class MachineModel:
    physical_cores: int = 68
    hw_threads_per_core: int = 4
    max_corun_per_core: int = 2

    def __post_init__(self):
        if self.physical_cores < 1:
            raise ValueError(f"physical_cores must be >= 1, got {self.physical_cores}")
        if self.hw_threads_per_core < 1:
            raise ValueError(
                f"hw_threads_per_core must be >= 1, got {self.hw_threads_per_core}"
            )
        if not (1 <= self.max_corun_per_core <= self.hw_threads_per_core):
            raise ValueError(
                "max_corun_per_core must be in [1, hw_threads_per_core], got "
                f"{self.max_corun_per_core}"
            )

    @property
    def total_hw_threads(self) -> int:
        return self.physical_cores * self.hw_threads_per_core

    def to_dict(self) -> dict:
        return {
            "physical_cores": self.physical_cores,
            "hw_threads_per_core": self.hw_threads_per_core,
            "max_corun_per_core": self.max_corun_per_core,
        }


def parse_machine(text: str) -> MachineModel:
    try:
        doc = json.loads(text)
        return MachineModel(**doc)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad machine config: {exc}") from None


@dataclass(frozen=True)
class Allocation:
    """A granted placement: ``width`` cores, one op slot on each.

    ``shared`` is True iff at least one granted core already hosted another
    op at grant time (the op landed on hyper-thread slots).
    """

    op_id: str
    width: int
    cores: frozenset[int]
    shared: bool


class AllocationState:
    """Live occupancy of one machine during a simulation.

    Mutated only by the single-threaded simulator loop.  ``allocate`` is
    all-or-nothing: when the request cannot be fully placed it returns None
    and leaves the state untouched (the caller re-queues the op).
    """

    def __init__(self, machine: MachineModel):
        self.machine = machine
        self.occupancy = [0] * machine.physical_cores
        self.live: dict[str, Allocation] = {}

    def allocate(self, op_id: str, width: int, allow_ht: bool) -> Allocation | None:
        if width < 1:
            raise ValueError(f"width must be >= 1, got {width}")
        if op_id in self.live:
            raise ConsistencyError(f"op {op_id!r} is already allocated")
        empty = [i for i, occ in enumerate(self.occupancy) if occ == 0]
        chosen = empty[:width]
        if len(chosen) < width:
            if not allow_ht:
                return None
            cap = self.machine.max_corun_per_core
            sharable = [
                i for i, occ in enumerate(self.occupancy) if 0 < occ < cap
            ]
            chosen += sharable[: width - len(chosen)]
            if len(chosen) < width:
                return None
        shared = any(self.occupancy[i] > 0 for i in chosen)
        for i in chosen:
            self.occupancy[i] += 1
        alloc = Allocation(op_id, width, frozenset(chosen), shared)
        self.live[op_id] = alloc
        return alloc

    def release(self, op_id: str) -> None:
        alloc = self.live.pop(op_id, None)
        if alloc is None:
            raise ConsistencyError(f"release of unknown op {op_id!r}")
        for i in alloc.cores:
            self.occupancy[i] -= 1

    def free_capacity(self, allow_ht: bool) -> tuple[int, int]:
        """(empty core count, spare hyper-thread slots on occupied cores)."""
        cap = self.machine.max_corun_per_core
        empty = sum(1 for occ in self.occupancy if occ == 0)
        shareable = (
            sum(max(0, cap - occ) for occ in self.occupancy if occ > 0)
            if allow_ht
            else 0
        )
        return empty, shareable

    def empty_cores(self) -> int:
        return sum(1 for occ in self.occupancy if occ == 0)

    def placeable_width(self, allow_ht: bool) -> int:
        """Largest width a single new op could be granted right now.

        Differs from free_capacity in that one op can take at most one slot
        per core, so multiple spare slots on a core count once.
        """
        cap = self.machine.max_corun_per_core
        if allow_ht:
            return sum(1 for occ in self.occupancy if occ < cap)
        return self.empty_cores()

    def check_consistent(self) -> None:
        cap = self.machine.max_corun_per_core
        recount = [0] * self.machine.physical_cores
        for alloc in self.live.values():
            if len(alloc.cores) != alloc.width:
                raise ConsistencyError(f"allocation {alloc.op_id!r} width/core mismatch")
            for i in alloc.cores:
                recount[i] += 1
        if recount != self.occupancy:
            raise ConsistencyError("occupancy does not match live allocations")
        if any(occ > cap for occ in self.occupancy):
            raise ConsistencyError("a core exceeds max_corun_per_core")
