from typing import List, Optional, Tuple

import numpy as np

from periplan.common import SpectrumError

DEFAULT_SLOT_COUNT = 384
DEFAULT_SLOT_WIDTH = 12.5


def free_runs_in_mask(free: np.ndarray) -> List[Tuple[int, int]]:
    """ Returns the maximal (start, length) runs of True values in a boolean vector, sorted by start. """

    if free.size == 0:
        return []
    padded = np.concatenate(([False], free, [False])).astype(np.int8)
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return [(int(s), int(e - s)) for s, e in zip(starts, ends)]


class SlotGrid:
    """ Flex-grid spectrum state of one link direction. Row f of the occupancy matrix is fiber pair f.

    :type occupancy: np.ndarray
    """

    def __init__(self, slot_count: int = DEFAULT_SLOT_COUNT, slot_width: float = DEFAULT_SLOT_WIDTH,
                 fiber_pairs: int = 1):
        if slot_count <= 0 or slot_width <= 0 or fiber_pairs <= 0:
            raise SpectrumError("slot_count, slot_width and fiber_pairs must be positive")
        self.slot_count = slot_count
        self.slot_width = slot_width
        self.occupancy = np.zeros((fiber_pairs, slot_count), dtype=bool)

    @property
    def fiber_pairs(self):
        return self.occupancy.shape[0]

    def copy(self) -> "SlotGrid":
        grid = SlotGrid(self.slot_count, self.slot_width, self.fiber_pairs)
        grid.occupancy = self.occupancy.copy()
        return grid

    def _check_range(self, fiber_pair_index, start, length):
        if not 0 <= fiber_pair_index < self.fiber_pairs:
            raise SpectrumError(f"out of range: fiber pair {fiber_pair_index} (grid has {self.fiber_pairs})")
        if length < 1 or start < 0 or start + length > self.slot_count:
            raise SpectrumError(f"out of range: slots [{start}, {start + length}) on a {self.slot_count}-slot grid")

    def free_runs(self, fiber_pair_index: int = 0) -> List[Tuple[int, int]]:
        return free_runs_in_mask(~self.occupancy[fiber_pair_index])

    def allocate(self, fiber_pair_index: int, start: int, length: int) -> "SlotGrid":
        self._check_range(fiber_pair_index, start, length)
        block = self.occupancy[fiber_pair_index, start:start + length]
        if block.any():
            raise SpectrumError(f"overlap: slots [{start}, {start + length}) on fiber pair {fiber_pair_index} "
                                f"are partially occupied")
        block[:] = True
        return self

    def release(self, fiber_pair_index: int, start: int, length: int) -> "SlotGrid":
        self._check_range(fiber_pair_index, start, length)
        block = self.occupancy[fiber_pair_index, start:start + length]
        if not block.all():
            raise SpectrumError(f"not allocated: slots [{start}, {start + length}) on fiber pair "
                                f"{fiber_pair_index} are not fully occupied")
        block[:] = False
        return self

    def add_fiber_pair(self) -> "SlotGrid":
        self.occupancy = np.vstack((self.occupancy, np.zeros((1, self.slot_count), dtype=bool)))
        return self

    def occupied_slots(self) -> int:
        return int(self.occupancy.sum())

    def total_slots(self) -> int:
        return int(self.occupancy.size)

    def occupancy_ratio(self) -> float:
        return self.occupied_slots() / self.total_slots()


def contiguous_free_runs(grid: SlotGrid, fiber_pair_index: Optional[int] = 0):
    """ Maximal free runs of the given fiber pair; with fiber_pair_index=None, one list per fiber pair. """

    if fiber_pair_index is None:
        return [grid.free_runs(f) for f in range(grid.fiber_pairs)]
    return grid.free_runs(fiber_pair_index)


def allocate(grid: SlotGrid, fiber_pair_index: int, start: int, length: int) -> SlotGrid:
    return grid.allocate(fiber_pair_index, start, length)


def release(grid: SlotGrid, fiber_pair_index: int, start: int, length: int) -> SlotGrid:
    return grid.release(fiber_pair_index, start, length)


def occupancy_ratio(grid: SlotGrid) -> float:
    return grid.occupancy_ratio()
