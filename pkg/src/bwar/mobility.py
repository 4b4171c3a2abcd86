"""I.i.d. cell-partitioned mobility: every slot each node lands in a uniform cell."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import njit


@dataclass(frozen=True)
class Placement:
    slot: int
    cell_of: np.ndarray  # node id -> cell id

    @property
    def cells(self) -> int:
        return int(self.cell_of.max()) + 1 if self.cell_of.size else 0


def place(rng: np.random.Generator, n_nodes: int, n_cells: int, slot: int = 0) -> Placement:
    """Draw one placement; consumes ``n_nodes`` draws in node-index order."""
    return Placement(slot, rng.integers(0, n_cells, size=n_nodes))


def place_block(rng: np.random.Generator, n_nodes: int, n_cells: int, n_slots: int) -> np.ndarray:
    """Placements for ``n_slots`` consecutive slots, row ``k`` is slot ``k``."""
    return rng.integers(0, n_cells, size=(n_slots, n_nodes))


def members(p: Placement | np.ndarray, cell: int) -> list[int]:
    cell_of = p.cell_of if isinstance(p, Placement) else np.asarray(p)
    return [int(n) for n in np.flatnonzero(cell_of == cell)]


@njit
def group_by_cell(cell_of, n_cells, order, start):
    """Counting sort of nodes by cell.

    On return the members of cell ``l`` are ``order[start[l]:start[l + 1]]`` in
    ascending node order.
    """
    n = cell_of.shape[0]
    for l in range(n_cells + 1):
        start[l] = 0
    for i in range(n):
        start[cell_of[i] + 1] += 1
    for l in range(n_cells):
        start[l + 1] += start[l]
    fill = start[:n_cells].copy()
    for i in range(n):
        l = cell_of[i]
        order[fill[l]] = i
        fill[l] += 1
