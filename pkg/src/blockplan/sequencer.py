"""Assembly sequencing: turn an occupancy grid into a placement order.

Components are placed layer by layer from the ground up. The naive order
sorts cells by (z, x, y); the connectivity-aware order additionally
guarantees each placement touches the structure built so far.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .checks import Cell, CheckKind, CheckResult, failed, passed
from .discretizer import OccupancyGrid
from .errors import EmptyAssembly, SchemaError, SequenceGridMismatch, Unsequenceable

FACE_NEIGHBORS: tuple[Cell, ...] = (
    (1, 0, 0),
    (-1, 0, 0),
    (0, 1, 0),
    (0, -1, 0),
    (0, 0, 1),
    (0, 0, -1),
)


def face_neighbors(cell: Cell):
    i, j, k = cell
    for di, dj, dk in FACE_NEIGHBORS:
        yield i + di, j + dj, k + dk


@dataclass(frozen=True)
class AssemblySequence:
    """Placement order over the occupied cells of one grid."""

    cells: tuple[Cell, ...]

    def __post_init__(self) -> None:
        cells = tuple(tuple(int(c) for c in cell) for cell in self.cells)
        object.__setattr__(self, "cells", cells)

    def __len__(self) -> int:
        return len(self.cells)

    def to_json(self) -> bytes:
        obj = {"cells": [list(c) for c in self.cells]}
        return (json.dumps(obj, indent=2) + "\n").encode("utf-8")

    @classmethod
    def from_json(cls, data: bytes | str) -> "AssemblySequence":
        try:
            obj = json.loads(data)
            cells = tuple(tuple(int(c) for c in cell) for cell in obj["cells"])
            if any(len(cell) != 3 for cell in cells):
                raise ValueError("cells must be index triples")
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise SchemaError(f"not a valid sequence document: {exc}") from exc
        return cls(cells)


def naive_sort(grid: OccupancyGrid) -> AssemblySequence:
    """Cells sorted by layer then x then y. Ignores connectivity."""
    if not grid.occupied:
        raise EmptyAssembly("grid has no occupied cells")
    ordered = sorted(grid.occupied, key=lambda c: (c[2], c[0], c[1]))
    return AssemblySequence(tuple(ordered))


def _require_coverage(seq: AssemblySequence, grid: OccupancyGrid) -> None:
    if len(seq.cells) != len(set(seq.cells)):
        raise SequenceGridMismatch("sequence repeats a cell")
    if set(seq.cells) != grid.occupied:
        raise SequenceGridMismatch(
            f"sequence covers {len(set(seq.cells))} cells, "
            f"grid has {len(grid.occupied)}"
        )


def check_sequence_connectivity(
    seq: AssemblySequence, grid: OccupancyGrid
) -> CheckResult:
    """Passes when every placement beyond the ground touches an earlier one.

    Ground-layer cells (k = 0) count as connected by definition. The first
    cell that has no already-placed face neighbor fails the check.
    """
    _require_coverage(seq, grid)
    placed: set[Cell] = set()
    for cell in seq.cells:
        if cell[2] > 0 and not any(nb in placed for nb in face_neighbors(cell)):
            return failed(CheckKind.CONNECTIVITY, (cell,))
        placed.add(cell)
    return passed(CheckKind.CONNECTIVITY)


def connectivity_sort(grid: OccupancyGrid) -> AssemblySequence:
    """Layer-by-layer order in which every placement touches the structure.

    Within a layer, the next cell is chosen among the unplaced cells that
    share a face with a placed cell (or sit on the ground) by smallest
    Manhattan index distance to the nearest placed cell, ties broken by
    (i, j). The very first cell is the lexicographic minimum of layer 0.
    Raises :class:`Unsequenceable` when a layer cannot be completed, e.g.
    an arch whose keystone column only connects from above.
    """
    if not grid.occupied:
        raise EmptyAssembly("grid has no occupied cells")
    order: list[Cell] = []
    placed: set[Cell] = set()
    for k in range(grid.spec.dims[2]):
        remaining = {c for c in grid.occupied if c[2] == k}
        while remaining:
            candidates = [
                c
                for c in remaining
                if k == 0 or any(nb in placed for nb in face_neighbors(c))
            ]
            if not candidates:
                stuck = min(remaining)
                raise Unsequenceable(
                    f"layer {k}: cell {stuck} is unreachable from the structure"
                )
            if not placed:
                pick = min(candidates)
            else:
                pick = min(
                    candidates,
                    key=lambda c: (_nearest_manhattan(c, placed), c[0], c[1]),
                )
            order.append(pick)
            placed.add(pick)
            remaining.remove(pick)
    return AssemblySequence(tuple(order))


def _nearest_manhattan(cell: Cell, placed: set[Cell]) -> int:
    ci, cj, ck = cell
    return min(abs(ci - i) + abs(cj - j) + abs(ck - k) for i, j, k in placed)
