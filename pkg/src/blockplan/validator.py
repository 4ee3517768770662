"""Post-planning validation: simulate the build and cross-check reports."""
from __future__ import annotations

import json
from dataclasses import dataclass

from .checks import Cell
from .config import AssemblyConfig
from .discretizer import OccupancyGrid
from .errors import BlockplanError, SequenceGridMismatch
from .feasibility import (
    FeasibilityReport,
    check_component_count,
    check_overhang,
    check_vertical_stack,
)
from .sequencer import (
    AssemblySequence,
    check_sequence_connectivity,
    connectivity_sort,
    face_neighbors,
)


@dataclass(frozen=True)
class PlacementStep:
    cell: Cell
    supported: bool
    corridor_clear: bool
    plane_clear: bool

    @property
    def ok(self) -> bool:
        return self.supported and self.corridor_clear and self.plane_clear


@dataclass(frozen=True)
class SimulationReport:
    ok: bool
    steps: tuple[PlacementStep, ...]
    first_failure: int | None

    def to_json(self) -> bytes:
        obj = {
            "ok": self.ok,
            "first_failure": self.first_failure,
            "steps": [
                {
                    "cell": list(step.cell),
                    "supported": step.supported,
                    "corridor_clear": step.corridor_clear,
                    "plane_clear": step.plane_clear,
                }
                for step in self.steps
            ],
        }
        return (json.dumps(obj, indent=2) + "\n").encode("utf-8")


def simulate_assembly(
    seq: AssemblySequence, grid: OccupancyGrid, config: AssemblyConfig
) -> SimulationReport:
    """Replay the sequence and verify each placement is physically sound.

    Per step: the cell must rest on the ground or touch an already placed
    cell (support), the column straight above it must still be empty so the
    gripper can descend (corridor), and the movement plane must clear the
    structure including the new cell by the configured margin.
    """
    if len(seq.cells) != len(set(seq.cells)) or set(seq.cells) != grid.occupied:
        raise SequenceGridMismatch("sequence does not cover the grid")
    cell_size = grid.spec.cell_size
    origin_z = grid.spec.origin[2]
    placed: set[Cell] = set()
    steps: list[PlacementStep] = []
    top_k = -1
    for cell in seq.cells:
        i, j, k = cell
        supported = k == 0 or any(nb in placed for nb in face_neighbors(cell))
        corridor_clear = not any(
            (i, j, above) in placed for above in range(k + 1, grid.spec.dims[2])
        )
        top_k = max(top_k, k)
        top_z = origin_z + (top_k + 1) * cell_size
        plane_clear = config.movement_plane_z >= top_z + config.clearance - 1e-9
        steps.append(PlacementStep(cell, supported, corridor_clear, plane_clear))
        placed.add(cell)
    first_failure = next((n for n, s in enumerate(steps) if not s.ok), None)
    return SimulationReport(first_failure is None, tuple(steps), first_failure)


def verify_report_consistency(
    report: FeasibilityReport, grid: OccupancyGrid, config: AssemblyConfig
) -> bool:
    """Recompute all four checks on the final grid and recount components.

    True only when everything passes and the report's final count matches.
    Used as the pipeline's last gate against stale or tampered reports.
    """
    if report.final_component_count != len(grid.occupied):
        return False
    try:
        if check_component_count(grid, config.inventory).failed:
            return False
        if check_overhang(grid, config.overhang_limit).failed:
            return False
        if check_vertical_stack(grid, config.stack_limit).failed:
            return False
        seq = connectivity_sort(grid)
        if check_sequence_connectivity(seq, grid).failed:
            return False
    except BlockplanError:
        return False
    return True
