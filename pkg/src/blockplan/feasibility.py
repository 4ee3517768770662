"""Structural feasibility checks and the failure-handling rewrites.

Four checks gate a discretized design: component count against the
inventory, cantilever overhang, free-standing stack height, and placement
connectivity. Each failed check has a deterministic rewrite: iterative
rescaling, overhang removal, stack truncation, and connectivity-aware
re-sorting.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .checks import Cell, CheckKind, CheckResult, failed, passed
from .config import (
    DEFAULT_OVERHANG_LIMIT,
    DEFAULT_STACK_LIMIT,
    AssemblyConfig,
    Inventory,
)
from .discretizer import (
    OccupancyGrid,
    Workspace,
    build_grid,
    fit_to_workspace,
    voxelize,
)
from .errors import CannotFit, EmptyAfterModification, EmptyAssembly
from .mesh_io import TriangleMesh, bounding_box
from .sequencer import check_sequence_connectivity, connectivity_sort, naive_sort

_LATERAL = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class FeasibilityReport:
    """Check statuses of the first-pass grid plus the applied rewrites.

    ``results`` records what the checks said before any failure handling,
    so a report from a handled run still shows which hazards the raw design
    carried. ``modifications`` logs the rewrites in application order.
    """

    results: tuple[CheckResult, ...]
    modifications: tuple[dict, ...]
    final_component_count: int

    def result_for(self, kind: CheckKind) -> CheckResult:
        for result in self.results:
            if result.check is kind:
                return result
        raise KeyError(kind.value)

    def to_json(self) -> bytes:
        obj = {
            "checks": {r.check.value: r.status.value for r in self.results},
            "modifications": list(self.modifications),
            "final_component_count": self.final_component_count,
        }
        return (json.dumps(obj, indent=2) + "\n").encode("utf-8")


# --- individual checks -------------------------------------------------------


def check_component_count(grid: OccupancyGrid, inventory: Inventory) -> CheckResult:
    count = len(grid.occupied)
    if count == 0:
        raise EmptyAssembly("grid has no occupied cells")
    if count <= inventory.available_components:
        return passed(CheckKind.COMPONENT_COUNT)
    return failed(CheckKind.COMPONENT_COUNT, (count,))


def _layer_distances(occupied: frozenset[Cell] | set[Cell], k: int) -> dict[Cell, float]:
    """BFS distance of each layer-k cell to the nearest supported cell.

    Supported means sitting on the ground (k = 0) or directly on an occupied
    cell below. Distances run along same-layer face adjacency; cells with no
    path to support get infinity.
    """
    layer = [c for c in occupied if c[2] == k]
    dist: dict[Cell, float] = {c: math.inf for c in layer}
    queue: deque[Cell] = deque()
    for cell in layer:
        if k == 0 or (cell[0], cell[1], k - 1) in occupied:
            dist[cell] = 0
            queue.append(cell)
    while queue:
        cell = queue.popleft()
        for di, dj in _LATERAL:
            nb = (cell[0] + di, cell[1] + dj, k)
            if nb in dist and dist[nb] == math.inf:
                dist[nb] = dist[cell] + 1
                queue.append(nb)
    return dist


def _overhang_offenders(grid: OccupancyGrid, limit: int) -> list[Cell]:
    offenders: list[Cell] = []
    for k in range(grid.spec.dims[2]):
        for cell, d in _layer_distances(grid.occupied, k).items():
            if d > limit:
                offenders.append(cell)
    return sorted(offenders)


def check_overhang(
    grid: OccupancyGrid, max_unsupported: int = DEFAULT_OVERHANG_LIMIT
) -> CheckResult:
    """Fails when a cell sits farther than ``max_unsupported`` lateral steps
    from any supported cell of its layer (unreachable counts as infinite)."""
    offenders = _overhang_offenders(grid, max_unsupported)
    if offenders:
        return failed(CheckKind.OVERHANG, tuple(offenders))
    return passed(CheckKind.OVERHANG)


def remove_overhangs(
    grid: OccupancyGrid, max_unsupported: int = DEFAULT_OVERHANG_LIMIT
) -> OccupancyGrid:
    """Delete overhang offenders until the check passes.

    Removal can orphan cells above (their support vanishes), so the sweep
    repeats to a fixpoint. Grids that already pass come back unchanged.
    """
    occupied = grid.occupied
    while True:
        trial = OccupancyGrid(grid.spec, occupied)
        offenders = _overhang_offenders(trial, max_unsupported)
        if not offenders:
            return trial
        occupied = occupied - set(offenders)


def _free_standing_runs(occupied: frozenset[Cell] | set[Cell]) -> list[list[Cell]]:
    """Maximal vertical runs of occupied cells with no horizontal neighbor.

    A cell braced sideways splits the column; only the unbraced stretches
    count toward the stack limit.
    """
    columns: dict[tuple[int, int], list[int]] = {}
    for i, j, k in occupied:
        columns.setdefault((i, j), []).append(k)
    runs: list[list[Cell]] = []
    for (i, j), ks in sorted(columns.items()):
        run: list[Cell] = []
        prev_k = None
        for k in sorted(ks):
            braced = any((i + di, j + dj, k) in occupied for di, dj in _LATERAL)
            contiguous = prev_k is not None and k == prev_k + 1
            if braced or not contiguous:
                if len(run) > 0:
                    runs.append(run)
                run = []
            if not braced:
                run.append((i, j, k))
            prev_k = k
        if run:
            runs.append(run)
    return runs


def check_vertical_stack(
    grid: OccupancyGrid, max_stack: int = DEFAULT_STACK_LIMIT
) -> CheckResult:
    """Fails when a free-standing column is taller than ``max_stack`` cells.

    Details list the cells above the allowed height of each offending run.
    """
    excess: list[Cell] = []
    for run in _free_standing_runs(grid.occupied):
        if len(run) > max_stack:
            excess.extend(run[max_stack:])
    if excess:
        return failed(CheckKind.VERTICAL_STACK, tuple(sorted(excess)))
    return passed(CheckKind.VERTICAL_STACK)


def truncate_stacks(
    grid: OccupancyGrid,
    max_stack: int = DEFAULT_STACK_LIMIT,
    max_unsupported: int = DEFAULT_OVERHANG_LIMIT,
) -> OccupancyGrid:
    """Cut free-standing columns down to ``max_stack`` cells.

    Truncation can orphan whatever rested on the removed cells, so the
    overhang sweep runs interleaved until both rules hold.
    """
    occupied = grid.occupied
    while True:
        trial = OccupancyGrid(grid.spec, occupied)
        stack_result = check_vertical_stack(trial, max_stack)
        if stack_result.failed:
            occupied = occupied - set(stack_result.details)
            continue
        offenders = _overhang_offenders(trial, max_unsupported)
        if offenders:
            occupied = occupied - set(offenders)
            continue
        return trial


# --- rescaling ----------------------------------------------------------------


def rescale_until_fits(
    mesh: TriangleMesh,
    inventory: Inventory,
    cell_size: float,
    workspace: Workspace,
    max_scale: float | None = 1.0,
) -> tuple[OccupancyGrid, float, int]:
    """Shrink the design until it voxelizes to at most the inventory.

    The mesh is first fitted to the workspace, then repeatedly scaled by
    (L - cell) / L where L is the current longest bounding-box edge, which
    shaves exactly one cell off the longest axis per iteration. Returns the
    final grid, the cumulative scale (fit included) and the iteration count.
    """
    fitted, scale = fit_to_workspace(mesh, workspace, max_scale)
    grid = voxelize(fitted, build_grid(bounding_box(fitted), cell_size))
    iterations = 0
    while len(grid.occupied) > inventory.available_components:
        box = bounding_box(fitted)
        longest = max(box.extents)
        if longest - cell_size < cell_size:
            raise CannotFit(
                f"{len(grid.occupied)} components exceed the inventory of "
                f"{inventory.available_components} and the design cannot shrink "
                f"below one component"
            )
        factor = (longest - cell_size) / longest
        anchor = np.asarray(box.min_corner)
        fitted = fitted.with_vertices(anchor + (fitted.vertices - anchor) * factor)
        scale *= factor
        iterations += 1
        grid = voxelize(fitted, build_grid(bounding_box(fitted), cell_size))
    return grid, float(scale), iterations


# --- orchestration --------------------------------------------------------


def run_feasibility(
    mesh: TriangleMesh,
    config: AssemblyConfig | None = None,
    failure_handling: bool = True,
) -> tuple[OccupancyGrid, FeasibilityReport]:
    """Discretize the mesh, run all four checks, optionally apply rewrites.

    The report always carries the first-pass statuses; with failure
    handling enabled the returned grid additionally satisfies every check
    (rescale, overhang removal, stack truncation, connectivity re-sort, in
    that order).
    """
    config = config or AssemblyConfig()
    fitted, _ = fit_to_workspace(mesh, config.workspace, config.max_upscale)
    grid = voxelize(fitted, build_grid(bounding_box(fitted), config.cell_size))
    if not grid.occupied:
        raise EmptyAssembly("mesh voxelized to zero occupied cells")

    results = (
        check_component_count(grid, config.inventory),
        check_overhang(grid, config.overhang_limit),
        check_vertical_stack(grid, config.stack_limit),
        check_sequence_connectivity(naive_sort(grid), grid),
    )

    modifications: list[dict] = []
    if failure_handling:
        if results[0].failed:
            grid, scale, iterations = rescale_until_fits(
                fitted,
                config.inventory,
                config.cell_size,
                config.workspace,
                config.max_upscale,
            )
            modifications.append(
                {"action": "rescale", "iterations": iterations, "scale": scale}
            )
        if check_overhang(grid, config.overhang_limit).failed:
            trimmed = remove_overhangs(grid, config.overhang_limit)
            modifications.append(
                {
                    "action": "remove_overhangs",
                    "removed": [list(c) for c in sorted(grid.occupied - trimmed.occupied)],
                }
            )
            grid = trimmed
        if check_vertical_stack(grid, config.stack_limit).failed:
            trimmed = truncate_stacks(grid, config.stack_limit, config.overhang_limit)
            modifications.append(
                {
                    "action": "truncate_stacks",
                    "removed": [list(c) for c in sorted(grid.occupied - trimmed.occupied)],
                }
            )
            grid = trimmed
        if not grid.occupied:
            raise EmptyAfterModification("failure handling removed every cell")
        if check_sequence_connectivity(naive_sort(grid), grid).failed:
            connectivity_sort(grid)  # raises Unsequenceable when impossible
            modifications.append({"action": "connectivity_sort"})

    report = FeasibilityReport(
        results=results,
        modifications=tuple(modifications),
        final_component_count=len(grid.occupied),
    )
    return grid, report
