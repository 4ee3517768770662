"""Occupancy-grid discretization of a repaired triangle mesh.

A mesh is scaled into the robot workspace, overlaid with a uniform cubic
grid anchored at the bounding-box minimum, and each cell is marked occupied
if the surface intersects it or, for watertight meshes, if its center lies
inside the solid.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import SchemaError
from .mesh_io import Aabb, TriangleMesh, bounding_box, is_manifold

DEFAULT_CELL_SIZE = 10.0  # cm, cubic component edge

# Separating-axis tolerance. Touching counts as intersecting, so a face
# lying exactly on a cell boundary claims both cells.
SAT_EPSILON = 1e-9

# Interior parity rays get a slight xy tilt so they cannot run inside an
# axis-aligned face and never graze shared edges of grid-aligned meshes.
_RAY_DIR = np.array([1.2339e-4, 2.7193e-5, 1.0])

Cell = tuple[int, int, int]


@dataclass(frozen=True)
class Workspace:
    """Reachable build volume of the placement robot, in cm."""

    extent: tuple[float, float, float] = (60.0, 50.0, 60.0)

    def __post_init__(self) -> None:
        if any(e <= 0 for e in self.extent):
            raise ValueError("workspace extents must be positive")


@dataclass(frozen=True)
class GridSpec:
    origin: tuple[float, float, float]
    cell_size: float
    dims: tuple[int, int, int]

    def __post_init__(self) -> None:
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if any(int(d) < 1 for d in self.dims):
            raise ValueError("grid dims must be at least 1 per axis")

    @property
    def cell_count(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def cell_center(self, cell: Cell) -> np.ndarray:
        return np.asarray(self.origin) + (np.asarray(cell) + 0.5) * self.cell_size

    def contains(self, cell: Cell) -> bool:
        return all(0 <= c < d for c, d in zip(cell, self.dims))


@dataclass(frozen=True)
class OccupancyGrid:
    spec: GridSpec
    occupied: frozenset[Cell]

    def __post_init__(self) -> None:
        cells = frozenset(tuple(int(c) for c in cell) for cell in self.occupied)
        for cell in cells:
            if not self.spec.contains(cell):
                raise ValueError(f"cell {cell} outside grid dims {self.spec.dims}")
        object.__setattr__(self, "occupied", cells)

    def sorted_cells(self) -> list[Cell]:
        return sorted(self.occupied)

    def to_json(self) -> bytes:
        obj = {
            "cell_size_cm": float(self.spec.cell_size),
            "origin_cm": [float(v) for v in self.spec.origin],
            "dims": [int(d) for d in self.spec.dims],
            "occupied": [list(c) for c in self.sorted_cells()],
        }
        return (json.dumps(obj, indent=2) + "\n").encode("utf-8")

    @classmethod
    def from_json(cls, data: bytes | str) -> "OccupancyGrid":
        try:
            obj = json.loads(data)
            spec = GridSpec(
                origin=tuple(float(v) for v in obj["origin_cm"]),
                cell_size=float(obj["cell_size_cm"]),
                dims=tuple(int(d) for d in obj["dims"]),
            )
            occupied = frozenset(tuple(int(c) for c in cell) for cell in obj["occupied"])
            if len(spec.origin) != 3 or len(spec.dims) != 3:
                raise ValueError("origin_cm and dims must have 3 entries")
            if any(len(cell) != 3 for cell in obj["occupied"]):
                raise ValueError("occupied cells must be index triples")
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise SchemaError(f"not a valid occupancy grid document: {exc}") from exc
        return cls(spec, occupied)


def component_count(grid: OccupancyGrid) -> int:
    return len(grid.occupied)


def fit_to_workspace(
    mesh: TriangleMesh, workspace: Workspace, max_scale: float | None = 1.0
) -> tuple[TriangleMesh, float]:
    """Uniformly scale and translate the mesh into ``[0, extent]`` per axis.

    The scale factor is the most constraining extent ratio, capped at
    ``max_scale`` (default 1.0: never upscale; pass ``None`` to uncap).
    The bounding-box minimum lands exactly on the origin.
    """
    box = bounding_box(mesh)
    extents = box.extents
    ratios = [
        ws / ext for ws, ext in zip(workspace.extent, extents) if ext > 0.0
    ]
    scale = min(ratios) if ratios else 1.0
    if max_scale is not None:
        scale = min(scale, max_scale)
    offset = np.asarray(box.min_corner)
    return mesh.with_vertices((mesh.vertices - offset) * scale), float(scale)


def build_grid(box: Aabb, cell_size: float = DEFAULT_CELL_SIZE) -> GridSpec:
    """Grid anchored at the box minimum, ceil(extent / cell) cells per axis."""
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    dims = tuple(
        # tiny slack so float noise on exact multiples does not add a layer
        max(1, math.ceil(ext / cell_size - 1e-12))
        for ext in box.extents
    )
    return GridSpec(origin=box.min_corner, cell_size=float(cell_size), dims=dims)


def voxelize(mesh: TriangleMesh, spec: GridSpec) -> OccupancyGrid:
    """Mark every cell the surface intersects; fill the interior if watertight.

    The surface test is an exact triangle/box separating-axis test with a
    1e-9 epsilon (touching counts). For manifold meshes, cells without
    surface contact are additionally tested by casting a parity ray from the
    cell center, which also fills enclosed cavities. Deterministic.
    """
    cell = spec.cell_size
    origin = np.asarray(spec.origin, dtype=np.float64)
    dims = np.asarray(spec.dims, dtype=np.int64)
    half = cell / 2.0

    occupied: set[Cell] = set()
    coords = mesh.triangle_coords()
    for tri in coords:
        lo = np.floor((tri.min(axis=0) - origin - SAT_EPSILON) / cell).astype(np.int64)
        hi = np.floor((tri.max(axis=0) - origin + SAT_EPSILON) / cell).astype(np.int64)
        lo = np.maximum(lo, 0)
        hi = np.minimum(hi, dims - 1)
        if np.any(hi < lo):
            continue
        for i in range(lo[0], hi[0] + 1):
            for j in range(lo[1], hi[1] + 1):
                for k in range(lo[2], hi[2] + 1):
                    key = (i, j, k)
                    if key in occupied:
                        continue
                    center = origin + (np.array([i, j, k]) + 0.5) * cell
                    if _triangle_box_intersect(tri, center, half):
                        occupied.add(key)

    if len(coords) and is_manifold(mesh):
        for i in range(spec.dims[0]):
            for j in range(spec.dims[1]):
                for k in range(spec.dims[2]):
                    key = (i, j, k)
                    if key in occupied:
                        continue
                    center = origin + (np.array([i, j, k]) + 0.5) * cell
                    if _point_inside(center, coords):
                        occupied.add(key)

    return OccupancyGrid(spec, frozenset(occupied))


def _triangle_box_intersect(tri: np.ndarray, center: np.ndarray, half: float) -> bool:
    """13-axis SAT (Akenine-Moller): 3 box normals, 1 face normal, 9 edge crosses."""
    v = tri - center
    eps = SAT_EPSILON

    for axis in range(3):
        if v[:, axis].min() > half + eps or v[:, axis].max() < -half - eps:
            return False

    edges = (v[1] - v[0], v[2] - v[1], v[0] - v[2])

    normal = np.cross(edges[0], edges[1])
    length = np.linalg.norm(normal)
    if length > 0:
        normal = normal / length
        dist = float(np.dot(normal, v[0]))
        radius = half * float(np.abs(normal).sum())
        if abs(dist) > radius + eps:
            return False

    for edge in edges:
        for axis in range(3):
            unit = np.zeros(3)
            unit[axis] = 1.0
            sep = np.cross(unit, edge)
            length = np.linalg.norm(sep)
            if length < 1e-12:
                continue
            sep = sep / length
            proj = v @ sep
            radius = half * float(np.abs(sep).sum())
            if proj.min() > radius + eps or proj.max() < -radius - eps:
                return False
    return True


def _point_inside(point: np.ndarray, coords: np.ndarray) -> bool:
    """Even-odd ray parity along the tilted ray, Moller-Trumbore per triangle."""
    v0 = coords[:, 0]
    e1 = coords[:, 1] - v0
    e2 = coords[:, 2] - v0
    h = np.cross(_RAY_DIR, e2)
    det = np.einsum("ij,ij->i", e1, h)
    ok = np.abs(det) > 1e-12
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = point - v0
    u = inv * np.einsum("ij,ij->i", s, h)
    q = np.cross(s, e1)
    view = inv * (q @ _RAY_DIR)
    t = inv * np.einsum("ij,ij->i", e2, q)
    tol = 1e-12
    hits = ok & (u >= -tol) & (view >= -tol) & (u + view <= 1.0 + tol) & (t > tol)
    return bool(hits.sum() % 2 == 1)
