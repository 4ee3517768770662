"""Procedural meshes: primitives and ready-made demo/test shapes.

The cell-design builder turns a list of cuboid cell ranges into a
watertight multi-box mesh. Interior faces are inset by a small margin so
each box stays strictly inside its design cells and voxelization
reproduces the design exactly; faces on the overall design boundary stay
flush so the bounding box lands on whole cells.
"""
from __future__ import annotations

import numpy as np

from .mesh_io import MeshFormat, TriangleMesh

_BOX_TRIANGLES = np.array(
    [
        [0, 2, 1], [0, 3, 2],  # bottom, -z
        [4, 5, 6], [4, 6, 7],  # top, +z
        [0, 1, 5], [0, 5, 4],  # -y
        [2, 3, 7], [2, 7, 6],  # +y
        [0, 4, 7], [0, 7, 3],  # -x
        [1, 2, 6], [1, 6, 5],  # +x
    ],
    dtype=np.int64,
)

CellRange = tuple[tuple[int, int, int], tuple[int, int, int]]


def box_mesh(
    min_corner: tuple[float, float, float], max_corner: tuple[float, float, float]
) -> TriangleMesh:
    """Closed axis-aligned box with outward windings (8 vertices, 12 triangles)."""
    x0, y0, z0 = min_corner
    x1, y1, z1 = max_corner
    if not (x0 < x1 and y0 < y1 and z0 < z1):
        raise ValueError("max_corner must exceed min_corner on every axis")
    verts = np.array(
        [
            [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
            [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
        ],
        dtype=np.float64,
    )
    return TriangleMesh(verts, _BOX_TRIANGLES.copy())


def combine_meshes(meshes: list[TriangleMesh]) -> TriangleMesh:
    """Concatenate meshes into one (components stay disconnected)."""
    if not meshes:
        raise ValueError("need at least one mesh")
    verts = []
    tris = []
    offset = 0
    for mesh in meshes:
        verts.append(mesh.vertices)
        tris.append(mesh.triangles + offset)
        offset += mesh.vertex_count
    return TriangleMesh(np.vstack(verts), np.vstack(tris))


def icosphere(
    radius: float,
    center: tuple[float, float, float] = (0.0, 0.0, 0.0),
    subdivisions: int = 3,
) -> TriangleMesh:
    """Subdivided icosahedron projected onto a sphere. Watertight."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    vert_list = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        midpoint_cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in midpoint_cache:
                mid = np.asarray(vert_list[a]) + np.asarray(vert_list[b])
                mid /= np.linalg.norm(mid)
                midpoint_cache[key] = len(vert_list)
                vert_list.append(tuple(mid))
            return midpoint_cache[key]

        next_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            next_faces.extend(
                [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
            )
        faces = next_faces

    final_verts = np.asarray(vert_list) * radius + np.asarray(center)
    return TriangleMesh(final_verts, np.asarray(faces, dtype=np.int64))


def cell_design_mesh(
    cuboids: list[CellRange], cell_size: float = 10.0, margin: float = 0.25
) -> TriangleMesh:
    """One inset box per cuboid of design cells (inclusive index ranges).

    The margin must stay well above the voxelizer's touch epsilon and well
    below half a cell; 0.25 cm leaves each box safely inside its cells.
    """
    if not cuboids:
        raise ValueError("need at least one cuboid")
    if not 0 < margin < cell_size / 2:
        raise ValueError("margin must lie in (0, cell_size / 2)")
    dims = [0, 0, 0]
    for lo, hi in cuboids:
        if any(h < l or l < 0 for l, h in zip(lo, hi)):
            raise ValueError(f"bad cell range {lo}..{hi}")
        for axis in range(3):
            dims[axis] = max(dims[axis], hi[axis] + 1)
    boxes = []
    for lo, hi in cuboids:
        mins = [
            lo[a] * cell_size + (margin if lo[a] > 0 else 0.0) for a in range(3)
        ]
        maxs = [
            (hi[a] + 1) * cell_size - (margin if hi[a] + 1 < dims[a] else 0.0)
            for a in range(3)
        ]
        boxes.append(box_mesh(tuple(mins), tuple(maxs)))
    return combine_meshes(boxes)


# --- demo shapes -------------------------------------------------------------
#
# Four small designs exercising each feasibility hazard in isolation. All cell
# ranges are inclusive and sized for 10 cm components in a 60x50x60 workspace.


def oversized_block_mesh(
    extent: tuple[float, float, float] = (60.0, 50.0, 60.0)
) -> TriangleMesh:
    """Solid block filling the whole workspace: structurally sound but needs
    far more components than the inventory holds."""
    return box_mesh((0.0, 0.0, 0.0), extent)


def shelf_mesh() -> TriangleMesh:
    """Back wall with two deep shelves: over budget, and the shelf plates
    cantilever four cells out from the wall."""
    return cell_design_mesh(
        [
            ((0, 0, 0), (0, 4, 5)),  # back wall
            ((1, 0, 2), (4, 4, 2)),  # lower shelf plate
            ((1, 0, 5), (4, 4, 5)),  # upper shelf plate
        ]
    )


def tee_mesh() -> TriangleMesh:
    """Upside-down tee: a ground bar with a five-cell mast on its center.

    Only the free-standing-stack rule trips; every cell is supported and the
    bottom-up order works because the mast sits directly on the bar.
    """
    return cell_design_mesh(
        [
            ((0, 0, 0), (2, 0, 0)),  # ground bar
            ((1, 0, 1), (1, 0, 5)),  # mast, five free-standing cells
        ]
    )


def table_mesh() -> TriangleMesh:
    """Four inset legs under a full top slab.

    Structurally fine, but the plain (z, x, y) order starts the slab at a
    corner that hangs past the legs, so only the connectivity-aware order
    can build it.
    """
    legs: list[CellRange] = [
        ((1, 0, 0), (1, 0, 2)),
        ((1, 2, 0), (1, 2, 2)),
        ((2, 0, 0), (2, 0, 2)),
        ((2, 2, 0), (2, 2, 2)),
    ]
    slab: CellRange = ((0, 0, 3), (3, 2, 3))
    return cell_design_mesh(legs + [slab])


def write_demo_meshes(directory) -> dict[str, str]:
    """Drop the four demo shapes into ``directory`` as binary STL files."""
    from pathlib import Path

    from .mesh_io import serialize_mesh

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    shapes = {
        "block.stl": oversized_block_mesh(),
        "shelf.stl": shelf_mesh(),
        "tee.stl": tee_mesh(),
        "table.stl": table_mesh(),
    }
    written = {}
    for name, mesh in shapes.items():
        path = out / name
        path.write_bytes(serialize_mesh(mesh, MeshFormat.STL_BINARY))
        written[name.split(".")[0]] = str(path)
    return written
