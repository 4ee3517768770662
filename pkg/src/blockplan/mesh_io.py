"""Triangle mesh ingestion: STL/OBJ parsing, repair, measurement.

All coordinates are centimeters. Parsing keeps the file geometry verbatim,
duplicated vertices included; :func:`repair_mesh` is the canonicalization
step that welds vertices, drops junk triangles and unifies windings.
"""
from __future__ import annotations

import struct
from collections import defaultdict, deque
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyMesh, MalformedFile, UnsupportedFormat

DEFAULT_WELD_TOLERANCE = 1e-4  # cm; far below the component scale
DEGENERATE_AREA = 1e-9  # cm^2; triangles thinner than this are dropped

_BINARY_STL_HEADER = 80
_BINARY_STL_RECORD = 50
_BINARY_STL_DTYPE = np.dtype(
    [("normal", "<f4", 3), ("verts", "<f4", (3, 3)), ("attr", "<u2")]
)


class MeshFormat(Enum):
    STL_ASCII = "stl_ascii"
    STL_BINARY = "stl_binary"
    OBJ = "obj"


@dataclass(frozen=True)
class RepairSummary:
    """Bookkeeping from :func:`repair_mesh`."""

    welded_vertices: int
    removed_degenerate: int
    removed_duplicates: int
    flipped_triangles: int
    manifold: bool

    def to_dict(self) -> dict:
        return {
            "welded_vertices": self.welded_vertices,
            "removed_degenerate": self.removed_degenerate,
            "removed_duplicates": self.removed_duplicates,
            "flipped_triangles": self.flipped_triangles,
            "manifold": self.manifold,
        }


@dataclass(eq=False)
class TriangleMesh:
    """Indexed triangle soup. Treated as immutable after construction."""

    vertices: np.ndarray  # (n, 3) float64, cm
    triangles: np.ndarray  # (m, 3) int64 indices into vertices
    format_origin: MeshFormat | None = None
    repair: RepairSummary | None = None

    def __post_init__(self) -> None:
        verts = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        tris = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if verts.size == 0:
            verts = verts.reshape(0, 3)
        if tris.size == 0:
            tris = tris.reshape(0, 3)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ValueError("vertices must have shape (n, 3)")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ValueError("triangles must have shape (m, 3)")
        if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
            raise ValueError("triangle index out of range")
        verts.setflags(write=False)
        tris.setflags(write=False)
        self.vertices = verts
        self.triangles = tris

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    def triangle_coords(self) -> np.ndarray:
        """World coordinates per triangle, shape (m, 3, 3)."""
        return self.vertices[self.triangles]

    def with_vertices(self, vertices: np.ndarray) -> "TriangleMesh":
        """Same topology with replaced vertex positions."""
        return TriangleMesh(vertices, self.triangles, self.format_origin, self.repair)


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box, inclusive corners."""

    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]

    def __post_init__(self) -> None:
        if any(lo > hi for lo, hi in zip(self.min_corner, self.max_corner)):
            raise ValueError("min_corner must not exceed max_corner")

    @property
    def extents(self) -> tuple[float, float, float]:
        return tuple(hi - lo for lo, hi in zip(self.min_corner, self.max_corner))


def bounding_box(mesh: TriangleMesh) -> Aabb:
    """Tight box of all vertices. A single vertex yields a zero-extent box."""
    if mesh.vertex_count == 0:
        raise EmptyMesh("mesh has no vertices")
    mins = mesh.vertices.min(axis=0)
    maxs = mesh.vertices.max(axis=0)
    return Aabb(tuple(float(v) for v in mins), tuple(float(v) for v in maxs))


# --- parsing ---------------------------------------------------------------


def parse_mesh(data: bytes, format_hint: MeshFormat | str | None = None) -> TriangleMesh:
    """Parse STL (ASCII or binary) or OBJ bytes into a mesh.

    ``format_hint`` may be a :class:`MeshFormat`, a generic string such as
    ``"stl"`` or ``"obj"``, or ``None`` for full auto-detection.
    """
    if not data:
        raise MalformedFile("empty input")
    fmt = _resolve_format(data, format_hint)
    if fmt is MeshFormat.STL_ASCII:
        return _parse_stl_ascii(data)
    if fmt is MeshFormat.STL_BINARY:
        return _parse_stl_binary(data)
    return _parse_obj(data)


def _resolve_format(data: bytes, hint: MeshFormat | str | None) -> MeshFormat:
    if isinstance(hint, MeshFormat):
        return hint
    if isinstance(hint, str):
        name = hint.lower().lstrip(".")
        if name in ("stl_ascii", "stl_binary", "obj"):
            return MeshFormat(name)
        if name == "stl":
            return _sniff_stl(data)
        raise UnsupportedFormat(f"unknown format hint {hint!r}")
    return _sniff(data)


def _sniff(data: bytes) -> MeshFormat:
    head = data[:512].lstrip()
    if head.startswith(b"solid") and b"facet" in data[:4096]:
        return MeshFormat.STL_ASCII
    if _binary_stl_length_consistent(data):
        return MeshFormat.STL_BINARY
    if _looks_like_obj(data):
        return MeshFormat.OBJ
    raise UnsupportedFormat("could not identify mesh format")


def _sniff_stl(data: bytes) -> MeshFormat:
    if _binary_stl_length_consistent(data):
        return MeshFormat.STL_BINARY
    return MeshFormat.STL_ASCII


def _binary_stl_length_consistent(data: bytes) -> bool:
    if len(data) < _BINARY_STL_HEADER + 4:
        return False
    (count,) = struct.unpack_from("<I", data, _BINARY_STL_HEADER)
    return len(data) == _BINARY_STL_HEADER + 4 + count * _BINARY_STL_RECORD


def _looks_like_obj(data: bytes) -> bool:
    try:
        text = data[:4096].decode("utf-8")
    except UnicodeDecodeError:
        return False
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        token = stripped.split(None, 1)[0]
        if token in ("v", "f", "vn", "vt", "o", "g", "s", "mtllib", "usemtl", "l"):
            return True
        return False
    return False


def _parse_stl_ascii(data: bytes) -> TriangleMesh:
    try:
        text = data.decode("utf-8", errors="replace")
    except Exception as exc:  # pragma: no cover - decode with replace cannot raise
        raise MalformedFile("undecodable ASCII STL") from exc
    coords: list[tuple[float, float, float]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].lower() != "vertex":
            continue
        if len(parts) < 4:
            raise MalformedFile(f"line {lineno}: vertex needs 3 coordinates")
        try:
            coords.append((float(parts[1]), float(parts[2]), float(parts[3])))
        except ValueError as exc:
            raise MalformedFile(f"line {lineno}: non-numeric vertex coordinate") from exc
    if len(coords) % 3 != 0:
        raise MalformedFile("vertex count is not a multiple of 3")
    verts = np.array(coords, dtype=np.float64).reshape(-1, 3)
    tris = np.arange(len(verts), dtype=np.int64).reshape(-1, 3)
    return TriangleMesh(verts, tris, MeshFormat.STL_ASCII)


def _parse_stl_binary(data: bytes) -> TriangleMesh:
    if len(data) < _BINARY_STL_HEADER + 4:
        raise MalformedFile("binary STL shorter than its header")
    (count,) = struct.unpack_from("<I", data, _BINARY_STL_HEADER)
    expected = _BINARY_STL_HEADER + 4 + count * _BINARY_STL_RECORD
    if len(data) < expected:
        raise MalformedFile(
            f"binary STL truncated: header promises {count} facets, "
            f"{len(data)} of {expected} bytes present"
        )
    records = np.frombuffer(
        data, dtype=_BINARY_STL_DTYPE, count=count, offset=_BINARY_STL_HEADER + 4
    )
    verts = records["verts"].reshape(-1, 3).astype(np.float64)
    tris = np.arange(len(verts), dtype=np.int64).reshape(-1, 3)
    return TriangleMesh(verts, tris, MeshFormat.STL_BINARY)


def _parse_obj(data: bytes) -> TriangleMesh:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedFile("OBJ is not valid UTF-8") from exc
    verts: list[tuple[float, float, float]] = []
    tris: list[tuple[int, int, int]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise MalformedFile(f"line {lineno}: v needs 3 coordinates")
            try:
                verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError as exc:
                raise MalformedFile(f"line {lineno}: non-numeric coordinate") from exc
        elif parts[0] == "f":
            if len(parts) < 4:
                raise MalformedFile(f"line {lineno}: face needs at least 3 vertices")
            idx = [_obj_vertex_index(tok, len(verts), lineno) for tok in parts[1:]]
            # polygons become a fan anchored at the first vertex
            for a, b in zip(idx[1:], idx[2:]):
                tris.append((idx[0], a, b))
        # vn / vt / o / g / s / usemtl and friends are ignored
    tri_arr = np.array(tris, dtype=np.int64).reshape(-1, 3)
    vert_arr = np.array(verts, dtype=np.float64).reshape(-1, 3)
    if tri_arr.size and tri_arr.max() >= len(vert_arr):
        raise MalformedFile("face references a vertex that does not exist")
    return TriangleMesh(vert_arr, tri_arr, MeshFormat.OBJ)


def _obj_vertex_index(token: str, n_vertices: int, lineno: int) -> int:
    head = token.split("/", 1)[0]
    try:
        raw = int(head)
    except ValueError as exc:
        raise MalformedFile(f"line {lineno}: bad face index {token!r}") from exc
    if raw == 0:
        raise MalformedFile(f"line {lineno}: OBJ indices are 1-based, got 0")
    idx = raw - 1 if raw > 0 else n_vertices + raw
    if idx < 0 or idx >= n_vertices:
        raise MalformedFile(f"line {lineno}: face index {raw} out of range")
    return idx


# --- serialization ---------------------------------------------------------


def serialize_mesh(mesh: TriangleMesh, fmt: MeshFormat | str) -> bytes:
    """Write the mesh back out. ASCII floats use repr so round-trips are exact."""
    if isinstance(fmt, str):
        fmt = MeshFormat(fmt.lower())
    if fmt is MeshFormat.STL_ASCII:
        return _write_stl_ascii(mesh)
    if fmt is MeshFormat.STL_BINARY:
        return _write_stl_binary(mesh)
    return _write_obj(mesh)


def _facet_normals(coords: np.ndarray) -> np.ndarray:
    normals = np.cross(coords[:, 1] - coords[:, 0], coords[:, 2] - coords[:, 0])
    lengths = np.linalg.norm(normals, axis=1)
    safe = np.where(lengths > 0, lengths, 1.0)
    return normals / safe[:, None]


def _write_stl_ascii(mesh: TriangleMesh) -> bytes:
    coords = mesh.triangle_coords()
    normals = _facet_normals(coords) if len(coords) else coords.reshape(0, 3)
    lines = ["solid blockplan"]
    for tri, normal in zip(coords, normals):
        nx, ny, nz = (float(v) for v in normal)
        lines.append(f"  facet normal {nx!r} {ny!r} {nz!r}")
        lines.append("    outer loop")
        for vx, vy, vz in tri:
            lines.append(f"      vertex {float(vx)!r} {float(vy)!r} {float(vz)!r}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append("endsolid blockplan")
    return ("\n".join(lines) + "\n").encode("ascii")


def _write_stl_binary(mesh: TriangleMesh) -> bytes:
    coords = mesh.triangle_coords()
    records = np.zeros(len(coords), dtype=_BINARY_STL_DTYPE)
    if len(coords):
        records["normal"] = _facet_normals(coords).astype(np.float32)
        records["verts"] = coords.astype(np.float32)
    header = b"blockplan binary stl".ljust(_BINARY_STL_HEADER, b"\0")
    return header + struct.pack("<I", len(coords)) + records.tobytes()


def _write_obj(mesh: TriangleMesh) -> bytes:
    lines = ["# blockplan mesh"]
    for vx, vy, vz in mesh.vertices:
        lines.append(f"v {float(vx)!r} {float(vy)!r} {float(vz)!r}")
    for a, b, c in mesh.triangles:
        lines.append(f"f {a + 1} {b + 1} {c + 1}")
    return ("\n".join(lines) + "\n").encode("ascii")


# --- repair ----------------------------------------------------------------


def repair_mesh(
    mesh: TriangleMesh, weld_tolerance: float = DEFAULT_WELD_TOLERANCE
) -> TriangleMesh:
    """Weld near-coincident vertices and clean up the triangle set.

    Degenerate (area < 1e-9 cm^2) and duplicate triangles are removed,
    windings are unified across manifold edges, and the returned mesh
    carries a :class:`RepairSummary` (``.repair``). Non-manifold regions
    are left untouched and only flagged. Idempotent.
    """
    if weld_tolerance < 0:
        raise ValueError("weld_tolerance must be >= 0")
    verts = np.array(mesh.vertices, dtype=np.float64)
    tris = np.array(mesh.triangles, dtype=np.int64)

    welded = 0
    if len(verts) > 1 and weld_tolerance > 0:
        verts, tris, welded = _weld(verts, tris, weld_tolerance)

    degenerate = 0
    if len(tris):
        distinct = (
            (tris[:, 0] != tris[:, 1])
            & (tris[:, 1] != tris[:, 2])
            & (tris[:, 0] != tris[:, 2])
        )
        degenerate += int((~distinct).sum())
        tris = tris[distinct]
    if len(tris):
        coords = verts[tris]
        areas = 0.5 * np.linalg.norm(
            np.cross(coords[:, 1] - coords[:, 0], coords[:, 2] - coords[:, 0]), axis=1
        )
        thin = areas < DEGENERATE_AREA
        degenerate += int(thin.sum())
        tris = tris[~thin]

    duplicates = 0
    if len(tris):
        keys = np.sort(tris, axis=1)
        _, first = np.unique(keys, axis=0, return_index=True)
        duplicates = len(tris) - len(first)
        tris = tris[np.sort(first)]

    flipped = 0
    if len(tris):
        tris, flipped = _unify_windings(tris)

    manifold = _is_manifold_triangles(tris)

    if len(tris):
        used = np.unique(tris)
        if len(used) < len(verts):
            remap = np.full(len(verts), -1, dtype=np.int64)
            remap[used] = np.arange(len(used))
            verts = verts[used]
            tris = remap[tris]

    summary = RepairSummary(welded, degenerate, duplicates, flipped, manifold)
    return TriangleMesh(verts, tris, mesh.format_origin, summary)


def _weld(
    verts: np.ndarray, tris: np.ndarray, tolerance: float
) -> tuple[np.ndarray, np.ndarray, int]:
    pairs = cKDTree(verts).query_pairs(tolerance, output_type="ndarray")
    if not len(pairs):
        return verts, tris, 0
    parent = np.arange(len(verts))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            # smaller index wins so the first occurrence keeps its coordinates
            lo, hi = (ra, rb) if ra < rb else (rb, ra)
            parent[hi] = lo

    roots = np.array([find(i) for i in range(len(verts))])
    reps = np.unique(roots)
    new_index = np.full(len(verts), -1, dtype=np.int64)
    new_index[reps] = np.arange(len(reps))
    mapped = new_index[roots]
    return verts[reps], mapped[tris] if len(tris) else tris, len(verts) - len(reps)


def _unify_windings(tris: np.ndarray) -> tuple[np.ndarray, int]:
    """Flip triangles so manifold edges are traversed in opposite directions.

    Works per connected component; edges shared by anything other than
    exactly two triangles are skipped.
    """
    tris = tris.copy()
    edge_owners: dict[tuple[int, int], list[int]] = defaultdict(list)
    for t, (a, b, c) in enumerate(tris):
        for u, v in ((a, b), (b, c), (c, a)):
            edge_owners[(min(u, v), max(u, v))].append(t)

    def directed_edges(t: int) -> tuple[tuple[int, int], ...]:
        a, b, c = tris[t]
        return ((a, b), (b, c), (c, a))

    flipped = 0
    seen = np.zeros(len(tris), dtype=bool)
    for seed in range(len(tris)):
        if seen[seed]:
            continue
        seen[seed] = True
        queue = deque([seed])
        while queue:
            t = queue.popleft()
            for u, v in directed_edges(t):
                owners = edge_owners[(min(u, v), max(u, v))]
                if len(owners) != 2:
                    continue
                other = owners[0] if owners[1] == t else owners[1]
                if seen[other]:
                    continue
                if (u, v) in directed_edges(other):
                    tris[other] = tris[other][::-1]
                    flipped += 1
                seen[other] = True
                queue.append(other)
    return tris, flipped


def _is_manifold_triangles(tris: np.ndarray) -> bool:
    """Closed 2-manifold test: every edge belongs to exactly two triangles."""
    if not len(tris):
        return False
    edges = np.sort(tris[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    return bool((counts == 2).all())


def is_manifold(mesh: TriangleMesh) -> bool:
    if mesh.repair is not None:
        return mesh.repair.manifold
    return _is_manifold_triangles(np.asarray(mesh.triangles))
