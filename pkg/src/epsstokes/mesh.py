"""Conforming triangulations of polygons: construction, file import, validation.

A mesh stores straight-edged triangles with counterclockwise orientation,
boundary edges with integer markers, and unit outward normals per boundary
edge.  Meshes are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Edge markers assigned by build_structured_mesh.
BOTTOM, RIGHT, TOP, LEFT = 1, 2, 3, 4

_GEOM_TOL = 1e-12


class MeshError(ValueError):
    """Base class for mesh construction failures."""


class MeshFormatError(MeshError):
    """Mesh file could not be parsed; message carries the line number."""


class MeshTopologyError(MeshError):
    """Mesh violates a topological invariant; message names the simplex."""


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation of a polygon.

    vertices       : (K, 2) float array of coordinates
    triangles      : (M, 3) int array of vertex indices, counterclockwise
    boundary_edges : (B, 3) int array of rows (i, j, marker)
    edge_normals   : (B, 2) float array, unit outward normal per boundary edge
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_normals: np.ndarray

    def __post_init__(self):
        for name in ("vertices", "triangles", "boundary_edges", "edge_normals"):
            getattr(self, name).setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def num_boundary_edges(self) -> int:
        return self.boundary_edges.shape[0]

    def triangle_areas(self) -> np.ndarray:
        """Signed areas (positive for counterclockwise triangles)."""
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def boundary_edge_lengths(self) -> np.ndarray:
        d = (self.vertices[self.boundary_edges[:, 1]]
             - self.vertices[self.boundary_edges[:, 0]])
        return np.hypot(d[:, 0], d[:, 1])


def _outward_normals(vertices, edges):
    # Edges are oriented with the domain on the left, so rotating the edge
    # direction by -90 degrees points outward.
    d = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    length = np.hypot(d[:, 0], d[:, 1])
    if np.any(length <= 0.0):
        k = int(np.argmin(length))
        raise MeshTopologyError(f"boundary edge {k} has zero length")
    return np.column_stack((d[:, 1], -d[:, 0])) / length[:, None]


def build_structured_mesh(n: int) -> Mesh:
    """Uniform n-by-n triangulation of the unit square.

    Each grid cell is split along its SW-NE diagonal, giving 2n^2 triangles,
    (n+1)^2 vertices and 4n boundary edges.  Boundary markers: 1=bottom,
    2=right, 3=top, 4=left.
    """
    if n < 1:
        raise ValueError(f"subdivision count must be >= 1, got {n}")

    side = np.linspace(0.0, 1.0, n + 1)
    xg, yg = np.meshgrid(side, side)        # row-major: index j*(n+1)+i
    vertices = np.column_stack((xg.ravel(), yg.ravel()))

    def vid(i, j):
        return j * (n + 1) + i

    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    k = 0
    for j in range(n):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            triangles[k] = (v00, v10, v11)      # below the SW-NE diagonal
            triangles[k + 1] = (v00, v11, v01)  # above it
            k += 2

    edges = []
    for i in range(n):                           # bottom, left to right
        edges.append((vid(i, 0), vid(i + 1, 0), BOTTOM))
    for j in range(n):                           # right, upward
        edges.append((vid(n, j), vid(n, j + 1), RIGHT))
    for i in range(n, 0, -1):                    # top, right to left
        edges.append((vid(i, n), vid(i - 1, n), TOP))
    for j in range(n, 0, -1):                    # left, downward
        edges.append((vid(0, j), vid(0, j - 1), LEFT))
    boundary_edges = np.asarray(edges, dtype=np.int64)

    mesh = Mesh(vertices, triangles, boundary_edges,
                _outward_normals(vertices, boundary_edges))
    validate_mesh(mesh)
    return mesh


def load_mesh(path) -> Mesh:
    """Read a mesh from the ASCII format.

    Format: header line ``mesh2d v1``; ``vertices K`` followed by K lines
    ``x y``; ``triangles M`` followed by M lines ``i j k``; ``boundary B``
    followed by B lines ``i j marker``.  Indices are 0-based.  Boundary
    edges are reoriented to run with the domain on their left before
    normals are computed.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()

    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines):
            pos += 1
            stripped = lines[pos - 1].strip()
            if stripped:
                return pos, stripped
        raise MeshFormatError(f"line {len(lines) + 1}: unexpected end of file")

    lineno, header = next_line()
    if header != "mesh2d v1":
        raise MeshFormatError(f"line {lineno}: expected header 'mesh2d v1', got {header!r}")

    def read_section(keyword, width, dtype):
        lineno, head = next_line()
        parts = head.split()
        if len(parts) != 2 or parts[0] != keyword:
            raise MeshFormatError(f"line {lineno}: expected '{keyword} <count>', got {head!r}")
        try:
            count = int(parts[1])
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad count {parts[1]!r}") from None
        rows = np.empty((count, width), dtype=dtype)
        for r in range(count):
            lineno, body = next_line()
            fields = body.split()
            if len(fields) != width:
                raise MeshFormatError(
                    f"line {lineno}: expected {width} fields, got {len(fields)}")
            try:
                rows[r] = [dtype(tok) for tok in fields]
            except ValueError:
                raise MeshFormatError(f"line {lineno}: bad value in {body!r}") from None
        return rows

    vertices = read_section("vertices", 2, float)
    triangles = read_section("triangles", 3, np.int64)
    boundary = read_section("boundary", 3, np.int64)

    nv = len(vertices)
    if triangles.size and (triangles.min() < 0 or triangles.max() >= nv):
        bad = int(np.argwhere((triangles < 0) | (triangles >= nv))[0][0])
        raise MeshTopologyError(f"triangle {bad} references a vertex out of range")
    if boundary.size and (boundary[:, :2].min() < 0 or boundary[:, :2].max() >= nv):
        bad = int(np.argwhere((boundary[:, :2] < 0) | (boundary[:, :2] >= nv))[0][0])
        raise MeshTopologyError(f"boundary edge {bad} references a vertex out of range")

    # Reorient each declared boundary edge to match the traversal of its
    # owning triangle (domain on the left).
    owner_dir = {}
    for t, (a, b, c) in enumerate(triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            owner_dir.setdefault((min(u, v), max(u, v)), []).append((u, v))
    oriented = boundary.copy()
    for k, (i, j, _) in enumerate(boundary):
        key = (min(i, j), max(i, j))
        if key not in owner_dir:
            raise MeshTopologyError(
                f"boundary edge {k} ({i},{j}) is not an edge of any triangle")
        if len(owner_dir[key]) == 1:
            oriented[k, :2] = owner_dir[key][0]

    mesh = Mesh(vertices, triangles, oriented, _outward_normals(vertices, oriented))
    validate_mesh(mesh)
    return mesh


def validate_mesh(mesh: Mesh) -> None:
    """Enforce all mesh invariants; raises MeshTopologyError on violation."""
    areas = mesh.triangle_areas()
    if np.any(areas <= 0.0):
        bad = int(np.argmin(areas))
        raise MeshTopologyError(
            f"triangle {bad} has non-positive area {areas[bad]:.3e} (not counterclockwise)")

    counts = {}
    for t, (a, b, c) in enumerate(mesh.triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            counts[key] = counts.get(key, 0) + 1
    if counts and max(counts.values()) > 2:
        key = max(counts, key=counts.get)
        raise MeshTopologyError(f"edge {key} is shared by more than 2 triangles")

    declared = {}
    for k, (i, j, _) in enumerate(mesh.boundary_edges):
        key = (min(i, j), max(i, j))
        if key in declared:
            raise MeshTopologyError(f"boundary edge {k} duplicates edge {declared[key]}")
        declared[key] = k

    for key, k in declared.items():
        if counts.get(key, 0) != 1:
            raise MeshTopologyError(
                f"boundary edge {k} {key} is shared by {counts.get(key, 0)} triangles "
                "(expected exactly 1)")
    for key, cnt in counts.items():
        if cnt == 1 and key not in declared:
            raise MeshTopologyError(
                f"edge {key} lies on the boundary but is not declared as a boundary edge")

    # Boundary edges must form closed loops: as a directed graph every
    # touched vertex has in-degree 1 and out-degree 1.
    out_deg, in_deg = {}, {}
    for i, j, _ in mesh.boundary_edges:
        out_deg[i] = out_deg.get(i, 0) + 1
        in_deg[j] = in_deg.get(j, 0) + 1
    for v in set(out_deg) | set(in_deg):
        if out_deg.get(v, 0) != 1 or in_deg.get(v, 0) != 1:
            raise MeshTopologyError(
                f"boundary is not a closed loop at vertex {v} "
                f"(out {out_deg.get(v, 0)}, in {in_deg.get(v, 0)})")

    norms = np.hypot(mesh.edge_normals[:, 0], mesh.edge_normals[:, 1])
    if np.any(np.abs(norms - 1.0) > _GEOM_TOL):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise MeshTopologyError(f"normal of boundary edge {bad} is not unit length")

    # Shoelace area of the boundary loops must match the triangle total.
    vi = mesh.vertices[mesh.boundary_edges[:, 0]]
    vj = mesh.vertices[mesh.boundary_edges[:, 1]]
    loop_area = 0.5 * float(np.sum(vi[:, 0] * vj[:, 1] - vj[:, 0] * vi[:, 1]))
    total = float(areas.sum())
    if abs(loop_area - total) > _GEOM_TOL * max(1.0, abs(total)):
        raise MeshTopologyError(
            f"triangle areas sum to {total!r} but the boundary encloses {loop_area!r}")


def mesh_size(mesh: Mesh) -> float:
    """Longest triangle edge in the mesh."""
    p = mesh.vertices[mesh.triangles]
    h = 0.0
    for a, b in ((0, 1), (1, 2), (2, 0)):
        d = p[:, a] - p[:, b]
        h = max(h, float(np.hypot(d[:, 0], d[:, 1]).max()))
    return h
