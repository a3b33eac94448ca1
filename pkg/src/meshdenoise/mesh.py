"""Triangle meshes: storage, ASCII OFF/OBJ I/O, edges, normals, icospheres."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np


class MeshFormatError(ValueError):
    """Malformed mesh file. ``lineno`` is 1-based (0 when unknown)."""

    def __init__(self, message: str, lineno: int = 0):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno else message)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Vertex coordinates (n, 3) plus triangle index triples (m, 3).

    Both arrays are copied and made read-only on construction.
    """

    vertices: np.ndarray
    faces: np.ndarray = field(default_factory=lambda: np.empty((0, 3), np.int64))

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        f = np.asarray(self.faces, dtype=np.int64)
        if f.size == 0:
            f = f.reshape(0, 3)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must be (n, 3), got {v.shape}")
        if v.shape[0] < 1:
            raise ValueError("a mesh needs at least one vertex")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must be (m, 3), got {f.shape}")
        if f.size:
            if f.min() < 0 or f.max() >= v.shape[0]:
                raise ValueError("face index out of range")
            if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
                raise ValueError("face with repeated vertex index")
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "faces", _frozen(f))

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    def with_vertices(self, vertices: np.ndarray) -> "Mesh":
        return Mesh(vertices, self.faces)

    def bbox_diagonal(self) -> float:
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (np.array_equal(self.vertices, other.vertices)
                and np.array_equal(self.faces, other.faces))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class EdgeSet:
    """Undirected edges as an (e, 2) array, i < j, sorted and unique."""

    edges: np.ndarray
    n_vertices: int

    def __len__(self):
        return self.edges.shape[0]


@dataclass(frozen=True, eq=False)
class NormalField:
    normals: np.ndarray
    degenerate: np.ndarray  # bool mask; flagged rows are exactly zero


# ---------------------------------------------------------------------------
# parsing

def _lines(data) -> Iterator[tuple[int, list[str]]]:
    """Yield (lineno, tokens) for non-blank lines with comments stripped."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("ascii")
    for lineno, line in enumerate(io.StringIO(data), start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _as_float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise MeshFormatError(f"bad coordinate {tok!r}", lineno) from None


def _as_int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise MeshFormatError(f"bad integer {tok!r}", lineno) from None


def parse_off(data: bytes | str) -> Mesh:
    """Parse an ASCII OFF file.

    The counts may follow ``OFF`` on the same line or sit on the next one.
    Tokens after the three indices of a face line (e.g. colors) are ignored.
    """
    lines = _lines(data)
    last = 0

    def take():
        nonlocal last
        try:
            lineno, toks = next(lines)
        except StopIteration:
            raise MeshFormatError("unexpected end of file", last + 1) from None
        last = lineno
        return lineno, toks

    lineno, toks = take()
    if toks[0] != "OFF":
        raise MeshFormatError(f"expected 'OFF' header, got {toks[0]!r}", lineno)
    counts = toks[1:]
    if not counts:
        lineno, counts = take()
    if len(counts) < 2:
        raise MeshFormatError("counts line needs vertex and face counts", lineno)
    n, m = _as_int(counts[0], lineno), _as_int(counts[1], lineno)
    if n < 1 or m < 0:
        raise MeshFormatError(f"invalid counts n={n} f={m}", lineno)

    verts = np.empty((n, 3))
    for i in range(n):
        lineno, toks = take()
        if len(toks) < 3:
            raise MeshFormatError("vertex line needs 3 coordinates", lineno)
        verts[i] = [_as_float(t, lineno) for t in toks[:3]]

    faces = np.empty((m, 3), np.int64)
    for i in range(m):
        lineno, toks = take()
        k = _as_int(toks[0], lineno)
        if k != 3:
            raise MeshFormatError(f"non-triangular face ({k} vertices)", lineno)
        if len(toks) < 4:
            raise MeshFormatError("face line truncated", lineno)
        idx = [_as_int(t, lineno) for t in toks[1:4]]
        _check_face(idx, n, lineno)
        faces[i] = idx
    return Mesh(verts, faces)


def _check_face(idx: list[int], n: int, lineno: int) -> None:
    for j in idx:
        if not 0 <= j < n:
            raise MeshFormatError(f"vertex index {j} out of range [0, {n})", lineno)
    if len(set(idx)) != 3:
        raise MeshFormatError("face with repeated vertex index", lineno)


def parse_obj(data: bytes | str) -> Mesh:
    """Parse the ``v``/``f`` records of an ASCII OBJ file.

    ``f`` indices are 1-based and may carry ``/vt/vn`` suffixes, which are
    dropped. Relative (negative) indices are rejected.
    """
    verts: list[list[float]] = []
    faces: list[tuple[list[int], int]] = []
    for lineno, toks in _lines(data):
        tag = toks[0]
        if tag == "v":
            if len(toks) < 4:
                raise MeshFormatError("vertex record needs 3 coordinates", lineno)
            verts.append([_as_float(t, lineno) for t in toks[1:4]])
        elif tag == "f":
            if len(toks) != 4:
                raise MeshFormatError(f"non-triangular face ({len(toks) - 1} vertices)", lineno)
            idx = []
            for t in toks[1:]:
                j = _as_int(t.split("/", 1)[0], lineno)
                if j < 0:
                    raise MeshFormatError("negative (relative) face index", lineno)
                if j == 0:
                    raise MeshFormatError("face index 0 is invalid in OBJ", lineno)
                idx.append(j - 1)
            faces.append((idx, lineno))
    if not verts:
        raise MeshFormatError("no vertex records")
    n = len(verts)
    for idx, lineno in faces:
        _check_face(idx, n, lineno)
    f = np.array([idx for idx, _ in faces], np.int64).reshape(-1, 3)
    return Mesh(np.array(verts), f)


def write_off(mesh: Mesh) -> bytes:
    out = io.StringIO()
    out.write("OFF\n")
    out.write(f"{mesh.n_vertices} {mesh.n_faces} {len(extract_edges(mesh))}\n")
    for x, y, z in mesh.vertices:
        out.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
    for a, b, c in mesh.faces:
        out.write(f"3 {a} {b} {c}\n")
    return out.getvalue().encode("ascii")


def write_obj(mesh: Mesh) -> bytes:
    out = io.StringIO()
    for x, y, z in mesh.vertices:
        out.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
    for a, b, c in mesh.faces:
        out.write(f"f {a + 1} {b + 1} {c + 1}\n")
    return out.getvalue().encode("ascii")


def read_mesh(path) -> Mesh:
    """Read an ``.off`` or ``.obj`` file, dispatching on the suffix."""
    path = str(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if path.lower().endswith(".obj"):
        return parse_obj(data)
    return parse_off(data)


def write_mesh(mesh: Mesh, path) -> None:
    path = str(path)
    data = write_obj(mesh) if path.lower().endswith(".obj") else write_off(mesh)
    with open(path, "wb") as fh:
        fh.write(data)


# ---------------------------------------------------------------------------
# connectivity and normals

def extract_edges(mesh: Mesh) -> EdgeSet:
    f = mesh.faces
    if f.shape[0] == 0:
        return EdgeSet(np.empty((0, 2), np.int64), mesh.n_vertices)
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    e.sort(axis=1)
    e = np.unique(e, axis=0)
    e.flags.writeable = False
    return EdgeSet(e, mesh.n_vertices)


def vertex_normals(mesh: Mesh) -> NormalField:
    """Area-weighted vertex normals.

    Each face contributes half the cross product of its edge vectors to its
    three corners. Vertices whose accumulated normal vanishes (isolated, or
    with cancelling faces) get a zero row and are flagged degenerate.
    """
    v, f = mesh.vertices, mesh.faces
    acc = np.zeros_like(v)
    weight = np.zeros(v.shape[0])
    if f.shape[0]:
        fn = 0.5 * np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        area = np.linalg.norm(fn, axis=1)
        for c in range(3):
            np.add.at(acc, f[:, c], fn)
            np.add.at(weight, f[:, c], area)
    norm = np.linalg.norm(acc, axis=1)
    degenerate = norm <= 1e-12 * weight
    degenerate |= norm == 0.0
    normals = np.zeros_like(v)
    ok = ~degenerate
    normals[ok] = acc[ok] / norm[ok, None]
    normals.flags.writeable = False
    degenerate.flags.writeable = False
    return NormalField(normals, degenerate)


# ---------------------------------------------------------------------------
# synthetic meshes

def icosahedron() -> Mesh:
    """Regular icosahedron inscribed in the unit sphere, faces outward (CCW)."""
    t = (1.0 + 5 ** 0.5) / 2.0
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=np.float64)
    v /= np.linalg.norm(v, axis=1)[:, None]
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return Mesh(v, f)


def geodesic_sphere(frequency: int) -> Mesh:
    """Unit sphere from an icosahedron whose edges are split into ``frequency`` parts.

    Every icosahedron face is tiled by a triangular grid of ``frequency**2``
    triangles and the grid points are projected onto the sphere. The result
    has ``10 * frequency**2 + 2`` vertices and ``20 * frequency**2`` faces.
    """
    if frequency < 1:
        raise ValueError("frequency must be >= 1")
    base = icosahedron()
    bv = base.vertices
    fq = frequency
    index: dict[tuple, int] = {}
    points: list[np.ndarray] = []
    faces: list[tuple[int, int, int]] = []

    def vid(corners, i, j):
        w = (fq - i - j, i, j)
        key = tuple(sorted((c, wc) for c, wc in zip(corners, w) if wc))
        k = index.get(key)
        if k is None:
            k = index[key] = len(points)
            points.append((w[0] * bv[corners[0]] + w[1] * bv[corners[1]]
                           + w[2] * bv[corners[2]]) / fq)
        return k

    for corners in base.faces.tolist():
        grid = {}
        for i in range(fq + 1):
            for j in range(fq + 1 - i):
                grid[i, j] = vid(corners, i, j)
        for i in range(fq):
            for j in range(fq - i):
                faces.append((grid[i, j], grid[i + 1, j], grid[i, j + 1]))
                if i + j < fq - 1:
                    faces.append((grid[i + 1, j], grid[i + 1, j + 1], grid[i, j + 1]))
    p = np.array(points)
    p /= np.linalg.norm(p, axis=1)[:, None]
    return Mesh(p, np.array(faces, np.int64))


def icosphere(subdivisions: int) -> Mesh:
    """Unit icosphere at subdivision level ``subdivisions``.

    Connectivity matches k rounds of 1-to-4 triangle splitting; vertices are
    placed on the flat face grid of frequency 2**k and projected. Level k has
    ``10 * 4**k + 2`` vertices (12, 42, 162, 642, 2562, 10242, ...).
    """
    if subdivisions < 0:
        raise ValueError("subdivisions must be >= 0")
    return geodesic_sphere(2 ** subdivisions)
