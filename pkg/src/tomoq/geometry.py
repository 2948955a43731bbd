"""Face-center direction sets of the polyhedra used as measurement protocols.

All sets are unit vectors from standard vertex tables: tetrahedron inscribed in
the cube, axis-aligned cube/octahedron, golden-ratio icosahedron; dodecahedron
faces sit at icosahedron vertices, truncated-icosahedron ("fullerene") faces at
icosahedron vertices plus icosahedron face centers, and the pentakis
dodecahedron faces at the fullerene vertices (edge trisection points).
"""

from __future__ import annotations

import numpy as np

PHI = (1.0 + np.sqrt(5.0)) / 2.0

SOLIDS = (
    "tetrahedron",
    "cube",
    "octahedron",
    "dodecahedron",
    "icosahedron",
    "fullerene",
    "pentakis_dodecahedron",
)

FACE_COUNTS = {
    "tetrahedron": 4,
    "cube": 6,
    "octahedron": 8,
    "dodecahedron": 12,
    "icosahedron": 20,
    "fullerene": 32,
    "pentakis_dodecahedron": 60,
}


def _unit_rows(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a / np.linalg.norm(a, axis=1, keepdims=True)


def _cyclic(points) -> np.ndarray:
    """All cyclic permutations of each coordinate triple."""
    pts = np.asarray(points, dtype=float)
    return np.concatenate([pts, np.roll(pts, 1, axis=1), np.roll(pts, 2, axis=1)])


def _signs(base, pattern) -> np.ndarray:
    """Sign combinations of `base`, one row per +-1 triple in `pattern`."""
    return np.array([np.asarray(base) * s for s in pattern])


_ALL_SIGNS3 = [(sx, sy, sz) for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)]


def _icosahedron_vertices() -> np.ndarray:
    base = _signs((0.0, 1.0, PHI), [(1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1)])
    return _unit_rows(_cyclic(base))


def _dodecahedron_vertices() -> np.ndarray:
    cube = _signs((1.0, 1.0, 1.0), _ALL_SIGNS3)
    rect = _signs((0.0, 1.0 / PHI, PHI), [(1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1)])
    return _unit_rows(np.concatenate([cube, _cyclic(rect)]))


def _fullerene_vertices() -> np.ndarray:
    """Truncated-icosahedron vertices: both trisection points of every
    icosahedron edge."""
    v = _icosahedron_vertices()
    n = len(v)
    d2 = ((v[:, None, :] - v[None, :, :]) ** 2).sum(axis=2)
    edge2 = np.min(d2[d2 > 1e-9])
    pts = []
    for i in range(n):
        for j in range(i + 1, n):
            if abs(d2[i, j] - edge2) < 1e-9:
                pts.append((2.0 * v[i] + v[j]) / 3.0)
                pts.append((v[i] + 2.0 * v[j]) / 3.0)
    return _unit_rows(np.array(pts))


def face_directions(solid: str, rotation: np.ndarray | None = None) -> np.ndarray:
    """Unit face-center directions of a solid, optionally rotated by a common
    3x3 rotation matrix."""
    key = solid.lower()
    if key == "tetrahedron":
        dirs = _unit_rows(_signs((1.0, 1.0, 1.0), [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]))
    elif key == "cube":
        dirs = np.concatenate([np.eye(3), -np.eye(3)])
    elif key == "octahedron":
        dirs = _unit_rows(_signs((1.0, 1.0, 1.0), _ALL_SIGNS3))
    elif key == "dodecahedron":
        dirs = _icosahedron_vertices()
    elif key == "icosahedron":
        dirs = _dodecahedron_vertices()
    elif key == "fullerene":
        dirs = np.concatenate([_icosahedron_vertices(), _dodecahedron_vertices()])
    elif key == "pentakis_dodecahedron":
        dirs = _fullerene_vertices()
    else:
        raise ValueError(f"unknown solid {solid!r}")
    if rotation is not None:
        r = np.asarray(rotation, dtype=float)
        if r.shape != (3, 3) or abs(np.abs(np.linalg.det(r)) - 1.0) > 1e-10:
            raise ValueError("rotation must be a 3x3 orthogonal matrix")
        dirs = dirs @ r.T
    assert len(dirs) == FACE_COUNTS[key]
    return dirs


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic quasi-uniform lattice of n unit directions."""
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    phi = 2.0 * np.pi * i / PHI
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
