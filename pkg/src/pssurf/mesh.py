"""Triangle meshes, angle-defect curvature and OBJ/CSV export."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MIN_AREA = 1e-12


@dataclass
class SurfaceMesh:
    vertices: np.ndarray
    faces: np.ndarray
    attributes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face index out of range")
        if self.faces.size and np.any(triangle_areas(self.vertices, self.faces) < MIN_AREA):
            raise ValueError("degenerate triangle below minimum area")


def triangle_areas(vertices, faces):
    p0, p1, p2 = (vertices[faces[:, k]] for k in range(3))
    return 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)


def boundary_vertices(mesh: SurfaceMesh) -> np.ndarray:
    """Boolean mask of vertices lying on an edge with a single incident face."""
    f = mesh.faces
    edges = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    mask = np.zeros(len(mesh.vertices), dtype=bool)
    mask[uniq[counts == 1].ravel()] = True
    used = np.zeros(len(mesh.vertices), dtype=bool)
    used[f.ravel()] = True
    mask |= ~used
    return mask


def discrete_gauss_curvature(mesh: SurfaceMesh) -> np.ndarray:
    """Angle defect over mixed Voronoi area; nan on boundary vertices."""
    V, F = mesh.vertices, mesh.faces
    nv = len(V)
    angle_sum = np.zeros(nv)
    area = np.zeros(nv)
    if len(F):
        P = [V[F[:, k]] for k in range(3)]
        tri_area = triangle_areas(V, F)
        angles = []
        for k in range(3):
            u = P[(k + 1) % 3] - P[k]
            w = P[(k + 2) % 3] - P[k]
            cosang = np.einsum("ij,ij->i", u, w) / (np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1))
            angles.append(np.arccos(np.clip(cosang, -1.0, 1.0)))
        angles = np.array(angles)  # (3, m)
        obtuse = angles > np.pi / 2
        any_obtuse = obtuse.any(axis=0)
        for k in range(3):
            i, j, l = k, (k + 1) % 3, (k + 2) % 3
            # Voronoi share of vertex k: edges k-j and k-l weighted by opposite cotangents
            e_kj = np.sum((P[j] - P[i]) ** 2, axis=1)
            e_kl = np.sum((P[l] - P[i]) ** 2, axis=1)
            voronoi = (e_kj / np.tan(angles[l]) + e_kl / np.tan(angles[j])) / 8.0
            share = np.where(
                any_obtuse, np.where(obtuse[i], tri_area / 2.0, tri_area / 4.0), voronoi
            )
            np.add.at(area, F[:, k], share)
            np.add.at(angle_sum, F[:, k], angles[k])
    with np.errstate(divide="ignore", invalid="ignore"):
        K = (2 * np.pi - angle_sum) / area
    K[boundary_vertices(mesh)] = np.nan
    return K


def grid_mesh(points: np.ndarray, valid: np.ndarray, attributes=None) -> SurfaceMesh:
    """Triangulate a (rows, cols, 3) grid of points; cells need all four corners valid.

    Each quad is split along its shorter diagonal.
    """
    rows, cols = valid.shape
    index = -np.ones((rows, cols), dtype=np.int64)
    index[valid] = np.arange(int(valid.sum()))
    verts = points[valid]
    faces = []
    for r in range(rows - 1):
        for c in range(cols - 1):
            a, b, d, e = index[r, c], index[r, c + 1], index[r + 1, c], index[r + 1, c + 1]
            if min(a, b, d, e) < 0:
                continue
            if np.sum((verts[a] - verts[e]) ** 2) <= np.sum((verts[b] - verts[d]) ** 2):
                cand = ((a, b, e), (a, e, d))
            else:
                cand = ((a, b, d), (b, e, d))
            faces.extend(cand)
    faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
    if len(faces):
        faces = faces[triangle_areas(verts, faces) >= MIN_AREA]
    attrs = {k: np.asarray(v)[valid] for k, v in (attributes or {}).items()}
    return SurfaceMesh(verts, faces, attrs)


def icosphere(subdivisions: int = 4) -> SurfaceMesh:
    """Unit sphere by repeated midpoint subdivision of an icosahedron."""
    phi = (1 + 5**0.5) / 2
    verts = [(-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
             (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
             (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return SurfaceMesh(np.array(verts), np.array(faces))


def _fmt(v: float) -> str:
    return repr(float(v))


def export_mesh(mesh: SurfaceMesh, path, format: str = "obj", curvature=None, mask=None):
    """Write an ASCII OBJ; with ``curvature`` also a parallel ``<stem>_curvature.csv``."""
    if format != "obj":
        raise ValueError(f"unsupported mesh format {format!r}")
    path = Path(path)
    lines = [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in mesh.vertices]
    lines += [f"f {i + 1} {j + 1} {k + 1}" for i, j, k in mesh.faces]
    path.write_text("".join(line + "\n" for line in lines))
    if curvature is not None:
        curvature_csv(curvature_path(path), curvature, mask)
    return path


def curvature_path(obj_path) -> Path:
    obj_path = Path(obj_path)
    return obj_path.with_name(obj_path.stem + "_curvature.csv")


def curvature_csv(path, curvature, mask=None):
    curvature = np.asarray(curvature, dtype=float)
    if mask is None:
        mask = np.ones(curvature.shape, dtype=bool)
    lines = ["vertex_index,K,mask_flag"]
    for i, (k, m) in enumerate(zip(curvature, mask)):
        lines.append(f"{i},{'nan' if np.isnan(k) else _fmt(k)},{int(bool(m))}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path) -> SurfaceMesh:
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(p) for p in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    return SurfaceMesh(np.array(verts).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3))
