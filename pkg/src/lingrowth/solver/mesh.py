"""Domains and conforming triangulations in the plane."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParameter, MeshTooCoarse

__all__ = ["Domain2D", "Mesh", "generate_mesh", "disk", "annulus", "convex_polygon"]


@dataclass
class Domain2D:
    """Disk, annulus (both centred at the origin) or convex polygon."""

    kind: str
    params: dict
    exterior_ball_radius: float = 0.0

    def __post_init__(self):
        if self.kind == "disk":
            R = float(self.params["radius"])
            if not R > 0:
                raise InvalidParameter("disk radius must be positive")
            if not self.exterior_ball_radius:
                # any radius works outside a disk; R keeps the constants O(1)
                self.exterior_ball_radius = R
        elif self.kind == "annulus":
            r_in, r_out = float(self.params["r_in"]), float(self.params["r_out"])
            if not (0 < r_in < r_out):
                raise InvalidParameter("annulus needs 0 < r_in < r_out")
            if not self.exterior_ball_radius:
                # balls inside the hole touching the inner circle
                self.exterior_ball_radius = r_in / 2.0
        elif self.kind == "polygon":
            V = np.asarray(self.params["vertices"], dtype=float)
            if V.ndim != 2 or V.shape[1] != 2 or len(V) < 3:
                raise InvalidParameter("polygon needs at least three 2D vertices")
            e1 = np.roll(V, -1, axis=0) - V
            e2 = np.roll(e1, -1, axis=0)
            cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
            if not (np.all(cross > 0) or np.all(cross < 0)):
                raise InvalidParameter("polygon is not strictly convex")
            if cross[0] < 0:
                V = V[::-1]
            self.params = {"vertices": V.tolist()}
            if not self.exterior_ball_radius:
                self.exterior_ball_radius = self.inradius
        else:
            raise InvalidParameter(f"unknown domain kind {self.kind!r}")

    @property
    def vertices(self):
        return np.asarray(self.params["vertices"], dtype=float)

    @property
    def inradius(self):
        """Radius of the largest ball centred at the centre (vertex mean
        for polygons) that fits in the domain, or the half width of an annulus."""
        if self.kind == "disk":
            return float(self.params["radius"])
        if self.kind == "annulus":
            return 0.5 * (self.params["r_out"] - self.params["r_in"])
        V = self.vertices
        c = V.mean(axis=0)
        E = np.roll(V, -1, axis=0) - V
        n = np.stack([E[:, 1], -E[:, 0]], axis=1) / np.linalg.norm(E, axis=1)[:, None]
        return float(np.min(np.sum((V - c) * n, axis=1)))

    @property
    def diameter(self):
        if self.kind == "disk":
            return 2.0 * self.params["radius"]
        if self.kind == "annulus":
            return 2.0 * self.params["r_out"]
        V = self.vertices
        return float(np.max(np.linalg.norm(V[:, None] - V[None], axis=2)))

    @property
    def area(self):
        if self.kind == "disk":
            return math.pi * self.params["radius"] ** 2
        if self.kind == "annulus":
            return math.pi * (self.params["r_out"] ** 2 - self.params["r_in"] ** 2)
        x, y = self.vertices.T
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def boundary_samples(self, n=400):
        """Points on the boundary with outward unit normals."""
        if self.kind in ("disk", "annulus"):
            th = 2 * math.pi * np.arange(n) / n
            u = np.stack([np.cos(th), np.sin(th)], axis=1)
            if self.kind == "disk":
                return self.params["radius"] * u, u
            pts = np.concatenate([self.params["r_in"] * u, self.params["r_out"] * u])
            return pts, np.concatenate([-u, u])
        V = self.vertices
        E = np.roll(V, -1, axis=0) - V
        per = max(2, n // len(V))
        t = (np.arange(per) + 0.5) / per
        pts = (V[:, None, :] + t[None, :, None] * E[:, None, :]).reshape(-1, 2)
        nrm = np.stack([E[:, 1], -E[:, 0]], axis=1) / np.linalg.norm(E, axis=1)[:, None]
        return pts, np.repeat(nrm, per, axis=0)

    def to_dict(self):
        return {"kind": self.kind, "params": self.params,
                "exterior_ball_radius": self.exterior_ball_radius}


def disk(radius=1.0):
    return Domain2D("disk", {"radius": float(radius)})


def annulus(r_in=1.0, r_out=2.0):
    return Domain2D("annulus", {"r_in": float(r_in), "r_out": float(r_out)})


def convex_polygon(vertices):
    return Domain2D("polygon", {"vertices": np.asarray(vertices, dtype=float).tolist()})


@dataclass
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray                 # bool per vertex
    boundary_polyline: list = field(default_factory=list)   # closed loops of vertex ids

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        self.boundary = np.asarray(self.boundary, dtype=bool)
        P = self.vertices[self.triangles]
        d1 = P[:, 1] - P[:, 0]
        d2 = P[:, 2] - P[:, 0]
        self.areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        # gradients of the three hat functions on each triangle
        e = np.stack([P[:, 2] - P[:, 1], P[:, 0] - P[:, 2], P[:, 1] - P[:, 0]], axis=1)
        self.basis_grad = np.stack([-e[..., 1], e[..., 0]], axis=2) / (2.0 * self.areas)[:, None, None]

    @property
    def h(self):
        P = self.vertices[self.triangles]
        return float(np.max(np.linalg.norm(P - np.roll(P, 1, axis=1), axis=2)))

    @property
    def interior(self):
        return np.flatnonzero(~self.boundary)

    def gradients(self, u):
        # difference form: exact zero for constant fields
        U = u[self.triangles]
        d = U[:, 1:] - U[:, :1]
        return np.einsum("tk,tkd->td", d, self.basis_grad[:, 1:])

    def boundary_triangles(self):
        return np.any(self.boundary[self.triangles], axis=1)

    def hash(self):
        h = hashlib.sha256()
        h.update(self.vertices.astype("<f8").tobytes())
        h.update(self.triangles.astype("<i8").tobytes())
        return h.hexdigest()

    def to_dict(self):
        return {"vertices": self.vertices.tolist(), "triangles": self.triangles.tolist(),
                "boundary": np.flatnonzero(self.boundary).tolist(),
                "boundary_polyline": [list(map(int, loop)) for loop in self.boundary_polyline]}


# --------------------------------------------------------------------------

def _zip_rings(ia, aa, ib, ab):
    """Triangulate the strip between two closed rings given vertex ids and
    angles (increasing, starting near 0)."""
    na, nb = len(ia), len(ib)
    a = np.append(aa, aa[0] + 2 * math.pi)
    b = np.append(ab, ab[0] + 2 * math.pi)
    tris = []
    i = j = 0
    while i < na or j < nb:
        if j == nb or (i < na and a[i + 1] <= b[j + 1]):
            tris.append((ia[i % na], ia[(i + 1) % na], ib[j % nb]))
            i += 1
        else:
            tris.append((ia[i % na], ib[(j + 1) % nb], ib[j % nb]))
            j += 1
    return tris


def _polar_mesh(radii, h, center_point):
    verts = []
    rings = []
    tris = []
    if center_point:
        verts.append((0.0, 0.0))
    for k, r in enumerate(radii):
        n = max(6, int(math.ceil(2 * math.pi * r / (0.8 * h))))
        th = 2 * math.pi * np.arange(n) / n
        ids = np.arange(len(verts), len(verts) + n)
        verts.extend(zip(r * np.cos(th), r * np.sin(th)))
        rings.append((ids, th))
    if center_point:
        ids, _ = rings[0]
        n = len(ids)
        tris.extend((0, ids[i], ids[(i + 1) % n]) for i in range(n))
    for (ia, aa), (ib, ab) in zip(rings[:-1], rings[1:]):
        tris.extend(_zip_rings(ia, aa, ib, ab))
    V = np.array(verts)
    T = np.array(tris, dtype=np.int64)
    # enforce positive orientation
    P = V[T]
    area = (P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1]) - \
           (P[:, 1, 1] - P[:, 0, 1]) * (P[:, 2, 0] - P[:, 0, 0])
    T[area < 0] = T[area < 0][:, [0, 2, 1]]
    return V, T, rings


def _graded(lo, hi, n, grading):
    t = np.linspace(0.0, 1.0, n + 1)
    return lo + (hi - lo) * t ** grading


def generate_mesh(D, h_target, grading=1.0):
    """Conforming triangulation with max edge roughly h_target.

    Disk and annulus: concentric rings joined by strips; boundary vertices lie
    exactly on the circles.  ``grading > 1`` clusters annulus rings towards
    the inner circle (ring spacing (j/n)^grading).  Convex polygon: fan from
    the centroid, each fan triangle refined uniformly.
    """
    h = float(h_target)
    if not h > 0:
        raise InvalidParameter("h_target must be positive")
    if D.kind == "disk":
        R = D.params["radius"]
        n = max(1, int(math.ceil(R / h)))
        radii = R * np.arange(1, n + 1) / n
        V, T, rings = _polar_mesh(radii, h, center_point=True)
        boundary = np.zeros(len(V), dtype=bool)
        boundary[rings[-1][0]] = True
        V[rings[-1][0]] *= R / np.linalg.norm(V[rings[-1][0]], axis=1)[:, None]
        loops = [rings[-1][0]]
    elif D.kind == "annulus":
        r_in, r_out = D.params["r_in"], D.params["r_out"]
        n = max(1, int(math.ceil((r_out - r_in) / h)))
        if grading != 1.0:
            # finest spacing near r_in, coarsest not beyond h
            n = max(n, int(math.ceil((r_out - r_in) / h * grading)))
        radii = _graded(r_in, r_out, n, grading)
        V, T, rings = _polar_mesh(radii, h, center_point=False)
        boundary = np.zeros(len(V), dtype=bool)
        for ids in (rings[0][0], rings[-1][0]):
            boundary[ids] = True
        loops = [rings[0][0], rings[-1][0]]
    else:
        V, T, boundary, loops = _polygon_mesh(D.vertices, h)
    mesh = Mesh(V, T, boundary, [np.asarray(l) for l in loops])
    if len(mesh.interior) < 3:
        raise MeshTooCoarse(f"h = {h:g} leaves {len(mesh.interior)} interior vertices")
    return mesh


def _polygon_mesh(V, h):
    nv = len(V)
    c = V.mean(axis=0)
    spokes = np.linalg.norm(V - c, axis=1)
    edges = np.linalg.norm(np.roll(V, -1, axis=0) - V, axis=1)
    m = max(1, int(math.ceil(max(spokes.max(), edges.max()) / h)))
    index = {}
    pts = []

    def vid(key, p):
        if key not in index:
            index[key] = len(pts)
            pts.append(p)
        return index[key]

    def key(k, i, j):
        # canonical labels so points on shared spokes are created once
        if i == 0 and j == 0:
            return ("c",)
        if j == 0:
            return ("s", k, i)
        if i == 0:
            return ("s", (k + 1) % nv, j)
        return ("t", k, i, j)

    tris = []
    for k in range(nv):
        A = V[k] - c
        B = V[(k + 1) % nv] - c
        ids = {}
        for i in range(m + 1):
            for j in range(m + 1 - i):
                ids[i, j] = vid(key(k, i, j), c + (i * A + j * B) / m)
        for i in range(m):
            for j in range(m - i):
                tris.append((ids[i, j], ids[i + 1, j], ids[i, j + 1]))
                if i + j < m - 1:
                    tris.append((ids[i + 1, j], ids[i + 1, j + 1], ids[i, j + 1]))
    P = np.array(pts)
    boundary = np.zeros(len(P), dtype=bool)
    loop = []
    for k in range(nv):
        for i in range(m, 0, -1):
            loop.append(index[key(k, i, m - i)])
    boundary[loop] = True
    return P, np.array(tris, dtype=np.int64), boundary, [loop]
