"""Concrete meshes and the mass-lumped P1 discretisations in 1D and 2D.

Dofs sit at interior vertices; each owns a dual cell (midpoint-to-midpoint in
1D, barycentric in 2D) on which the reconstruction is constant.  Boundary
dual regions belong to no dof and reconstruct to the homogeneous Dirichlet
value zero.  The discrete gradient is the element-wise P1 gradient of the
nodal function vanishing on the boundary.
"""

import numpy as np
import scipy.sparse as sp

from .discretisation import GradientDiscretisation, TimeGrid
from .errors import DegenerateMesh
from .quadrature import gauss_interval, gauss_triangle

__all__ = [
    "Mesh1D",
    "TriMesh2D",
    "build_mass_lumped_p1_1d",
    "build_mass_lumped_p1_2d",
    "RefinementFamily",
    "refine",
]


class Mesh1D:
    """Sorted vertices on an interval; elements are consecutive gaps."""

    def __init__(self, vertices):
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.size < 2 or np.any(np.diff(self.vertices) <= 0):
            raise DegenerateMesh("vertices must strictly increase")

    @classmethod
    def uniform(cls, n_elements, domain=(0.0, 1.0)):
        return cls(np.linspace(domain[0], domain[1], n_elements + 1))

    @classmethod
    def graded(cls, n_elements, domain=(0.0, 1.0), gamma=1.5):
        ref = np.linspace(0.0, 1.0, n_elements + 1) ** gamma
        return cls(domain[0] + (domain[1] - domain[0]) * ref)

    @property
    def n_elements(self):
        return self.vertices.size - 1

    def refined(self):
        mids = 0.5 * (self.vertices[:-1] + self.vertices[1:])
        out = np.empty(self.vertices.size + mids.size)
        out[0::2] = self.vertices
        out[1::2] = mids
        return Mesh1D(out)


class TriMesh2D:
    """Conforming triangulation: vertices, CCW triangles, boundary flags."""

    def __init__(self, vertices, triangles):
        self.vertices = np.asarray(vertices, dtype=float)
        self.triangles = np.asarray(triangles, dtype=int)
        self._orient()
        self.areas = self._areas()
        if np.any(self.areas <= 0):
            raise DegenerateMesh("degenerate triangle in mesh")
        self.boundary_vertex = self._boundary_flags()

    def _orient(self):
        t = self.triangles
        v = self.vertices
        cross = (v[t[:, 1], 0] - v[t[:, 0], 0]) * (v[t[:, 2], 1] - v[t[:, 0], 1]) - (
            v[t[:, 2], 0] - v[t[:, 0], 0]
        ) * (v[t[:, 1], 1] - v[t[:, 0], 1])
        flip = cross < 0
        t[flip] = t[flip][:, [0, 2, 1]]

    def _areas(self):
        v, t = self.vertices, self.triangles
        return 0.5 * (
            (v[t[:, 1], 0] - v[t[:, 0], 0]) * (v[t[:, 2], 1] - v[t[:, 0], 1])
            - (v[t[:, 2], 0] - v[t[:, 0], 0]) * (v[t[:, 1], 1] - v[t[:, 0], 1])
        )

    def _boundary_flags(self):
        from collections import Counter

        count = Counter()
        for tri in self.triangles:
            for a, b in ((0, 1), (1, 2), (2, 0)):
                count[tuple(sorted((tri[a], tri[b])))] += 1
        flags = np.zeros(self.vertices.shape[0], dtype=bool)
        for (a, b), c in count.items():
            if c == 1:
                flags[a] = flags[b] = True
        return flags

    @classmethod
    def structured_square(cls, n, domain=((0.0, 1.0), (0.0, 1.0))):
        (x0, x1), (y0, y1) = domain
        xs = np.linspace(x0, x1, n + 1)
        ys = np.linspace(y0, y1, n + 1)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        verts = np.column_stack([X.ravel(), Y.ravel()])

        def vid(i, j):
            return i * (n + 1) + j

        tris = []
        for i in range(n):
            for j in range(n):
                v00, v10 = vid(i, j), vid(i + 1, j)
                v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
                tris.append((v00, v10, v11))
                tris.append((v00, v11, v01))
        return cls(verts, np.asarray(tris))

    def refined(self):
        """Red refinement: each triangle splits into four via edge midpoints."""
        verts = list(map(tuple, self.vertices))
        index = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in index:
                index[key] = len(verts)
                verts.append(tuple(0.5 * (self.vertices[a] + self.vertices[b])))
            return index[key]

        tris = []
        for a, b, c in self.triangles:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            tris.extend([(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)])
        return TriMesh2D(np.asarray(verts), np.asarray(tris))


class IntervalGeometry:
    """Dof cells as intervals; supports exact translate overlaps."""

    def __init__(self, cells):
        self.cells = np.asarray(cells, dtype=float)

    def overlap_matrix(self, xi):
        a = self.cells[:, 0] - xi[0]
        b = self.cells[:, 1] - xi[0]
        lo = np.maximum(a[:, None], self.cells[None, :, 0])
        hi = np.minimum(b[:, None], self.cells[None, :, 1])
        return np.maximum(hi - lo, 0.0)


class TriangulatedGeometry:
    """Dof cells as polygons; translate overlaps by polygon clipping."""

    def __init__(self, dof_polys):
        self.polys = dof_polys

    def overlap_matrix(self, xi):
        from shapely.affinity import translate
        from shapely.strtree import STRtree

        n = len(self.polys)
        C = np.zeros((n, n))
        if n == 0:
            return C
        tree = STRtree(self.polys)
        for i, poly in enumerate(self.polys):
            moved = translate(poly, -float(xi[0]), -float(xi[1]))
            for j in tree.query(moved):
                inter = moved.intersection(self.polys[int(j)])
                if not inter.is_empty:
                    C[i, int(j)] = inter.area
        return C


def build_mass_lumped_p1_1d(mesh, p=2.0, quad_points=5):
    """Mass-lumped P1 discretisation on a 1D mesh.

    Dofs are the interior vertices; dual cells run midpoint to midpoint and
    the two boundary half-cells reconstruct to zero.
    """
    if mesh.n_elements < 2:
        raise DegenerateMesh("need at least 2 elements for one interior dof")
    x = mesh.vertices
    nel = mesh.n_elements
    n = nel - 1
    mids = 0.5 * (x[:-1] + x[1:])
    lengths = np.diff(x)

    cell_meas = mids[1:] - mids[:-1]
    dof_of_vertex = np.full(x.size, -1, dtype=int)
    dof_of_vertex[1:-1] = np.arange(n)

    rows, cols, vals = [], [], []
    for k in range(nel):
        inv_h = 1.0 / lengths[k]
        for vertex, sgn in ((k, -inv_h), (k + 1, inv_h)):
            d = dof_of_vertex[vertex]
            if d >= 0:
                rows.append(k)
                cols.append(d)
                vals.append(sgn)
    G = sp.csr_matrix((vals, (rows, cols)), shape=(nel, n))

    qp, qw, q_cell, q_owner = [], [], [], []
    for k in range(nel):
        for lo, hi, vertex in ((x[k], mids[k], k), (mids[k], x[k + 1], k + 1)):
            pts, wts = gauss_interval(lo, hi, quad_points)
            qp.append(pts)
            qw.append(wts)
            q_cell.append(np.full(wts.size, k))
            q_owner.append(np.full(wts.size, dof_of_vertex[vertex]))

    cells = np.column_stack([mids[:-1], mids[1:]])
    gd = GradientDiscretisation(
        dim=1,
        p=p,
        cell_meas=cell_meas,
        grad_matrix=G,
        grad_meas=lengths,
        qp=np.vstack(qp),
        qw=np.concatenate(qw),
        q_cell=np.concatenate(q_cell),
        q_owner=np.concatenate(q_owner),
        dof_points=x[1:-1].reshape(-1, 1),
        geometry=IntervalGeometry(cells),
        h=float(np.max(lengths)),
        gd_id=f"p1_1d(n={nel})",
    )
    gd.mesh = mesh
    return gd


def build_mass_lumped_p1_2d(mesh, p=2.0):
    """Mass-lumped P1 discretisation on a conforming triangulation.

    Dual cells are the barycentric subcells (vertex, edge midpoints,
    centroid), one third of each adjacent triangle.
    """
    from shapely.geometry import Polygon
    from shapely.ops import unary_union

    v = mesh.vertices
    tris = mesh.triangles
    dof_of_vertex = np.full(v.shape[0], -1, dtype=int)
    interior = ~mesh.boundary_vertex
    dof_of_vertex[interior] = np.arange(int(interior.sum()))
    n = int(interior.sum())

    rows, cols, vals = [], [], []
    qp, qw, q_cell, q_owner = [], [], [], []
    cell_meas = np.zeros(n)
    dof_quads = [[] for _ in range(n)]

    for k, (a, b, c) in enumerate(tris):
        pa, pb, pc = v[a], v[b], v[c]
        R = np.array([pb - pa, pc - pa])
        Rinv = np.linalg.inv(R)
        gvec = {b: Rinv @ np.array([1.0, 0.0]), c: Rinv @ np.array([0.0, 1.0])}
        gvec[a] = -(gvec[b] + gvec[c])
        for vertex, gv in gvec.items():
            d = dof_of_vertex[vertex]
            if d >= 0:
                for comp in range(2):
                    rows.append(2 * k + comp)
                    cols.append(d)
                    vals.append(gv[comp])
        centroid = (pa + pb + pc) / 3.0
        mids = {
            (a, b): 0.5 * (pa + pb),
            (b, c): 0.5 * (pb + pc),
            (c, a): 0.5 * (pc + pa),
        }
        corner_quads = {
            a: (pa, mids[(a, b)], centroid, mids[(c, a)]),
            b: (pb, mids[(b, c)], centroid, mids[(a, b)]),
            c: (pc, mids[(c, a)], centroid, mids[(b, c)]),
        }
        for vertex, quad in corner_quads.items():
            d = dof_of_vertex[vertex]
            p0, p1, p2, p3 = quad
            for sub in ((p0, p1, p2), (p0, p2, p3)):
                pts, wts = gauss_triangle(np.asarray(sub))
                qp.append(pts)
                qw.append(wts)
                q_cell.append(np.full(wts.size, k))
                q_owner.append(np.full(wts.size, d))
                if d >= 0:
                    cell_meas[d] += wts.sum()
            if d >= 0:
                dof_quads[d].append(Polygon(quad))

    G = sp.csr_matrix((vals, (rows, cols)), shape=(2 * tris.shape[0], n))
    polys = [unary_union(quads) for quads in dof_quads]
    hmax = float(np.sqrt(2.0 * np.max(mesh.areas))) if len(tris) else 0.0
    edge_len = []
    for a, b, c in tris[: min(len(tris), 200)]:
        edge_len.extend(
            [np.linalg.norm(v[a] - v[b]), np.linalg.norm(v[b] - v[c]), np.linalg.norm(v[c] - v[a])]
        )
    hmax = float(np.max(edge_len)) if edge_len else hmax

    gd = GradientDiscretisation(
        dim=2,
        p=p,
        cell_meas=cell_meas,
        grad_matrix=G,
        grad_meas=mesh.areas,
        qp=np.vstack(qp) if qp else np.zeros((0, 2)),
        qw=np.concatenate(qw) if qw else np.zeros(0),
        q_cell=np.concatenate(q_cell) if q_cell else np.zeros(0, dtype=int),
        q_owner=np.concatenate(q_owner) if q_owner else np.zeros(0, dtype=int),
        dof_points=v[interior],
        geometry=TriangulatedGeometry(polys),
        h=hmax,
        gd_id=f"p1_2d(nt={tris.shape[0]})",
    )
    gd.mesh = mesh
    return gd


class RefinementFamily:
    """Ordered levels of (mesh, gd, time grid) with h halved per level."""

    def __init__(self, levels, dt_rule):
        self.levels = levels
        self.dt_rule = dt_rule
        hs = [gd.h for _, gd, _ in levels]
        if np.any(np.diff(hs) >= 0):
            raise DegenerateMesh("mesh size must strictly decrease across levels")

    def __iter__(self):
        return iter(self.levels)

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, i):
        return self.levels[i]


def refine(base_mesh, levels, T, dt0, dt_rule="h", p=2.0, builder=None):
    """Uniform refinement family with the time step scaled per rule.

    ``dt_rule`` is "h" (dt halves with h) or "h2" (dt quarters with h).
    """
    if levels < 2:
        raise ValueError("levels >= 2 required")
    if dt_rule not in ("h", "h2"):
        raise ValueError("dt_rule must be 'h' or 'h2'")
    if builder is None:
        builder = (
            build_mass_lumped_p1_1d if isinstance(base_mesh, Mesh1D) else build_mass_lumped_p1_2d
        )
    out = []
    mesh = base_mesh
    dt = float(dt0)
    for _ in range(levels):
        gd = builder(mesh, p=p)
        n_steps = max(1, int(round(T / dt)))
        out.append((mesh, gd, TimeGrid.uniform(T, n_steps)))
        mesh = mesh.refined()
        dt *= 0.5 if dt_rule == "h" else 0.25
    return RefinementFamily(out, dt_rule)
