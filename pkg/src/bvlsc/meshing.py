"""Computational domains (interval, polygon, half-ball) and simplicial meshes.

Conventions:
  * vertices are stored as an (nv, N) float array, also in 1D (N = 1);
  * cells are (nc, N+1) vertex index tuples (segments / triangles);
  * boundary facets are the facets incident to exactly one cell, each with a
    unit outward normal;
  * the half-ball D_nu = {y in B_1(0) : y.nu < 0} is meshed in a canonical
    frame (nu = e1) and rotated, so the flat facet lies exactly on
    {y.nu = 0}.  The circular arc is approximated polygonally with sagitta
    <= h^2/8, which matters because the half-ball sign test integrates over
    the exact half-ball.

Meshes are immutable after construction (arrays are locked), so they can be
shared freely between concurrent check runs.
"""

import numpy as np
from scipy.spatial import Delaunay

__all__ = [
    "Domain",
    "Mesh",
    "BoundaryPoint",
    "Patch",
    "build_mesh",
    "local_patch",
    "interval_mesh",
    "interval_mesh_with",
    "unit_square_mesh",
    "rectangle_mesh",
    "halfball_mesh",
    "MeshBudgetError",
]


class MeshBudgetError(ValueError):
    """Raised when a requested mesh would exceed the cell-count budget."""


def _segments_intersect(p1, p2, p3, p4):
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    return o1 != o2 and o3 != o4


class Domain:
    """Interval [a, b], simple polygon, or canonical half-ball with normal nu."""

    def __init__(self, kind, dim, params):
        self.kind = kind
        self.dim = dim
        self.params = params

    @classmethod
    def interval(cls, a, b):
        a, b = float(a), float(b)
        if not a < b:
            raise ValueError(f"interval needs a < b, got [{a}, {b}]")
        return cls("interval", 1, {"a": a, "b": b})

    @classmethod
    def polygon(cls, vertices):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
            raise ValueError("polygon needs an (k, 2) vertex loop with k >= 3")
        area2 = 0.0
        n = len(verts)
        for i in range(n):
            x1, y1 = verts[i]
            x2, y2 = verts[(i + 1) % n]
            area2 += x1 * y2 - x2 * y1
        if area2 <= 0:
            raise ValueError("polygon vertex loop must be positively oriented")
        for i in range(n):
            for j in range(i + 1, n):
                if abs(i - j) in (0, 1) or (i == 0 and j == n - 1):
                    continue
                if _segments_intersect(
                    verts[i], verts[(i + 1) % n], verts[j], verts[(j + 1) % n]
                ):
                    raise ValueError("polygon vertex loop is self-intersecting")
        return cls("polygon", 2, {"vertices": verts})

    @classmethod
    def halfball(cls, normal):
        nu = np.atleast_1d(np.asarray(normal, dtype=float))
        norm = np.linalg.norm(nu)
        if norm == 0:
            raise ValueError("half-ball normal must be nonzero")
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("half-ball normal must be a unit vector")
        nu = nu / np.linalg.norm(nu)
        return cls("halfball", len(nu), {"normal": nu})

    def measure(self):
        if self.kind == "interval":
            return self.params["b"] - self.params["a"]
        if self.kind == "polygon":
            v = self.params["vertices"]
            x, y = v[:, 0], v[:, 1]
            return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
        if self.dim == 1:
            return 1.0
        return np.pi / 2.0

    def boundary_distance(self, x):
        """Distance to the topological boundary of the domain."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "interval":
            a, b = self.params["a"], self.params["b"]
            return np.minimum(np.abs(x[:, 0] - a), np.abs(x[:, 0] - b))
        if self.kind == "polygon":
            from .regions import _dist_to_segment

            verts = self.params["vertices"]
            d = np.full(len(x), np.inf)
            for i in range(len(verts)):
                d = np.minimum(
                    d, _dist_to_segment(x, verts[i], verts[(i + 1) % len(verts)])
                )
            return d
        nu = self.params["normal"]
        if self.dim == 1:
            # D = {y in (-1,1): y*nu < 0}: endpoints are 0 and -nu.
            return np.minimum(np.abs(x[:, 0]), np.abs(x[:, 0] + nu[0]))
        from .regions import _dist_to_segment

        t = np.array([-nu[1], nu[0]])
        d_flat = _dist_to_segment(x, -t, t)
        r = np.linalg.norm(x, axis=1)
        d_arc = np.abs(r - 1.0)
        outward = x @ nu > 0
        d_arc = np.where(outward, np.inf, d_arc)
        return np.minimum(d_flat, d_arc)

    def boundary_point(self, x0, tol=1e-9):
        """Make a BoundaryPoint at x0, computing the outward unit normal.

        Polygon corners have no single normal and are rejected; checks that
        need corners route through the eps-delta probe instead.
        """
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        if self.kind == "interval":
            a, b = self.params["a"], self.params["b"]
            if abs(x0[0] - a) <= tol:
                return BoundaryPoint(np.array([a]), np.array([-1.0]))
            if abs(x0[0] - b) <= tol:
                return BoundaryPoint(np.array([b]), np.array([1.0]))
            raise ValueError(f"{x0} is not an endpoint of [{a}, {b}]")
        if self.kind == "polygon":
            from .regions import _dist_to_segment

            verts = self.params["vertices"]
            n = len(verts)
            hits = []
            for i in range(n):
                a, b = verts[i], verts[(i + 1) % n]
                if _dist_to_segment(x0[None, :], a, b)[0] <= tol:
                    e = b - a
                    nrm = np.array([e[1], -e[0]])  # outward for ccw loops
                    hits.append(nrm / np.linalg.norm(nrm))
            if not hits:
                raise ValueError(f"{x0} does not lie on the polygon boundary")
            if len(hits) > 1 and np.linalg.norm(hits[0] - hits[1]) > 1e-9:
                raise ValueError(
                    f"{x0} is a polygon corner with normals {hits[0]} and {hits[1]}; "
                    "no single outward normal exists"
                )
            return BoundaryPoint(x0, hits[0])
        raise ValueError("boundary_point is defined for interval/polygon domains")


class BoundaryPoint:
    """A point on the domain boundary together with its outward unit normal."""

    def __init__(self, x0, normal):
        self.x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        nu = np.atleast_1d(np.asarray(normal, dtype=float))
        if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
            raise ValueError("boundary normal must have unit length")
        self.normal = nu

    def __repr__(self):
        return f"BoundaryPoint(x0={self.x0.tolist()}, normal={self.normal.tolist()})"


def _lock(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class Mesh:
    """Conforming simplicial mesh with boundary facets and outward normals."""

    def __init__(self, vertices, cells, domain=None):
        self.vertices = _lock(np.asarray(vertices, dtype=float))
        self.cells = _lock(np.asarray(cells, dtype=np.int64))
        self.dim = self.vertices.shape[1]
        self.domain = domain
        if self.cells.shape[1] != self.dim + 1:
            raise ValueError("cells must be simplices with dim+1 vertices")
        self._build_geometry()
        self._build_boundary()
        self._quad_cache = {}

    # -- geometry ---------------------------------------------------------

    def _build_geometry(self):
        v = self.vertices[self.cells]  # (nc, dim+1, dim)
        if self.dim == 1:
            length = v[:, 1, 0] - v[:, 0, 0]
            if np.any(np.abs(length) < 1e-15):
                raise ValueError("degenerate cell (zero length)")
            # orient cells left-to-right
            flip = length < 0
            if np.any(flip):
                cells = self.cells.copy()
                cells[flip] = cells[flip][:, ::-1]
                self.cells = _lock(cells)
                v = self.vertices[self.cells]
                length = v[:, 1, 0] - v[:, 0, 0]
            self.cell_measures = _lock(length)
            inv = 1.0 / length
            grads = np.stack([-inv, inv], axis=1)[:, :, None]
            self.shape_gradients = _lock(grads)
            self.h = float(np.max(length))
        else:
            e1 = v[:, 1] - v[:, 0]
            e2 = v[:, 2] - v[:, 0]
            det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
            flip = det < 0
            if np.any(flip):
                cells = self.cells.copy()
                cells[flip] = cells[flip][:, [0, 2, 1]]
                self.cells = _lock(cells)
                v = self.vertices[self.cells]
                e1 = v[:, 1] - v[:, 0]
                e2 = v[:, 2] - v[:, 0]
                det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
            if np.any(np.abs(det) < 1e-15):
                raise ValueError("degenerate cell (zero area)")
            self.cell_measures = _lock(0.5 * det)
            # gradients of barycentric coordinates
            g1 = np.stack([e2[:, 1], -e2[:, 0]], axis=1) / det[:, None]
            g2 = np.stack([-e1[:, 1], e1[:, 0]], axis=1) / det[:, None]
            g0 = -g1 - g2
            self.shape_gradients = _lock(np.stack([g0, g1, g2], axis=1))
            diam = np.maximum(
                np.linalg.norm(e1, axis=1),
                np.maximum(np.linalg.norm(e2, axis=1), np.linalg.norm(e1 - e2, axis=1)),
            )
            self.h = float(np.max(diam))
        self.centroids = _lock(v.mean(axis=1))
        self.n_cells = len(self.cells)
        self.n_vertices = len(self.vertices)

    def _facets_of_cells(self):
        if self.dim == 1:
            return [
                [(int(c[0]),), (int(c[1]),)] for c in self.cells
            ]
        return [
            [
                tuple(sorted((int(c[0]), int(c[1])))),
                tuple(sorted((int(c[1]), int(c[2])))),
                tuple(sorted((int(c[0]), int(c[2])))),
            ]
            for c in self.cells
        ]

    def _build_boundary(self):
        count = {}
        owner = {}
        for ci, facets in enumerate(self._facets_of_cells()):
            for f in facets:
                count[f] = count.get(f, 0) + 1
                owner.setdefault(f, ci)
        bfacets, bnormals = [], []
        for f, c in count.items():
            if c != 1:
                continue
            ci = owner[f]
            centroid = self.centroids[ci]
            if self.dim == 1:
                x = self.vertices[f[0]]
                nrm = np.sign(x - centroid)
            else:
                a, b = self.vertices[f[0]], self.vertices[f[1]]
                e = b - a
                nrm = np.array([e[1], -e[0]])
                nrm = nrm / np.linalg.norm(nrm)
                if nrm @ (0.5 * (a + b) - centroid) < 0:
                    nrm = -nrm
            bfacets.append(f)
            bnormals.append(nrm)
        order = sorted(range(len(bfacets)), key=lambda i: bfacets[i])
        self.boundary_facets = [bfacets[i] for i in order]
        self.boundary_normals = _lock(np.array([bnormals[i] for i in order]))
        self.boundary_vertices = np.array(
            sorted({v for f in self.boundary_facets for v in f}), dtype=np.int64
        )
        self.interior_facet_count = sum(1 for c in count.values() if c == 2)

    # -- evaluation helpers -------------------------------------------------

    def quadrature(self, order=2):
        """Per-cell quadrature points and weights: (nc, nq, dim), (nc, nq)."""
        key = int(order)
        if key in self._quad_cache:
            return self._quad_cache[key]
        v = self.vertices[self.cells]
        if self.dim == 1:
            if order <= 1:
                bary = np.array([[0.5, 0.5]])
                w = np.array([1.0])
            else:
                g = 0.5 / np.sqrt(3.0)
                bary = np.array([[0.5 + g, 0.5 - g], [0.5 - g, 0.5 + g]])
                w = np.array([0.5, 0.5])
        else:
            if order <= 1:
                bary = np.array([[1 / 3, 1 / 3, 1 / 3]])
                w = np.array([1.0])
            else:
                # edge-midpoint rule, exact for quadratics
                bary = np.array(
                    [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]
                )
                w = np.array([1 / 3, 1 / 3, 1 / 3])
        pts = np.einsum("qi,cid->cqd", bary, v)
        wts = np.outer(self.cell_measures, w)
        self._quad_cache[key] = (_lock(pts), _lock(wts))
        return self._quad_cache[key]

    def p1_gradient(self, values):
        """Cellwise gradient of a continuous P1 field; values (nv, M) -> (nc, M, dim)."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        vals = values[self.cells]  # (nc, dim+1, M)
        return np.einsum("cim,cid->cmd", vals, self.shape_gradients)

    def find_cell(self, x, tol=1e-10):
        """Index of a cell whose closure contains x (smallest index wins)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.dim == 1:
            v = self.vertices[self.cells][:, :, 0]
            hit = np.where((v[:, 0] - tol <= x[0]) & (x[0] <= v[:, 1] + tol))[0]
        else:
            v = self.vertices[self.cells]
            a, b, c = v[:, 0], v[:, 1], v[:, 2]
            d = (b[:, 1] - c[:, 1]) * (a[:, 0] - c[:, 0]) + (c[:, 0] - b[:, 0]) * (
                a[:, 1] - c[:, 1]
            )
            l1 = (
                (b[:, 1] - c[:, 1]) * (x[0] - c[:, 0])
                + (c[:, 0] - b[:, 0]) * (x[1] - c[:, 1])
            ) / d
            l2 = (
                (c[:, 1] - a[:, 1]) * (x[0] - c[:, 0])
                + (a[:, 0] - c[:, 0]) * (x[1] - c[:, 1])
            ) / d
            l3 = 1.0 - l1 - l2
            hit = np.where((l1 >= -tol) & (l2 >= -tol) & (l3 >= -tol))[0]
        if len(hit) == 0:
            raise ValueError(f"point {x} lies outside the mesh")
        return int(hit[0])

    def eval_p1(self, values, x):
        """Evaluate a continuous P1 field (values (nv, M) or (nv,)) at a point."""
        values = np.asarray(values, dtype=float)
        scalar = values.ndim == 1
        if scalar:
            values = values[:, None]
        ci = self.find_cell(x)
        verts = self.vertices[self.cells[ci]]
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.dim == 1:
            t = (x[0] - verts[0, 0]) / (verts[1, 0] - verts[0, 0])
            lam = np.array([1 - t, t])
        else:
            T = np.column_stack([verts[1] - verts[0], verts[2] - verts[0]])
            ab = np.linalg.solve(T, x - verts[0])
            lam = np.array([1 - ab[0] - ab[1], ab[0], ab[1]])
        out = lam @ values[self.cells[ci]]
        return float(out[0]) if scalar else out

    def dump_text(self):
        """Plain-text vertex/cell listing for debugging."""
        lines = [f"# mesh dim={self.dim} vertices={self.n_vertices} "
                 f"cells={self.n_cells} h={self.h:.6g}"]
        for i, v in enumerate(self.vertices):
            lines.append(f"v {i} " + " ".join(f"{x:.17g}" for x in v))
        for i, c in enumerate(self.cells):
            lines.append(f"c {i} " + " ".join(str(int(j)) for j in c))
        for f, n in zip(self.boundary_facets, self.boundary_normals):
            lines.append("b " + ",".join(map(str, f)) + " "
                         + " ".join(f"{x:.17g}" for x in n))
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return (
            f"Mesh(dim={self.dim}, vertices={self.n_vertices}, "
            f"cells={self.n_cells}, h={self.h:.4g})"
        )


# -- constructors -----------------------------------------------------------


def interval_mesh(a, b, h_target, domain=None):
    n = max(1, int(np.ceil((b - a) / h_target)))
    verts = np.linspace(a, b, n + 1)[:, None]
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(verts, cells, domain=domain or Domain.interval(a, b))


def interval_mesh_with(a, b, h_target, required_points=(), domain=None):
    """Uniform interval mesh with extra vertices inserted at required points."""
    base = np.linspace(a, b, max(1, int(np.ceil((b - a) / h_target))) + 1)
    pts = np.concatenate([base, np.asarray(required_points, dtype=float)])
    pts = pts[(pts >= a - 1e-14) & (pts <= b + 1e-14)]
    pts = np.unique(np.round(pts, 14))
    verts = pts[:, None]
    n = len(pts) - 1
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(verts, cells, domain=domain or Domain.interval(a, b))


def rectangle_mesh(x0, x1, y0, y1, nx, ny, domain=None):
    """Structured rectangle mesh; each grid quad split into two triangles."""
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    cells = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            cells.append([a, b, c])
            cells.append([a, c, d])
    if domain is None:
        domain = Domain.polygon([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    return Mesh(verts, np.array(cells), domain=domain)


def unit_square_mesh(n):
    return rectangle_mesh(0.0, 1.0, 0.0, 1.0, n, n)


def _polygon_mesh(domain, h, max_cells):
    verts = domain.params["vertices"]
    pts = []
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        L = np.linalg.norm(b - a)
        k = max(1, int(np.ceil(L / h)))
        for t in np.arange(k) / k:
            pts.append(a + t * (b - a))
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    nx = int(np.ceil((hi[0] - lo[0]) / h))
    ny = int(np.ceil((hi[1] - lo[1]) / h))
    if 2 * nx * ny > max_cells:
        raise MeshBudgetError(
            f"h={h} implies about {2 * nx * ny} cells, over the budget {max_cells}"
        )
    from .regions import polygon_region

    region = polygon_region(verts)
    xs = lo[0] + (np.arange(nx + 1)) * (hi[0] - lo[0]) / nx
    ys = lo[1] + (np.arange(ny + 1)) * (hi[1] - lo[1]) / ny
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    grid = np.column_stack([X.ravel(), Y.ravel()])
    bdist = domain.boundary_distance(grid)
    inside = region.contains(grid, tol=1e-12) & (bdist > 0.3 * h)
    pts = np.vstack([np.array(pts), grid[inside]])
    pts = np.unique(np.round(pts, 12), axis=0)
    tri = Delaunay(pts)
    cent = pts[tri.simplices].mean(axis=1)
    keep = region.contains(cent, tol=1e-12) & (_tri_areas(pts, tri.simplices) > 1e-13)
    cells = tri.simplices[keep]
    used = np.unique(cells)
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    mesh = Mesh(pts[used], remap[cells], domain=domain)
    return mesh


def halfball_mesh(normal, h_target, max_cells=200_000):
    """Mesh of D_nu = {y in B_1(0): y.nu < 0}.

    1D: D_nu is the unit interval on the side opposite the normal.
    2D: concentric polar rings in the canonical frame nu = e1 (left half-disk,
    flat facet exactly on {y1 = 0}), Delaunay-triangulated, then rotated so
    the flat facet lies on {y.nu = 0}.
    """
    nu = np.atleast_1d(np.asarray(normal, dtype=float))
    nu = nu / np.linalg.norm(nu)
    domain = Domain.halfball(nu)
    if len(nu) == 1:
        if nu[0] > 0:
            return interval_mesh(-1.0, 0.0, h_target, domain=domain)
        return interval_mesh(0.0, 1.0, h_target, domain=domain)

    nr = max(2, int(np.ceil(1.0 / h_target)))
    if 4 * nr * nr > max_cells:
        raise MeshBudgetError(
            f"h={h_target} implies about {4 * nr * nr} cells, over the budget {max_cells}"
        )
    pts = [np.zeros(2)]
    for k in range(1, nr + 1):
        r = k / nr
        m = max(3, int(np.ceil(np.pi * r / h_target)) + 1)
        theta = np.linspace(np.pi / 2.0, 3.0 * np.pi / 2.0, m)
        ring = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        ring[0] = [0.0, r]
        ring[-1] = [0.0, -r]
        pts.append(ring)
    pts = np.vstack(pts)
    pts[np.abs(pts[:, 0]) < 1e-14, 0] = 0.0
    tri = Delaunay(pts)
    areas = _tri_areas(pts, tri.simplices)
    cells = tri.simplices[areas > 1e-13]
    # rotate canonical frame (nu = e1) onto the requested normal
    R = np.array([[nu[0], -nu[1]], [nu[1], nu[0]]])
    verts = pts @ R.T
    return Mesh(verts, cells, domain=domain)


def _tri_areas(pts, simplices):
    v = pts[simplices]
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def build_mesh(domain, h_target, max_cells=200_000):
    """Conforming simplicial mesh of the domain with h <= h_target."""
    if h_target <= 0:
        raise ValueError("h_target must be positive")
    if domain.kind == "interval":
        a, b = domain.params["a"], domain.params["b"]
        if (b - a) / h_target > max_cells:
            raise MeshBudgetError(
                f"h={h_target} implies over {max_cells} cells on [{a}, {b}]"
            )
        return interval_mesh(a, b, h_target, domain=domain)
    if domain.kind == "polygon":
        return _polygon_mesh(domain, h_target, max_cells)
    if domain.kind == "halfball":
        return halfball_mesh(domain.params["normal"], h_target, max_cells)
    raise ValueError(f"unknown domain kind {domain.kind!r}")


# -- local patches -----------------------------------------------------------


class Patch:
    """Submesh covering Omega with a ball around a boundary/interior point.

    clamped_vertices: vertex ids where admissible test fields vanish (the
    interface created by the ball); free boundary parts lie on the original
    domain boundary.
    """

    def __init__(self, mesh, clamped_vertices, free_vertices, center, delta, level):
        self.mesh = mesh
        self.clamped_vertices = np.asarray(clamped_vertices, dtype=np.int64)
        self.free_vertices = np.asarray(free_vertices, dtype=np.int64)
        self.center = center
        self.delta = delta
        self.level = level

    def __repr__(self):
        return (
            f"Patch(cells={self.mesh.n_cells}, clamped={len(self.clamped_vertices)}, "
            f"free={len(self.free_vertices)}, delta={self.delta})"
        )


def _refine_all(vertices, cells, dim):
    """One uniform red refinement of a conforming submesh."""
    if dim == 1:
        mid = {}
        verts = list(vertices)
        new_cells = []
        for a, b in cells:
            key = (min(a, b), max(a, b))
            if key not in mid:
                mid[key] = len(verts)
                verts.append(0.5 * (vertices[a] + vertices[b]))
            m = mid[key]
            new_cells.append([a, m])
            new_cells.append([m, b])
        return np.array(verts), np.array(new_cells)
    mid = {}
    verts = list(vertices)

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in mid:
            mid[key] = len(verts)
            verts.append(0.5 * (vertices[a] + vertices[b]))
        return mid[key]

    new_cells = []
    for a, b, c in cells:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        new_cells.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]])
    return np.array(verts), np.array(new_cells)


def local_patch(mesh, x0, delta, refine_levels=1):
    """Submesh of the cells around x0 within distance delta.

    Cells are selected by centroid; the selected submesh is then uniformly
    refined `refine_levels` times with re-selection, sharpening the resolution
    of the ball interface without hanging nodes.  Patch boundary facets on the
    original domain boundary are free; the rest (the interface near the ball
    boundary) is clamped.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if isinstance(x0, BoundaryPoint):
        center = x0.x0
    else:
        center = np.atleast_1d(np.asarray(x0, dtype=float))

    verts = np.asarray(mesh.vertices)
    cells = np.asarray(mesh.cells)
    for level in range(refine_levels):
        # keep every candidate touching the ball, then refine; the final
        # centroid rule below sees the refined interface
        d = np.linalg.norm(verts - center, axis=1)
        touching = np.min(d[cells], axis=1) < delta
        cells = cells[touching]
        if len(cells) == 0:
            break
        if not _any_cell_straddles(verts, cells, center, delta):
            break
        verts, cells = _refine_all(verts, cells, mesh.dim)
    cent = verts[cells].mean(axis=1) if len(cells) else np.zeros((0, mesh.dim))
    keep = np.linalg.norm(cent - center, axis=1) < delta
    cells = cells[keep]
    if len(cells) == 0:
        raise ValueError(
            f"patch around {center} with delta={delta} contains no cells"
        )

    used = np.unique(cells)
    remap = -np.ones(len(verts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    sub = Mesh(verts[used], remap[cells], domain=mesh.domain)

    clamped, free = [], []
    tol = 1e-9 * max(mesh.h, 1.0)
    if mesh.domain is not None:
        bdist = mesh.domain.boundary_distance(sub.vertices[sub.boundary_vertices])
    else:
        bdist = np.full(len(sub.boundary_vertices), np.inf)
    for v, d in zip(sub.boundary_vertices, bdist):
        if d <= tol:
            free.append(v)
        else:
            clamped.append(v)
    return Patch(sub, clamped, free, center, delta, refine_levels)


def _any_cell_straddles(verts, cells, center, delta):
    d = np.linalg.norm(verts - center, axis=1)
    dc = d[cells]
    return bool(np.any((dc.min(axis=1) < delta) & (dc.max(axis=1) > delta)))
