"""Ball polyhedra B[X] in E^3: face lattice, normal cones, boundary sampling.

B[X] is the intersection of the closed unit balls centered at the points of a
finite X with cr(X) < 1.  Its boundary decomposes into

* faces: one per generator sphere that meets the boundary.  The outward
  normals ``n = b - x_i`` of face ``i`` form the region
  ``G_i = {n : <n, x_j - x_i> >= |x_j - x_i|^2 / 2 for all j != i}``,
  an intersection of caps, hence spherically convex;
* edges: arcs of the circles where two generator spheres meet;
* vertices: points on three (generically) generator spheres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geom_core import (
    DEFAULT_TOL,
    GeometryError,
    SphericalCap,
    SphericalPolygon,
    Tolerance,
    arc_distances,
    as_points,
    cap_meets_polygon,
    circumradius,
    euclidean_diameter,
    sample_cap,
    smallest_enclosing_cap,
    tangent_basis,
    unit,
)

TWO_PI = 2 * math.pi


class EmptyInteriorRisk(GeometryError):
    pass


class DegenerateInput(GeometryError):
    pass


class NotOnBoundary(GeometryError):
    pass


class Location(Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    points: np.ndarray
    diam: float
    cr: float
    cr_center: np.ndarray

    @classmethod
    def from_points(cls, X, tol: Tolerance = DEFAULT_TOL) -> "GeneratorSet":
        X = as_points(X, dim=3)
        if len(X) > 1:
            d = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
            d[np.diag_indices(len(X))] = np.inf
            if d.min() <= tol.eq_tol:
                raise GeometryError("generators must be pairwise distinct")
        r, c = circumradius(X, tol)
        return cls(X, euclidean_diameter(X), r, c)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True, eq=False)
class Vertex:
    point: np.ndarray
    active: frozenset


@dataclass(frozen=True, eq=False)
class Edge:
    """Arc ``theta0 <= theta <= theta1`` of the circle shared by spheres ``pair``.

    The circle is ``center + radius (cos t u + sin t w)`` with ``u x w = axis``
    and ``axis`` pointing from ``x_i`` to ``x_j``.  ``vertices`` is None for a
    closed circle.
    """

    pair: tuple
    center: np.ndarray
    axis: np.ndarray
    radius: float
    u: np.ndarray
    w: np.ndarray
    theta0: float
    theta1: float
    vertices: tuple | None

    @property
    def closed(self) -> bool:
        return self.vertices is None

    @property
    def length(self) -> float:
        return self.radius * (self.theta1 - self.theta0)

    def point(self, theta):
        t = np.asarray(theta, dtype=float)
        return (self.center + self.radius * (np.cos(t)[..., None] * self.u
                                             + np.sin(t)[..., None] * self.w))

    def tangent(self, theta):
        t = np.asarray(theta, dtype=float)
        return -np.sin(t)[..., None] * self.u + np.cos(t)[..., None] * self.w


@dataclass(frozen=True, eq=False)
class Face:
    generator: int
    edges: tuple  # ((edge_id, orientation), ...); +1 = face on the left seen from outside


@dataclass(frozen=True, eq=False)
class BallPolyhedron:
    generators: GeneratorSet
    vertices: list
    edges: list
    faces: list
    interior_witness: np.ndarray
    redundant: tuple = ()
    perturbation: float = 0.0
    tol: Tolerance = DEFAULT_TOL
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def X(self) -> np.ndarray:
        return self.generators.points

    def euler_characteristic(self) -> int:
        """V - E + F, counting one virtual vertex per vertex-free loop or face.

        Closed-circle edges and boundaryless faces are not proper CW cells;
        the virtual vertex turns them into ones.
        """
        loops = sum(e.closed for e in self.edges)
        bare = sum(not f.edges for f in self.faces)
        return len(self.vertices) + loops + bare - len(self.edges) + len(self.faces)

    def face_of(self, i: int) -> Face | None:
        for f in self.faces:
            if f.generator == i:
                return f
        return None

    def face_constraints(self, i: int):
        """Caps bounding the normal region of face ``i``: ``(centers, cos_radii)``."""
        key = ("caps", i)
        if key not in self._cache:
            X = self.X
            D = np.delete(X, i, axis=0) - X[i]
            dist = np.linalg.norm(D, axis=1)
            self._cache[key] = (D / dist[:, None], dist / 2.0) if len(D) else (
                np.zeros((0, 3)), np.zeros(0))
        return self._cache[key]

    def contains(self, p) -> Location:
        return contains(self, p)

    def to_json(self) -> dict:
        return {
            "generators": self.X.tolist(),
            "diam": self.generators.diam,
            "cr": self.generators.cr,
            "perturbation": self.perturbation,
            "redundant": list(self.redundant),
            "vertices": [{"id": k, "point": v.point.tolist(), "active": sorted(v.active)}
                         for k, v in enumerate(self.vertices)],
            "edges": [{"id": k, "pair": list(e.pair), "center": e.center.tolist(),
                       "axis": e.axis.tolist(), "radius": e.radius,
                       "u": e.u.tolist(), "w": e.w.tolist(),
                       "theta0_rad": e.theta0, "theta1_rad": e.theta1,
                       "vertices": None if e.vertices is None else list(e.vertices)}
                      for k, e in enumerate(self.edges)],
            "faces": [{"id": k, "generator": f.generator,
                       "edges": [[eid, o] for eid, o in f.edges]}
                      for k, f in enumerate(self.faces)],
            "interior_witness": self.interior_witness.tolist(),
        }


# --- circle arithmetic ------------------------------------------------------

def _constraint_arc(K, u, w, r):
    """Allowed parameters on a circle for one ball constraint.

    Returns ("all" | "none" | (start, length), tangency_gap).
    """
    a, b = K @ u, K @ w
    C = (1.0 - K @ K - r * r) / (2.0 * r)
    R = math.hypot(a, b)
    gap = min(abs(C - R), abs(C + R))
    if R < 1e-14:
        return ("all" if C >= 0 else "none"), abs(C)
    if C >= R:
        return "all", gap
    if C <= -R:
        return "none", gap
    alpha = math.acos(C / R)
    phi = math.atan2(b, a)
    return ((phi + alpha) % TWO_PI, TWO_PI - 2 * alpha), gap


def _split(start, length, k):
    end = start + length
    if end <= TWO_PI:
        return [(start, end, k, k)]
    return [(start, TWO_PI, k, -1), (0.0, end - TWO_PI, -1, k)]


def _intersect(I1, I2):
    out = []
    for s1, e1, a1, b1 in I1:
        for s2, e2, a2, b2 in I2:
            s, e = max(s1, s2), min(e1, e2)
            if e > s:
                ls = a1 if s1 > s2 or (s1 == s2 and a2 == -1) else a2
                le = b1 if e1 < e2 or (e1 == e2 and b2 == -1) else b2
                out.append((s, e, ls, le))
    out.sort()
    return out


def _circle_arcs(X, i, j):
    xi, xj = X[i], X[j]
    d = np.linalg.norm(xj - xi)
    axis = (xj - xi) / d
    center = 0.5 * (xi + xj)
    r = math.sqrt(max(1.0 - d * d / 4.0, 0.0))
    u, w = tangent_basis(axis)
    allowed = [(0.0, TWO_PI, -1, -1)]
    min_gap = math.inf
    for k in range(len(X)):
        if k in (i, j):
            continue
        arc, gap = _constraint_arc(center - X[k], u, w, r)
        min_gap = min(min_gap, gap)
        if arc == "none":
            return (center, axis, r, u, w), [], min_gap
        if arc == "all":
            continue
        allowed = _intersect(allowed, _split(arc[0], arc[1], k))
        if not allowed:
            break
    # glue the piece through theta = 0 back together
    if len(allowed) >= 2 and allowed[0][0] == 0.0 and allowed[0][2] == -1 \
            and allowed[-1][1] == TWO_PI and allowed[-1][3] == -1:
        s, e, ls, _ = allowed.pop()
        _, e0, _, le0 = allowed.pop(0)
        allowed.append((s, e0 + TWO_PI, ls, le0))
    return (center, axis, r, u, w), allowed, min_gap


# --- construction -----------------------------------------------------------

def _build_once(X, tol):
    m = len(X)
    witness_degenerate = []
    edges, endpoint_records = [], []
    for i in range(m):
        for j in range(i + 1, m):
            (c, axis, r, u, w), arcs, gap = _circle_arcs(X, i, j)
            if gap < 1e-10:
                witness_degenerate.append(("tangency", i, j))
            for s, e, ls, le in arcs:
                if e - s < 1e-7:
                    witness_degenerate.append(("short-arc", i, j))
                    continue
                eid = len(edges)
                edges.append(dict(pair=(i, j), center=c, axis=axis, radius=r, u=u, w=w,
                                  theta0=s, theta1=e, labels=(ls, le)))
                if ls != -1:
                    endpoint_records.append((eid, 0, s, frozenset((i, j, ls))))
                    endpoint_records.append((eid, 1, e, frozenset((i, j, le))))
    # vertices: cluster arc endpoints
    verts, vpos = [], []
    ends = {}
    for eid, side, theta, act in endpoint_records:
        E = edges[eid]
        p = E["center"] + E["radius"] * (math.cos(theta) * E["u"] + math.sin(theta) * E["w"])
        hit = None
        for k, q in enumerate(vpos):
            if np.linalg.norm(p - q) < 1e-7:
                hit = k
                break
        if hit is None:
            dist = np.linalg.norm(X - p, axis=1)
            near = np.flatnonzero(np.abs(dist - 1.0) < 1e-7)
            active = frozenset(int(t) for t in near) | act
            if len(active) > 3:
                witness_degenerate.append(("vertex-order", tuple(sorted(active))))
            vpos.append(p)
            verts.append(Vertex(p, active))
            hit = len(vpos) - 1
        ends[(eid, side)] = hit
    edge_objs = []
    for eid, E in enumerate(edges):
        vv = None if E["labels"][0] == -1 else (ends[(eid, 0)], ends[(eid, 1)])
        edge_objs.append(Edge(E["pair"], E["center"], E["axis"], E["radius"], E["u"], E["w"],
                              E["theta0"], E["theta1"], vv))
    faces = []
    if m == 1:
        faces.append(Face(0, ()))
    else:
        for i in range(m):
            loop = []
            for eid, E in enumerate(edge_objs):
                if i not in E.pair:
                    continue
                j = E.pair[1] if E.pair[0] == i else E.pair[0]
                tm = 0.5 * (E.theta0 + E.theta1)
                b = E.point(tm)
                left = np.cross(b - X[i], E.tangent(tm))
                loop.append((eid, 1 if left @ (X[j] - b) > 0 else -1))
            if loop:
                faces.append(Face(i, tuple(loop)))
    return verts, edge_objs, faces, witness_degenerate


def build_ball_polyhedron(X, tol: Tolerance = DEFAULT_TOL, max_attempts: int = 6) -> BallPolyhedron:
    """Construct the face lattice of B[X] for a finite X in E^3.

    Degenerate configurations (tangencies, vertices on four spheres) are
    resolved by re-running on generators jittered by 1e-7; the applied
    displacement is stored in ``perturbation``.
    """
    G = X if isinstance(X, GeneratorSet) else GeneratorSet.from_points(X, tol)
    if G.cr >= 1.0 - tol.strict_margin:
        raise EmptyInteriorRisk(f"cr(X) = {G.cr:.12g} is not below 1")
    pts = G.points
    rng = np.random.default_rng(20240607)
    shift = 0.0
    for attempt in range(max_attempts):
        verts, edges, faces, degenerate = _build_once(pts, tol)
        body = BallPolyhedron(G if attempt == 0 else GeneratorSet.from_points(pts, tol),
                              verts, edges, faces, G.cr_center.copy(), perturbation=shift, tol=tol)
        if not degenerate and body.euler_characteristic() == 2:
            have = {f.generator for f in faces}
            redundant = tuple(i for i in range(len(pts)) if i not in have)
            return BallPolyhedron(body.generators, verts, edges, faces,
                                  body.generators.cr_center.copy(), redundant, shift, tol)
        delta = 1e-7 * rng.standard_normal(G.points.shape)
        pts = G.points + delta
        shift = float(np.abs(delta).max())
    raise DegenerateInput("configuration stays degenerate under perturbation")


# --- queries ----------------------------------------------------------------

def contains(B: BallPolyhedron, p) -> Location:
    p = np.asarray(p, dtype=float)
    worst = float(np.max(np.linalg.norm(B.X - p, axis=1)))
    m = B.tol.strict_margin
    if worst < 1.0 - m:
        return Location.INSIDE
    if worst <= 1.0 + m:
        return Location.BOUNDARY
    return Location.OUTSIDE


def active_set(B: BallPolyhedron, b) -> np.ndarray:
    dist = np.linalg.norm(B.X - np.asarray(b, dtype=float), axis=1)
    return np.flatnonzero(np.abs(dist - 1.0) <= B.tol.eq_tol)


@dataclass(frozen=True, eq=False)
class NormalCone:
    """Inward unit normals of B[X] at a boundary point."""

    base_point: np.ndarray
    generators_active: tuple
    cone: SphericalPolygon

    @property
    def vertices(self) -> np.ndarray:
        return self.cone.vertices


def normal_cone(B: BallPolyhedron, b) -> NormalCone:
    b = np.asarray(b, dtype=float)
    if contains(B, b) is not Location.BOUNDARY:
        raise NotOnBoundary("point is not on the boundary of B[X]")
    act = active_set(B, b)
    if len(act) == 0:
        raise NotOnBoundary("no generator sphere passes through the point")
    Y = unit(B.X[act] - b)
    return NormalCone(b, tuple(int(a) for a in act), SphericalPolygon.from_points(Y, B.tol))


def _face_bounding_cap(B: BallPolyhedron, face: Face) -> SphericalCap | None:
    key = ("fcap", face.generator)
    if key in B._cache:
        return B._cache[key]
    i = face.generator
    if not face.edges:
        cap = None
    else:
        rims = []
        for eid, _ in face.edges:
            E = B.edges[eid]
            t = np.linspace(E.theta0, E.theta1, 400)
            rims.append(E.point(t) - B.X[i])
        N = unit(np.vstack(rims))
        cap = smallest_enclosing_cap(N, B.tol)
        # chords between rim samples can bulge past the sampled rim
        cap = SphericalCap(cap.center, min(cap.angular_radius + 0.02, math.pi))
    B._cache[key] = cap
    return cap


def _sample_face_normals(B: BallPolyhedron, face: Face, n: int, rng) -> np.ndarray:
    cap = _face_bounding_cap(B, face)
    if cap is None:
        return unit(rng.standard_normal((n, 3)))
    C, cosr = B.face_constraints(face.generator)
    out, have = [], 0
    for _ in range(10_000):
        batch = sample_cap(cap.center, cap.angular_radius, max(64, 2 * (n - have)), rng)
        ok = np.all(batch @ C.T >= cosr, axis=1) if len(C) else np.ones(len(batch), bool)
        out.append(batch[ok])
        have += int(ok.sum())
        if have >= n:
            break
    else:
        raise GeometryError("face sampling did not converge")
    return np.vstack(out)[:n]


def face_area(B: BallPolyhedron, face: Face, samples: int = 4000, seed: int = 0) -> float:
    cap = _face_bounding_cap(B, face)
    if cap is None:
        return 4 * math.pi
    rng = np.random.default_rng(seed)
    batch = sample_cap(cap.center, cap.angular_radius, samples, rng)
    C, cosr = B.face_constraints(face.generator)
    frac = np.mean(np.all(batch @ C.T >= cosr, axis=1))
    return float(frac * 2 * math.pi * (1 - math.cos(cap.angular_radius)))


@dataclass
class BoundarySample:
    points: np.ndarray
    kind: np.ndarray       # 0 face, 1 edge, 2 vertex
    cell: np.ndarray       # face / edge / vertex index
    active: list           # per point: tuple of generator indices


def sample_boundary_cells(B: BallPolyhedron, n: int, seed) -> BoundarySample:
    """Stratified boundary sample with cell labels (every cell hit when n allows)."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    nv, ne, nf = len(B.vertices), len(B.edges), len(B.faces)
    counts_v = np.zeros(nv, int)
    counts_e = np.zeros(ne, int)
    counts_f = np.zeros(nf, int)
    if n >= nv + ne + nf:
        counts_v[:] = 1
        counts_e[:] = 1
        counts_f[:] = 1
        rest = n - nv - ne - nf
        if ne:
            lens = np.array([e.length for e in B.edges])
            n_edge = int(round(0.2 * rest))
            counts_e += rng.multinomial(n_edge, lens / lens.sum())
            rest -= n_edge
        areas = np.array([face_area(B, f) for f in B.faces])
        counts_f += rng.multinomial(rest, areas / areas.sum())
    else:
        cells = rng.choice(nv + ne + nf, size=n, replace=True)
        counts_v += np.bincount(cells[cells < nv], minlength=nv)
        counts_e += np.bincount(cells[(cells >= nv) & (cells < nv + ne)] - nv, minlength=ne)
        counts_f += np.bincount(cells[cells >= nv + ne] - nv - ne, minlength=nf)
    pts, kind, cell, active = [], [], [], []
    for k, c in enumerate(counts_v):
        if c:
            pts.append(np.repeat(B.vertices[k].point[None, :], c, axis=0))
            kind += [2] * c
            cell += [k] * c
            active += [tuple(sorted(B.vertices[k].active))] * c
    for k, c in enumerate(counts_e):
        if c:
            E = B.edges[k]
            t = rng.uniform(E.theta0, E.theta1, c)
            pts.append(E.point(t))
            kind += [1] * c
            cell += [k] * c
            active += [E.pair] * c
    for k, c in enumerate(counts_f):
        if c:
            f = B.faces[k]
            pts.append(B.X[f.generator] + _sample_face_normals(B, f, c, rng))
            kind += [0] * c
            cell += [k] * c
            active += [(f.generator,)] * c
    return BoundarySample(np.vstack(pts), np.array(kind), np.array(cell), active)


def boundary_sample(B: BallPolyhedron, n: int, seed) -> np.ndarray:
    return sample_boundary_cells(B, n, seed).points


def spindle_hull_boundary(B: BallPolyhedron, n: int, seed) -> np.ndarray:
    """Points ``b + y`` with ``b`` on bd B[X] and ``y`` an inward unit normal at ``b``.

    Every such point lies on the boundary of the spindle convex hull of X; we
    return the normal-cone vertices plus one random interior normal per
    non-smooth sample.
    """
    S = sample_boundary_cells(B, n, seed)
    rng = np.random.default_rng([seed, 1] if isinstance(seed, int) else seed)
    out = []
    for b, act in zip(S.points, S.active):
        Y = unit(B.X[list(act)] - b)
        out.append(b + Y)
        if len(Y) > 1:
            lam = rng.dirichlet(np.ones(len(Y)))
            out.append((b + unit(lam @ Y))[None, :])
    return np.vstack(out)


@dataclass(frozen=True, eq=False)
class NormalImageUnion:
    """Sampled union of the normal cones of B[X] that meet the probe cap ``cap``.

    The cap itself is part of the union (each unit vector is the inward normal
    at some boundary point), so ``hull_sample`` always holds its rim.
    """

    cap: SphericalCap
    cones: list
    edge_params: dict
    hull_sample: np.ndarray


def _edge_normal_samples(B: BallPolyhedron, resolution: float):
    key = ("edge-normals", resolution)
    if key not in B._cache:
        eid_list, theta_list, Yi, Yj = [], [], [], []
        for k, E in enumerate(B.edges):
            cnt = max(2, int(math.ceil(E.radius * (E.theta1 - E.theta0) / resolution)) + 1)
            t = np.linspace(E.theta0, E.theta1, cnt)
            b = E.point(t)
            i, j = E.pair
            eid_list.append(np.full(cnt, k))
            theta_list.append(t)
            Yi.append(B.X[i] - b)
            Yj.append(B.X[j] - b)
        if eid_list:
            B._cache[key] = (np.concatenate(eid_list), np.concatenate(theta_list),
                             unit(np.vstack(Yi)), unit(np.vstack(Yj)))
        else:
            B._cache[key] = (np.zeros(0, int), np.zeros(0), np.zeros((0, 3)), np.zeros((0, 3)))
    return B._cache[key]


def vertex_cones(B: BallPolyhedron) -> list:
    key = ("vcones",)
    if key not in B._cache:
        B._cache[key] = [
            NormalCone(v.point, tuple(sorted(v.active)),
                       SphericalPolygon.from_points(unit(B.X[sorted(v.active)] - v.point), B.tol))
            for v in B.vertices]
    return B._cache[key]


def normal_image_union(B: BallPolyhedron, A: SphericalCap, resolution: float = 1e-3) -> NormalImageUnion:
    cones = [c for c in vertex_cones(B) if cap_meets_polygon(A, c.cone)]
    eid, theta, Yi, Yj = _edge_normal_samples(B, resolution)
    parts = [A.center[None, :], A.boundary(resolution)]
    edge_params = {}
    if len(eid):
        hit = arc_distances(A.center[None, :], Yi, Yj) <= A.angular_radius
        for k in np.unique(eid[hit]):
            edge_params[int(k)] = theta[hit & (eid == k)]
        parts += [Yi[hit], Yj[hit]]
    parts += [c.vertices for c in cones]
    return NormalImageUnion(A, cones, edge_params, np.vstack(parts))


__all__ = [
    "BallPolyhedron", "BoundarySample", "DegenerateInput", "Edge", "EmptyInteriorRisk",
    "Face", "GeneratorSet", "Location", "NormalCone", "NormalImageUnion", "NotOnBoundary",
    "Vertex", "active_set", "boundary_sample", "build_ball_polyhedron", "contains",
    "face_area", "normal_cone", "normal_image_union", "sample_boundary_cells",
    "spindle_hull_boundary", "vertex_cones",
]
