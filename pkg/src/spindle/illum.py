"""Illumination predicates, certified verification, and the covering-code engine.

A direction ``v`` illuminates a boundary point ``b`` of B[X] iff
``<v, x_i - b> > 0`` for every generator ``x_i`` whose sphere passes through
``b``: the vectors ``x_i - b`` span the inward normal cone at ``b``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull

from .ball_poly import (
    BallPolyhedron,
    Location,
    NormalCone,
    NotOnBoundary,
    active_set,
    contains,
)
from .geom_core import (
    DEFAULT_TOL,
    GeometryError,
    OutOfRange,
    SphericalPolygon,
    Tolerance,
    as_points,
    as_unit,
    dump_points,
    fibonacci_sphere,
    jung_cap_radius,
    load_points,
    random_rotation,
    tangent_basis,
    unit,
)

TWO_PI = 2 * math.pi


class Verdict(Enum):
    TRUE = "true"
    FALSE = "false"
    INDETERMINATE = "indeterminate"


class Status(Enum):
    CERTIFIED = "CERTIFIED"
    FAILED = "FAILED"
    INDETERMINATE = "INDETERMINATE"


class OutOfScope(GeometryError):
    pass


@dataclass(frozen=True, eq=False)
class DirectionSet:
    directions: np.ndarray
    label: str = ""

    def __post_init__(self):
        D = as_points(self.directions)
        as_unit(D, tol=1e-9)
        object.__setattr__(self, "directions", D)

    def __len__(self):
        return len(self.directions)

    def to_json(self) -> dict:
        return dump_points(self.directions, unit_flag=True, label=self.label)

    @classmethod
    def from_json(cls, source) -> "DirectionSet":
        D, doc = load_points(source)
        return cls(unit(D), doc.get("label", ""))


# --- pointwise predicates ---------------------------------------------------

def _tri(values, margin) -> Verdict:
    values = np.asarray(values)
    if np.all(values > margin):
        return Verdict.TRUE
    if np.any(values < -margin):
        return Verdict.FALSE
    return Verdict.INDETERMINATE


def illuminates_point(B: BallPolyhedron, b, v) -> Verdict:
    b = np.asarray(b, dtype=float)
    if contains(B, b) is not Location.BOUNDARY:
        raise NotOnBoundary("point is not on the boundary of B[X]")
    act = active_set(B, b)
    return _tri((B.X[act] - b) @ np.asarray(v, dtype=float), B.tol.strict_margin)


def hemisphere_test(cone, v, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """Hemisphere test: is the cone inside the open hemisphere that ``v`` needs?

    A ``NormalCone`` holds inward normals, so we need ``<v, y> > 0`` on its
    vertices.  A bare ``SphericalPolygon`` is read as a Gauss image (outward
    normals) and must sit in the open hemisphere centered at ``-v``.
    Vertex checks suffice because both sets are spherically convex.
    """
    v = np.asarray(v, dtype=float)
    if isinstance(cone, NormalCone):
        return _tri(cone.vertices @ v, tol.strict_margin)
    if isinstance(cone, SphericalPolygon):
        return _tri(cone.vertices @ (-v), tol.strict_margin)
    raise TypeError("expected NormalCone or SphericalPolygon")


# --- certificates -------------------------------------------------------------

@dataclass
class IlluminationCertificate:
    status: Status
    directions: DirectionSet
    per_cell: dict
    witness: np.ndarray | None = None
    indeterminate: list = field(default_factory=list)
    body_id: str = ""
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "body_id": self.body_id,
            "status": self.status.value,
            "directions": self.directions.to_json(),
            "per_cell": self.per_cell,
            "witness": None if self.witness is None else self.witness.tolist(),
            "indeterminate_cells": self.indeterminate,
            "stats": self.stats,
        }


def _check_vertices(B, D, margin, per_cell, bad, indet):
    for k, vert in enumerate(B.vertices):
        act = sorted(vert.active)
        mins = ((B.X[act] - vert.point) @ D.T).min(axis=0)
        best = int(np.argmax(mins))
        if mins[best] > margin:
            per_cell[f"v{k}"] = {"directions": [best], "margin": float(mins[best])}
        elif np.all(mins < -margin):
            bad.append(vert.point.copy())
            return
        else:
            indet.append(f"v{k}")


def _open_arc(K, a, b, margin):
    """``{t : K - a cos t - b sin t > margin}`` as "all", None or (start, length)."""
    R = math.hypot(a, b)
    if R < 1e-15:
        return "all" if K > margin else None
    q = (K - margin) / R
    if q > 1:
        return "all"
    if q <= -1:
        return None
    beta = math.acos(q)
    return (math.atan2(b, a) + beta, TWO_PI - 2 * beta)


def _arc_meet(A1, A2):
    if A1 is None or A2 is None:
        return []
    if A1 == "all":
        return [A2]
    if A2 == "all":
        return [A1]
    out = []
    s1, l1 = A1
    s2, l2 = A2
    # two arcs on a circle meet in at most two pieces
    for shift in (-TWO_PI, 0.0, TWO_PI):
        s = max(s1, s2 + shift)
        e = min(s1 + l1, s2 + shift + l2)
        if e > s:
            out.append((s, e - s))
    return out


def _edge_envelope(B, E, D, theta):
    i, j = E.pair
    b = E.point(theta)
    fi = (B.X[i] - b) @ D.T
    fj = (B.X[j] - b) @ D.T
    return np.minimum(fi, fj)


def _check_edges(B, D, margin, per_cell, bad, indet):
    for k, E in enumerate(B.edges):
        i, j = E.pair
        lo, hi = E.theta0, E.theta1
        pieces = []
        for d_idx, v in enumerate(D):
            arcs = []
            for g in (i, j):
                K = (B.X[g] - E.center) @ v
                arcs.append(_open_arc(K, E.radius * (v @ E.u), E.radius * (v @ E.w), margin))
            for a in _arc_meet(arcs[0], arcs[1]):
                if a == "all":
                    pieces.append((lo - 1.0, hi + 1.0, d_idx))
                    continue
                s, L = a
                for m in range(-2, 3):
                    s2 = s + m * TWO_PI
                    if s2 < hi and s2 + L > lo:
                        pieces.append((s2, s2 + L, d_idx))
        pieces.sort()
        cur, used, gap = lo, [], None
        idx = 0
        best_end, best_dir = -math.inf, None
        while True:
            while idx < len(pieces) and pieces[idx][0] < cur:
                if pieces[idx][1] > best_end:
                    best_end, best_dir = pieces[idx][1], pieces[idx][2]
                idx += 1
            if best_end <= cur:
                gap = cur
                break
            used.append(best_dir)
            cur = best_end
            if cur > hi:
                break
        if gap is None:
            t = np.linspace(lo, hi, 129)
            env = _edge_envelope(B, E, D, t).max(axis=1)
            per_cell[f"e{k}"] = {"directions": sorted(set(used)),
                                 "margin": float(max(env.min(), margin))}
            continue
        nxt = min([p[0] for p in pieces if p[0] >= gap] + [hi])
        t = np.linspace(gap, max(nxt, gap), 17)
        env = _edge_envelope(B, E, D, t).max(axis=1)
        w = int(np.argmin(env))
        if env[w] < -margin:
            bad.append(E.point(t[w]))
            return
        indet.append(f"e{k}")


_OCTA = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, 0, 0], [0, -1, 0], [0, 0, -1]], float)
_OCTA_FACES = np.array([[0, 1, 2], [1, 3, 2], [3, 4, 2], [4, 0, 2],
                        [1, 0, 5], [3, 1, 5], [4, 3, 5], [0, 4, 5]])


def _chord_angle(a, b):
    return 2.0 * np.arcsin(np.clip(np.linalg.norm(a - b, axis=-1) / 2.0, 0.0, 1.0))


def _check_faces(B, D, margin, per_cell, bad, indet, max_depth, max_cells, stats):
    faces = B.faces
    if not faces:
        return
    nf = len(faces)
    mmax = max(1, len(B.X) - 1)
    C = np.zeros((nf, mmax, 3))
    alpha = np.full((nf, mmax), math.pi)   # padding caps never exclude
    cosr = np.full((nf, mmax), -2.0)
    for f_idx, f in enumerate(faces):
        Cf, cf = B.face_constraints(f.generator)
        C[f_idx, :len(Cf)] = Cf
        cosr[f_idx, :len(Cf)] = cf
        alpha[f_idx, :len(Cf)] = np.arccos(np.clip(cf, -1, 1))
    gen = np.array([f.generator for f in faces])
    T = np.tile(_OCTA[_OCTA_FACES], (nf, 1, 1))
    fid = np.repeat(np.arange(nf), len(_OCTA_FACES))
    used = [set() for _ in range(nf)]
    worst = np.full(nf, np.inf)
    discharge_angle = math.acos(-margin)
    total = 0
    for depth in range(max_depth + 1):
        if len(T) == 0:
            break
        total += len(T)
        mc = unit(T.sum(axis=1))
        rho = _chord_angle(mc[:, None, :], T).max(axis=1) + 1e-12
        Cc = C[fid]
        dots_c = np.einsum("kj,kmj->km", mc, Cc)
        ang_c = np.arccos(np.clip(dots_c, -1, 1))
        excluded = np.any(ang_c - rho[:, None] > alpha[fid] + 1e-12, axis=1)
        dots_v = mc @ D.T
        ang_v = np.arccos(np.clip(dots_v, -1, 1))
        best = np.argmax(ang_v, axis=1)
        gap = ang_v[np.arange(len(T)), best] - rho
        discharged = ~excluded & (gap > discharge_angle)
        # witness: triangle center strictly inside the face region and dark
        inside = np.all(dots_c - cosr[fid] > margin, axis=1)
        dark = np.all(dots_v > margin, axis=1)
        hit = np.flatnonzero(~excluded & inside & dark)
        if len(hit):
            k = hit[0]
            bad.append(B.X[gen[fid[k]]] + mc[k])
            stats["face_triangles"] = total
            return
        for k in np.flatnonzero(discharged):
            used[fid[k]].add(int(best[k]))
        if np.any(discharged):
            np.minimum.at(worst, fid[discharged], -np.cos(gap[discharged]))
        keep = ~excluded & ~discharged
        T, fid = T[keep], fid[keep]
        if depth == max_depth or len(T) * 4 > max_cells:
            break
        a, b, c = T[:, 0], T[:, 1], T[:, 2]
        ab, bc, ca = unit(a + b), unit(b + c), unit(c + a)
        T = np.concatenate([
            np.stack([a, ab, ca], axis=1), np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1), np.stack([ab, bc, ca], axis=1)])
        fid = np.tile(fid, 4)
    stats["face_triangles"] = total
    open_faces = set(int(f) for f in fid)
    for f_idx in range(nf):
        if f_idx in open_faces:
            indet.append(f"f{f_idx}")
        else:
            per_cell[f"f{f_idx}"] = {"directions": sorted(used[f_idx]),
                                     "margin": float(worst[f_idx]) if np.isfinite(worst[f_idx]) else None}


def verify_illumination(B: BallPolyhedron, D: DirectionSet | np.ndarray, max_depth: int = 24,
                        max_cells: int = 4_000_000, body_id: str = "") -> IlluminationCertificate:
    """Certify that ``D`` illuminates every boundary point of ``B``.

    Vertices are checked exactly, edges by solving the two sinusoidal
    inequalities in closed form and covering the arc with the resulting open
    intervals, faces by recursive subdivision of the face's normal region with
    cap-based bounds on every linear form.
    """
    if not isinstance(D, DirectionSet):
        D = DirectionSet(np.atleast_2d(D))
    V = D.directions
    if V.shape[1] != 3:
        raise GeometryError("verification needs directions in E^3")
    margin = B.tol.strict_margin
    per_cell, bad, indet, stats = {}, [], [], {}
    for check in (_check_vertices, _check_edges):
        check(B, V, margin, per_cell, bad, indet)
        if bad:
            return IlluminationCertificate(Status.FAILED, D, per_cell, bad[0], indet, body_id, stats)
    _check_faces(B, V, margin, per_cell, bad, indet, max_depth, max_cells, stats)
    if bad:
        return IlluminationCertificate(Status.FAILED, D, per_cell, bad[0], indet, body_id, stats)
    status = Status.INDETERMINATE if indet else Status.CERTIFIED
    return IlluminationCertificate(status, D, per_cell, None, indet, body_id, stats)


# --- spherical codes ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SphericalCode:
    name: str
    points: np.ndarray
    covering_radius: float
    certified: bool = False


def deep_holes(P):
    """Circumcenters of the spherical Delaunay cells of ``P`` and their radii.

    The cells are the facets of the convex hull and their circumcenters are
    the outward facet normals; works on S^{d-1} for any d >= 3.
    """
    P = unit(as_points(P))
    hull = ConvexHull(P)
    if np.any(hull.equations[:, -1] >= 0):
        raise GeometryError("origin is not interior to the hull of the points")
    normals = hull.equations[:, :-1]
    dots = np.einsum("fkd,fd->fk", P[hull.simplices], normals)
    return normals, np.arccos(np.clip(dots.min(axis=1), -1, 1))


def covering_radius_hull(P) -> float:
    """Exact covering radius of a point set whose convex hull contains the origin."""
    return float(deep_holes(P)[1].max())


def covering_radius_grid(P, n_grid: int = 1_000_000, refine: int = 24, chunk: int = 200_000) -> float:
    """Max over a Fibonacci grid of the distance to the nearest code point, locally refined."""
    P = unit(as_points(P, dim=3))
    S = fibonacci_sphere(n_grid)
    near = np.empty(n_grid)
    for s in range(0, n_grid, chunk):
        near[s:s + chunk] = (S[s:s + chunk] @ P.T).max(axis=1)
    dist = np.arccos(np.clip(near, -1, 1))
    best = float(dist.max())
    if refine:
        for k in np.argsort(dist)[-refine:]:
            e1, e2 = tangent_basis(S[k])

            def neg(z, s0=S[k], e1=e1, e2=e2):
                x = unit(s0 + z[0] * e1 + z[1] * e2)
                return -float(np.arccos(np.clip((P @ x).max(), -1, 1)))

            res = minimize(neg, np.zeros(2), method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 2000})
            best = max(best, -res.fun)
    return best


def _tetra():
    return unit(np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float))


def _bipyramid():
    ang = np.arange(3) * TWO_PI / 3
    eq = np.column_stack([np.cos(ang), np.sin(ang), np.zeros(3)])
    return np.vstack([[0, 0, 1], [0, 0, -1], eq])


def _octa():
    return _OCTA.copy()


_CODES = {
    "TETRA-4": (_tetra, math.acos(1.0 / 3.0)),
    "BIPYR-5": (_bipyramid, math.atan(2.0)),
    "OCTA-6": (_octa, math.acos(1.0 / math.sqrt(3.0))),
}


@functools.lru_cache(maxsize=None)
def code_registry(n_grid: int = 1_000_000) -> tuple:
    """Known codes on S^2, each certified against a grid max-min at load."""
    out = []
    for name, (make, exact) in _CODES.items():
        P = make()
        grid = covering_radius_grid(P, n_grid)
        out.append(SphericalCode(name, P, exact, certified=abs(grid - exact) <= 1e-4))
    return tuple(out)


def get_code(name: str) -> SphericalCode:
    key = name.upper()
    for code in code_registry():
        if code.name == key:
            return code
    raise KeyError(f"unknown code {name!r}; known: {', '.join(_CODES)}")


@dataclass(frozen=True)
class Infeasible:
    r: float
    R: float
    deficit: float


FEASIBILITY_TOL = 1e-12


def jung_code_directions(diamX: float, code: SphericalCode, seed: int = 0):
    """Directions ``-p`` for the code points ``p``, or :class:`Infeasible`.

    The Gauss image of every boundary point of B[X] has chord diameter at most
    diam(X), so it sits in a cap of the Jung radius ``r``.  If ``r + R <= pi/2``
    the hemispheres centered at the code points contain every Gauss image.
    A nonzero seed applies a random rotation to step off degenerate positions.
    """
    if not (0 <= diamX < 2):
        raise OutOfRange("diameter must lie in [0, 2)")
    try:
        r = jung_cap_radius(diamX, 3) if diamX > 0 else 0.0
    except OutOfRange:
        r = math.pi / 2
    R = code.covering_radius
    excess = r + R - math.pi / 2
    # r + R = pi/2 exactly for OCTA-6 at diam 1; allow rounding at the boundary
    if excess > FEASIBILITY_TOL:
        return Infeasible(r, R, excess)
    rot = random_rotation(seed)
    return DirectionSet(-(code.points @ rot.T), label=f"{code.name}/seed={seed}")


def corollary_dispatch(diamX: float):
    if diamX <= 0:
        raise OutOfRange("diameter must be positive")
    if diamX <= 0.577:
        return 4, "TETRA-4"
    if diamX <= 0.774:
        return 5, "BIPYR-5"
    if diamX <= 1.0:
        return 6, "OCTA-6"
    raise OutOfScope("no code-based bound for diam(X) > 1")


def jung_certified(B: BallPolyhedron, code: SphericalCode, seed: int = 0):
    """Jung directions for ``B`` plus certificate; one reseeded retry on INDETERMINATE."""
    D = jung_code_directions(B.generators.diam, code, seed)
    if isinstance(D, Infeasible):
        return D, None
    cert = verify_illumination(B, D)
    if cert.status is Status.INDETERMINATE:
        D = jung_code_directions(B.generators.diam, code, seed + 1)
        cert = verify_illumination(B, D)
    return D, cert
