"""Vector and spherical primitives shared by the rest of the package.

Points are plain ``numpy`` arrays of shape ``(d,)``; point sets are ``(n, d)``.
Angles are radians throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist
from scipy.spatial.transform import Rotation


class GeometryError(ValueError):
    pass


class NotHemispherical(GeometryError):
    """The point set is not contained in any open hemisphere."""


class OutOfRange(GeometryError):
    pass


@dataclass(frozen=True)
class Tolerance:
    eq_tol: float = 1e-9
    strict_margin: float = 1e-9

    def __post_init__(self):
        if not (self.eq_tol > 0 and self.strict_margin > 0):
            raise ValueError("tolerances must be positive")


DEFAULT_TOL = Tolerance()


def as_points(X, dim: int | None = None) -> np.ndarray:
    """Validate and return ``X`` as a float array of shape ``(n, d)``."""
    arr = np.array(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise GeometryError("expected a nonempty (n, d) point set")
    if arr.shape[1] < 2:
        raise GeometryError("dimension must be at least 2")
    if dim is not None and arr.shape[1] != dim:
        raise GeometryError(f"expected dimension {dim}, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("non-finite coordinates")
    return arr


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise GeometryError("cannot normalize the zero vector")
    return v / n


def as_unit(v, tol: float = 1e-12) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(np.linalg.norm(v, axis=-1) - 1.0) > tol):
        raise GeometryError("not a unit vector")
    return v


def angular_distance(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise GeometryError("dimension mismatch")
    # atan2 form keeps precision near 0 and pi, where arccos of the dot is poor
    return float(math.atan2(_sin_between(u, v), float(np.clip(u @ v, -1.0, 1.0))))


def _sin_between(u, v):
    # |u ^ v| for unit vectors in any dimension
    d = float(np.clip(u @ v, -1.0, 1.0))
    r = v - d * u
    return float(np.linalg.norm(r))


def angles_to(U, v) -> np.ndarray:
    """Angular distances from each row of ``U`` to ``v`` (vectorized)."""
    return np.arccos(np.clip(np.asarray(U) @ np.asarray(v), -1.0, 1.0))


def euclidean_diameter(X) -> float:
    X = as_points(X)
    if len(X) == 1:
        return 0.0
    return float(pdist(X).max())


# --- smallest enclosing ball (move-to-front Welzl) -------------------------

def _ball_from_support(S: np.ndarray):
    p0 = S[0]
    if len(S) == 1:
        return p0.copy(), 0.0
    A = S[1:] - p0
    G = A @ A.T
    rhs = 0.5 * np.diag(G)
    lam, *_ = np.linalg.lstsq(G, rhs, rcond=None)
    c = p0 + lam @ A
    return c, float(np.linalg.norm(c - p0))


def _mtf(P: np.ndarray, order: list, end: int, support: list, dim: int):
    c, r = _ball_from_support(P[support]) if support else (None, -1.0)
    if len(support) == dim + 1:
        return c, r
    i = 0
    while i < end:
        idx = order[i]
        p = P[idx]
        if c is None or np.linalg.norm(p - c) > r * (1 + 1e-12) + 1e-13:
            c, r = _mtf(P, order, i, support + [idx], dim)
            # move-to-front keeps hard points early for later passes
            order.insert(0, order.pop(i))
        i += 1
    return c, r


def circumradius(X, tol: Tolerance = DEFAULT_TOL):
    """Radius and center of the smallest Euclidean ball containing ``X``."""
    X = as_points(X)
    n, dim = X.shape
    P = np.unique(X, axis=0)
    order = list(np.random.default_rng(0).permutation(len(P)))
    c, r = _mtf(P, order, len(P), [], dim)
    dists = np.linalg.norm(X - c, axis=1)
    r = float(max(r, dists.max()))
    assert np.all(dists <= r + tol.eq_tol)
    return r, c


# --- caps -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SphericalCap:
    center: np.ndarray
    angular_radius: float
    closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "center", as_unit(unit(self.center)))
        if not (0.0 <= self.angular_radius <= math.pi + 1e-15):
            raise OutOfRange("cap radius must lie in [0, pi]")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def euclidean_diameter(self) -> float:
        if self.angular_radius >= math.pi / 2:
            return 2.0
        return 2.0 * math.sin(self.angular_radius)

    def contains(self, u, tol: float = 0.0):
        ang = angles_to(np.atleast_2d(u), self.center)
        res = ang <= self.angular_radius + tol if self.closed else ang < self.angular_radius - tol
        return bool(res[0]) if np.ndim(u) == 1 else res

    def boundary(self, resolution: float = 1e-3) -> np.ndarray:
        """Points on the bounding circle (d = 3), spaced at most ``resolution`` apart."""
        if self.dim != 3:
            raise GeometryError("cap boundaries are only sampled on S^2")
        e1, e2 = tangent_basis(self.center)
        circ = 2 * math.pi * math.sin(self.angular_radius)
        k = max(8, int(math.ceil(circ / resolution)))
        t = np.linspace(0, 2 * math.pi, k, endpoint=False)
        a = self.angular_radius
        return (math.cos(a) * self.center[None, :]
                + math.sin(a) * (np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2))


def tangent_basis(n: np.ndarray):
    """Orthonormal ``(e1, e2)`` with ``e1 x e2 = n`` for a unit ``n`` in E^3."""
    n = unit(n)
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = unit(a - (a @ n) * n)
    e2 = np.cross(n, e1)
    return e1, e2


def smallest_enclosing_cap(Y, tol: Tolerance = DEFAULT_TOL) -> SphericalCap:
    """Minimal closed cap containing unit vectors ``Y`` (on S^2).

    Uses the reduction to the smallest enclosing Euclidean ball: for a set in
    an open hemisphere the ball's support points lie on the sphere, so the
    normalized ball center is the cap center.
    """
    Y = as_unit(as_points(Y, dim=3), tol=1e-9)
    r, c = circumradius(Y, tol)
    nc = np.linalg.norm(c)
    if r >= 1.0 - tol.strict_margin or nc <= tol.strict_margin:
        raise NotHemispherical("points span no open hemisphere")
    p = c / nc
    if np.min(Y @ p) <= tol.strict_margin:
        raise NotHemispherical("points span no open hemisphere")
    radius = float(np.max(angles_to(Y, p)))
    return SphericalCap(p, radius)


def jung_cap_radius(t: float, d: int) -> float:
    """Angular radius of a cap covering any subset of S^{d-1} of chord diameter ``t``."""
    if d < 3 or t <= 0:
        raise OutOfRange("need t > 0 and d >= 3")
    arg = t * math.sqrt((d - 1) / (2 * d))
    if arg > 1.0:
        raise OutOfRange("arcsin argument exceeds 1")
    return math.asin(arg)


def gauss_sdiam_bound(diamX: float) -> float:
    """Spherical diameter bound ``2 asin(diamX / 2)`` on Gauss images of B[X]."""
    if not (0 < diamX <= 2):
        raise OutOfRange("diameter must lie in (0, 2]")
    return 2.0 * math.asin(diamX / 2.0)


# --- sampling -------------------------------------------------------------

def uniform_sphere_sample(d: int, n: int, seed) -> np.ndarray:
    if d < 2 or n < 1:
        raise GeometryError("need d >= 2 and n >= 1")
    rng = np.random.default_rng(seed)
    return unit(rng.standard_normal((n, d)))


def sample_cap(center, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform points in the closed cap ``C[center, radius]`` of S^{d-1}."""
    center = unit(center)
    d = center.shape[0]
    if d == 3:
        z = rng.uniform(math.cos(radius), 1.0, n)
    else:
        # angle density is proportional to sin^{d-2}; rejection against its max
        out = []
        smax = math.sin(min(radius, math.pi / 2)) ** (d - 2)
        while sum(len(o) for o in out) < n:
            th = rng.uniform(0, radius, 2 * n + 16)
            keep = rng.uniform(0, smax, th.size) <= np.sin(th) ** (d - 2)
            out.append(th[keep])
        z = np.cos(np.concatenate(out)[:n])
    g = rng.standard_normal((n, d))
    g -= (g @ center)[:, None] * center
    t = unit(g)
    return z[:, None] * center + np.sqrt(np.clip(1 - z * z, 0, None))[:, None] * t


def random_rotation(seed) -> np.ndarray:
    """3x3 rotation matrix; seed 0 gives the identity."""
    if seed == 0:
        return np.eye(3)
    return Rotation.random(random_state=np.random.default_rng(seed)).as_matrix()


def fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = math.pi * (3 - math.sqrt(5)) * i
    s = np.sqrt(1 - z * z)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


# --- spherical polygons ---------------------------------------------------

def _hull2d(P: np.ndarray) -> list:
    """Andrew's monotone chain; returns CCW hull indices (collinear points dropped)."""
    idx = sorted(range(len(P)), key=lambda k: (P[k, 0], P[k, 1]))
    if len(idx) <= 2:
        return idx

    def cross(o, a, b):
        return (P[a, 0] - P[o, 0]) * (P[b, 1] - P[o, 1]) - (P[a, 1] - P[o, 1]) * (P[b, 0] - P[o, 0])

    lower, upper = [], []
    for k in idx:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], k) <= 1e-15:
            lower.pop()
        lower.append(k)
    for k in reversed(idx):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], k) <= 1e-15:
            upper.pop()
        upper.append(k)
    return lower[:-1] + upper[:-1]


@dataclass(frozen=True, eq=False)
class SphericalPolygon:
    """Spherical convex hull of finitely many unit vectors on S^2.

    ``vertices`` are ordered counterclockwise seen from outside the sphere;
    one or two vertices describe a point or a great-circle arc.
    """

    vertices: np.ndarray
    witness: SphericalCap = field(repr=False)

    @classmethod
    def from_points(cls, Y, tol: Tolerance = DEFAULT_TOL) -> "SphericalPolygon":
        Y = unit(as_points(Y, dim=3))
        cap = smallest_enclosing_cap(Y, tol)
        if len(Y) <= 2:
            return cls(Y, cap)
        e1, e2 = tangent_basis(cap.center)
        h = Y @ cap.center
        P = np.column_stack([(Y @ e1) / h, (Y @ e2) / h])
        order = _hull2d(P)
        if len(order) < 3:
            # collinear: keep the two extreme points of the arc
            order = [order[0], order[-1]]
        return cls(Y[order], cap)

    def __len__(self):
        return len(self.vertices)

    def contains(self, u, tol: float = 0.0) -> bool:
        u = unit(u)
        V = self.vertices
        if len(V) == 1:
            return angular_distance(V[0], u) <= tol
        if len(V) == 2:
            return arc_distance(u, V[0], V[1]) <= tol
        if u @ self.witness.center <= 0:
            return False
        for a, b in zip(V, np.roll(V, -1, axis=0)):
            if np.cross(a, b) @ u < -tol:
                return False
        return True

    def arcs(self):
        V = self.vertices
        if len(V) == 2:
            return [(V[0], V[1])]
        if len(V) == 1:
            return []
        return list(zip(V, np.roll(V, -1, axis=0)))


def arc_distance(a, p, q) -> float:
    """Angular distance from ``a`` to the minor great arc from ``p`` to ``q``."""
    return float(arc_distances(np.atleast_2d(a), np.atleast_2d(p), np.atleast_2d(q))[0])


def arc_distances(A, P, Q) -> np.ndarray:
    """Row-wise angular distance from ``A[k]`` to the minor arc ``P[k]``-``Q[k]`` (E^3)."""
    A, P, Q = np.broadcast_arrays(np.asarray(A, float), np.asarray(P, float), np.asarray(Q, float))
    dp = np.arccos(np.clip(np.einsum("ij,ij->i", A, P), -1, 1))
    dq = np.arccos(np.clip(np.einsum("ij,ij->i", A, Q), -1, 1))
    best = np.minimum(dp, dq)
    N = np.cross(P, Q)
    nn = np.linalg.norm(N, axis=1)
    ok = nn > 1e-15
    N[ok] /= nn[ok, None]
    an = np.einsum("ij,ij->i", A, N)
    proj = A - an[:, None] * N
    on_arc = ok & (np.einsum("ij,ij->i", np.cross(P, proj), N) >= 0) & (
        np.einsum("ij,ij->i", np.cross(proj, Q), N) >= 0) & (np.linalg.norm(proj, axis=1) > 1e-15)
    perp = np.arcsin(np.clip(np.abs(an), 0, 1))
    return np.where(on_arc, np.minimum(best, perp), best)


def cap_meets_polygon(cap: SphericalCap, poly: SphericalPolygon) -> bool:
    V = poly.vertices
    if np.any(angles_to(V, cap.center) <= cap.angular_radius):
        return True
    if len(V) >= 3 and poly.contains(cap.center):
        return True
    arcs = poly.arcs()
    if not arcs:
        return False
    P = np.array([a for a, _ in arcs])
    Q = np.array([b for _, b in arcs])
    return bool(np.any(arc_distances(cap.center[None, :], P, Q) <= cap.angular_radius))


# --- JSON point sets ------------------------------------------------------

def dump_points(X, unit_flag: bool = False, **extra) -> dict:
    X = as_points(X)
    doc = {"dim": int(X.shape[1]), "points": X.tolist()}
    if unit_flag:
        doc["unit"] = True
    doc.update(extra)
    return doc


def load_points(source) -> tuple[np.ndarray, dict]:
    """Read a ``{"dim": d, "points": [...]}`` document (path or dict)."""
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text())
    else:
        doc = source
    if not isinstance(doc, dict) or "points" not in doc or "dim" not in doc:
        raise GeometryError("point file needs 'dim' and 'points'")
    X = as_points(doc["points"], dim=int(doc["dim"]))
    if doc.get("unit"):
        as_unit(X, tol=1e-9)
    return X, doc
