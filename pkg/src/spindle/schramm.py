"""Quantitative machinery behind the exponential illumination bound.

Measure lower bounds for positive polars, cap coverings of the sphere, the
reflection principle, the randomized direction generator, and the assembly
of the final bound.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .ball_poly import BallPolyhedron, normal_image_union
from .geom_core import (
    GeometryError,
    OutOfRange,
    SphericalCap,
    as_points,
    fibonacci_sphere,
    sample_cap,
    uniform_sphere_sample,
    unit,
)
from .illum import DirectionSet, Status, deep_holes, verify_illumination

SQRT2M1 = math.sqrt(2.0) - 1.0
BLOCK = 1 << 16


class CoverFailed(GeometryError):
    pass


class GenerationFailed(RuntimeError):
    pass


class ChainBroken(AssertionError):
    pass


@dataclass(frozen=True)
class BoundParams:
    d: int
    epsilon: float
    t: float

    def __post_init__(self):
        if self.d < 3:
            raise OutOfRange("d must be at least 3")
        if not (0 < self.epsilon <= SQRT2M1 + 1e-15):
            raise OutOfRange("epsilon must lie in (0, sqrt2 - 1]")
        if not (0 < self.t <= math.sqrt(2.0) + 1e-15):
            raise OutOfRange("t must lie in (0, sqrt2]")


@dataclass(frozen=True)
class MCConfig:
    samples: int = 100_000
    seed: int = 0
    confidence_z: float = 3.0

    def __post_init__(self):
        if self.samples < 1000:
            raise ValueError("need at least 1000 samples")


# --- measure bound --------------------------------------------------------------

def vdim_lower_bound(t: float, d: int) -> float:
    """Lower bound on the measure of A+ over all A on S^{d-1} with diam(A) <= t."""
    if d < 3 or not (0 < t <= math.sqrt(2.0) + 1e-15):
        raise OutOfRange("need 0 < t <= sqrt2 and d >= 3")
    inner = 1.5 + ((2 - 1 / d) * t * t - 2) / (4 - (2 - 2 / d) * t * t)
    return inner ** (-(d - 1) / 2) / math.sqrt(8 * math.pi * d)


def _block_seeds(seed: int, samples: int):
    nblocks = -(-samples // BLOCK)
    children = np.random.SeedSequence(seed).spawn(nblocks)
    sizes = [BLOCK] * (nblocks - 1) + [samples - BLOCK * (nblocks - 1)]
    return list(zip(children, sizes))


def positive_polar_measure(A, cfg: MCConfig = MCConfig()) -> tuple[float, float]:
    """Monte Carlo estimate of the normalized measure of ``A+`` and its CI half-width.

    Samples are drawn in fixed-size blocks with child seeds spawned from the
    master seed, so the result does not depend on how blocks are scheduled.
    """
    A = unit(as_points(A))
    d = A.shape[1]
    hits = 0
    for child, size in _block_seeds(cfg.seed, cfg.samples):
        Z = np.random.default_rng(child).standard_normal((size, d))
        Z /= np.linalg.norm(Z, axis=1, keepdims=True)
        hits += int(np.count_nonzero((Z @ A.T).min(axis=1) > 0))
    p = hits / cfg.samples
    return p, cfg.confidence_z * math.sqrt(max(p * (1 - p), 0.0) / cfg.samples)


def sample_bounded_diameter_set(center, cap_radius: float, t: float, m: int, rng,
                                max_tries: int = 200) -> np.ndarray:
    """Up to ``m`` points of ``C[center, cap_radius]`` with pairwise chord <= t.

    Candidates are drawn in the cap and kept if they respect the diameter
    bound against everything kept so far.  The first point is always kept.
    """
    pts = []
    for _ in range(m):
        for _ in range(max_tries):
            y = sample_cap(center, cap_radius, 1, rng)[0]
            if not pts or np.linalg.norm(np.asarray(pts) - y, axis=1).max() <= t:
                pts.append(y)
                break
    return np.asarray(pts)


# --- reflection principle ---------------------------------------------------------

def reflect(x, u):
    x = np.asarray(x, dtype=float)
    return 2 * (x @ u)[..., None] * u - x


@dataclass
class ReflectionReport:
    a: float
    t: float
    trials: int
    pairs: int
    violations: int
    counterexamples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def reflection_check(a: float, t: float, trials: int, seed: int, points: int = 1000,
                     d: int = 3, set_size: int = 12, shrink: float = 1e-6) -> ReflectionReport:
    """Empirical test that ``A+ ∪ R_u(A+)`` covers the open cap ``C(u, arctan(2a/t))``.

    Every trial draws a random axis ``u`` and a set ``A`` in ``C[u, arccos a]``
    with chord diameter at most ``t``.  Trials cycle through three kinds of
    ``A``: a pair at chord exactly ``t`` symmetric about ``u``, a pair at chord
    ``t`` on the rim of the cap (the configuration where the cap is sharp),
    and a random set grown by sequential rejection.
    """
    if not (0 < a < 1) or not (0 < t <= 2 * math.sqrt(1 - a * a) + 1e-15):
        raise OutOfRange("need 0 < a < 1 and 0 < t <= 2 sqrt(1 - a^2)")
    rng = np.random.default_rng(seed)
    cap_r = math.acos(a)
    target = math.atan(2 * a / t) - shrink
    report = ReflectionReport(a, t, trials, 0, 0)
    for k in range(trials):
        u = uniform_sphere_sample(d, 1, rng)[0]
        w1 = rng.standard_normal(d)
        w1 = unit(w1 - (w1 @ u) * u)
        if k % 3 == 0:
            beta = math.asin(min(t / 2, 1.0))
            A = np.stack([math.cos(beta) * u + math.sin(beta) * w1,
                          math.cos(beta) * u - math.sin(beta) * w1])
        elif k % 3 == 1:
            w2 = rng.standard_normal(d)
            w2 = unit(w2 - (w2 @ u) * u - (w2 @ w1) * w1)
            phi = math.asin(min(1.0, t / (2 * math.sin(cap_r))))
            side = math.sin(cap_r) * (math.cos(phi) * w1 + math.sin(phi) * w2)
            other = math.sin(cap_r) * (math.cos(phi) * w1 - math.sin(phi) * w2)
            A = np.stack([a * u + side, a * u + other])
        else:
            A = sample_bounded_diameter_set(u, cap_r, t, set_size, rng)
        Z = sample_cap(u, target, points, rng)
        ok = ((Z @ A.T).min(axis=1) > 0) | ((reflect(Z, u) @ A.T).min(axis=1) > 0)
        bad = np.flatnonzero(~ok)
        report.pairs += len(Z)
        report.violations += len(bad)
        for j in bad[:3]:
            report.counterexamples.append({"u": u.tolist(), "A": A.tolist(), "z": Z[j].tolist()})
    return report


# --- cap coverings ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CapCover:
    caps: tuple
    d: int
    epsilon: float
    certified: bool
    strategy: str = "greedy"

    @property
    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.caps])

    @property
    def angular_radius(self) -> float:
        return self.caps[0].angular_radius

    def __len__(self):
        return len(self.caps)


def cover_radius(epsilon: float) -> float:
    """Angular radius of a cap with Euclidean diameter ``epsilon``."""
    return math.asin(min(epsilon / 2, 1.0)) if epsilon < 2 else math.pi / 2


def certify_cover(centers, alpha: float, samples: int = 1_000_000, seed: int = 7,
                  slack: float = 1e-6, chunk: int = 100_000) -> bool:
    centers = np.asarray(centers)
    d = centers.shape[1]
    thresh = math.cos(min(alpha + slack, math.pi))
    rng = np.random.default_rng(seed)
    left = samples
    while left:
        n = min(chunk, left)
        Z = uniform_sphere_sample(d, n, rng)
        if (Z @ centers.T).max(axis=1).min() < thresh:
            return False
        left -= n
    return True


def _farthest_point_order(S: np.ndarray, stop_radius: float):
    """Greedy farthest-point insertion; returns indices and covering radius after each step."""
    order = [0]
    near = S @ S[0]
    radii = []
    while True:
        j = int(np.argmin(near))
        radii.append(math.acos(max(-1.0, min(1.0, near[j]))))
        if radii[-1] <= stop_radius:
            return order, radii
        order.append(j)
        np.maximum(near, S @ S[j], out=near)


def _build_sample(d: int, n: int) -> np.ndarray:
    if d == 3:
        return fibonacci_sphere(n)
    return uniform_sphere_sample(d, n, 1234 + d)


def _cubed_sphere(d: int, k: int) -> np.ndarray:
    g = np.linspace(-1, 1, k)
    pts = []
    for axis in range(d):
        for sign in (-1.0, 1.0):
            grids = np.meshgrid(*([g] * (d - 1)), indexing="ij")
            rest = np.stack([x.ravel() for x in grids], axis=1)
            P = np.insert(rest, axis, sign, axis=1)
            pts.append(P)
    return unit(np.unique(np.round(np.vstack(pts), 12), axis=0))


def fill_holes(centers, alpha: float, max_rounds: int = 50) -> np.ndarray:
    """Add deep holes as new centers until the exact covering radius is at most ``alpha``."""
    centers = np.asarray(centers)
    for _ in range(max_rounds):
        normals, radii = deep_holes(centers)
        over = radii > alpha
        if not over.any():
            return centers
        # one new center per round per cluster of nearby holes
        new = []
        for k in np.argsort(-radii[over]):
            h = normals[over][k]
            if not new or np.max(np.asarray(new) @ h) < math.cos(alpha):
                new.append(h)
        centers = np.vstack([centers, new])
    raise CoverFailed("hole filling did not converge")


def exact_cover_radius(centers) -> float:
    try:
        return float(deep_holes(centers)[1].max())
    except (GeometryError, ValueError):
        return math.pi


@functools.lru_cache(maxsize=64)
def cover_sphere_caps(d: int, epsilon: float, strategy: str = "greedy",
                      build_samples: int | None = None, cert_samples: int = 1_000_000) -> CapCover:
    """Certified covering of S^{d-1} by closed caps of Euclidean diameter ``epsilon``.

    Greedy: farthest-point insertion over a fine sample, stopped once the
    sample is covered, then completed by inserting the remaining deep holes.
    Lattice: Fibonacci points on S^2 or a normalized cube grid on S^3, refined
    until they cover.  Either way a cover is accepted only if its exact
    covering radius (from the hull) is at most the cap radius and a 10^6-point
    sample finds no uncovered point.
    """
    if not (0 < epsilon <= 2):
        raise OutOfRange("epsilon must lie in (0, 2]")
    if d not in (3, 4):
        raise OutOfRange("constructive covers are available for d in {3, 4}")
    alpha = cover_radius(epsilon)
    bound = (1 + 4 / epsilon) ** d

    def accept(centers):
        return exact_cover_radius(centers) <= alpha and certify_cover(centers, alpha, cert_samples)

    def result(centers):
        caps = tuple(SphericalCap(c, alpha) for c in centers)
        return CapCover(caps, d, epsilon, True, strategy)

    if alpha >= math.pi / 2:
        # closed hemispheres: an antipodal pair already covers (no hull in this case)
        e = np.eye(d)[0]
        centers = np.stack([e, -e])
        if certify_cover(centers, alpha, cert_samples):
            return result(centers)
    if strategy == "greedy":
        n = build_samples or (40_000 if d == 3 else 80_000)
        S = _build_sample(d, n)
        order, _ = _farthest_point_order(S, alpha)
        centers = fill_holes(S[order], alpha)
        if accept(centers):
            return result(centers)
    elif strategy == "lattice":
        for k in range(2, 400):
            centers = fibonacci_sphere(2 * k) if d == 3 else _cubed_sphere(d, k)
            if len(centers) >= bound:
                break
            if accept(centers):
                return result(centers)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    raise CoverFailed(f"could not certify a cover for d={d}, epsilon={epsilon}")


def cover_count_bound(d: int, epsilon: float) -> float:
    return (1 + 4 / epsilon) ** d


# --- budget and the randomized generator ----------------------------------------------

def log_cover_bound(d: int, epsilon: float) -> float:
    return d * math.log1p(4 / epsilon)


def budget_from(log_n: float, V: float) -> float:
    """``1 + ln n / (-ln(1 - V))`` for a cover of n sets each hit with probability >= V."""
    if not (0 < V < 1):
        raise OutOfRange("V must lie in (0, 1)")
    return 1 + log_n / -math.log1p(-V)


def schramm_direction_budget(d: int, epsilon: float) -> float:
    """``1 + ln n / (-ln(1 - V))`` with the cover-count bound for n and the measure bound for V."""
    if d < 3 or not (0 < epsilon <= SQRT2M1 + 1e-15):
        raise OutOfRange("need d >= 3 and 0 < epsilon <= sqrt2 - 1")
    return budget_from(log_cover_bound(d, epsilon), vdim_lower_bound(1 + epsilon, d))


@dataclass
class GenerationResult:
    directions: DirectionSet
    draws: int
    caps: int
    budget: float
    certificate: object


def generate_illuminating_directions(B: BallPolyhedron, epsilon: float, cfg: MCConfig,
                                     cover_strategy: str = "greedy") -> GenerationResult:
    """Draw uniform directions until each cover cap's normal-image union is hit.

    A draw ``u`` hits cap ``A_i`` when ``u`` lies in the positive polar of the
    sampled normal-image union ``U(A_i)``.  Once every cap is hit, the set is
    handed to the certified verifier; further draws are appended until it
    certifies.  The positive-polar test is heuristic at the sampling resolution,
    which is why the final verdict is the verifier's.
    """
    gs = B.generators
    if gs.diam > 1 + B.tol.eq_tol or gs.cr >= 1:
        raise OutOfRange("need diam(X) <= 1 and cr(X) < 1")
    budget = schramm_direction_budget(3, epsilon)
    cover = cover_sphere_caps(3, epsilon, cover_strategy)
    unions = [normal_image_union(B, cap).hull_sample for cap in cover.caps]
    H = np.vstack(unions)
    offsets = np.cumsum([0] + [len(u) for u in unions[:-1]])
    hit = np.zeros(len(unions), dtype=bool)
    rng = np.random.default_rng(cfg.seed)
    margin = B.tol.strict_margin
    drawn = []
    max_draws = int(100 * math.ceil(budget))
    cert = None
    while len(drawn) < max_draws:
        u = uniform_sphere_sample(3, 1, rng)[0]
        drawn.append(u)
        hit |= np.minimum.reduceat(H @ u, offsets) > margin
        if hit.all():
            cert = verify_illumination(B, np.array(drawn))
            if cert.status is Status.CERTIFIED:
                D = DirectionSet(np.array(drawn), label=f"random/eps={epsilon}/seed={cfg.seed}")
                return GenerationResult(D, len(drawn), len(unions), budget, cert)
    raise GenerationFailed(f"no certified set within {max_draws} draws")


def random_illuminating_directions(B: BallPolyhedron, epsilon: float, cfg: MCConfig) -> DirectionSet:
    return generate_illuminating_directions(B, epsilon, cfg).directions


# --- final bound ----------------------------------------------------------------------------

def theorem_bound(d: int) -> tuple[float, float]:
    if d < 3:
        raise OutOfRange("d must be at least 3")
    core = d ** 1.5 * 1.5 ** (d / 2)
    return 4 * math.sqrt(math.pi / 3) * core * (3 + math.log(d)), 5 * core * (4 + math.log(d))


def log_theorem_bound(d: int) -> float:
    """Natural log of the tight bound, usable where the bound itself overflows."""
    return (math.log(4 * math.sqrt(math.pi / 3)) + 1.5 * math.log(d)
            + math.log(3 + math.log(d)) + d / 2 * math.log(1.5))


def epsilon0(d: int) -> float:
    return math.sqrt(2 * d / (2 * d - 1)) - 1


def kahn_kalai_lower(d: int) -> float:
    if d < 1:
        raise OutOfRange("d must be positive")
    return 1.2 ** math.sqrt(d)


def _log_gap(x: float) -> float:
    """``-ln(1 - x) - x`` without cancellation for small ``x``."""
    if x < 1e-3:
        return x * x * (1 / 2 + x * (1 / 3 + x * (1 / 4 + x / 5)))
    return -math.log1p(-x) - x


@dataclass
class ChainReport:
    d: int
    epsilon0: float
    values: dict
    checks: list

    @property
    def holds(self) -> bool:
        return all(ok for _, ok in self.checks)


def assemble_theorem_chain(d: int) -> ChainReport:
    """Evaluate every intermediate of the bound's derivation and check each step.

    Steps, with ``e = epsilon0(d)``, ``V`` the measure bound at ``1 + e``, and
    ``K = sqrt(8 pi d) (3/2)^((d-1)/2)``:

    budget = 1 + ln n / -ln(1 - V)  <  1 + ln n / V  =  1 + K ln n
           <=  1 + K d ln(1 + 4/e)   <  1 + K d ln(16 d)
            =  1 + 4 sqrt(pi/3) d^1.5 (3/2)^(d/2) (ln 16 + ln d)  <  tight  <  relaxed

    At large d, ``V`` underflows the gap between ``x`` and ``-ln(1 - x)``; the
    first strict step is then checked through the series of that gap.
    """
    if d < 3:
        raise OutOfRange("d must be at least 3")
    e = epsilon0(d)
    V = vdim_lower_bound(1 + e, d)
    K = math.sqrt(8 * math.pi * d) * 1.5 ** ((d - 1) / 2)
    ln_n = log_cover_bound(d, e)
    vals = {
        "budget": budget_from(ln_n, V),
        "over_V": 1 + ln_n / V,
        "explicit_V": 1 + K * ln_n,
        "cover_bound": 1 + K * d * math.log1p(4 / e),
        "sixteen_d": 1 + K * d * math.log(16 * d),
        "closed_form": 1 + 4 * math.sqrt(math.pi / 3) * d ** 1.5 * 1.5 ** (d / 2)
                       * (math.log(16) + math.log(d)),
    }
    vals["tight"], vals["relaxed"] = theorem_bound(d)
    rel = lambda x, y: abs(x - y) <= 1e-12 * max(abs(x), abs(y))  # noqa: E731
    checks = [
        ("0 < epsilon0 < sqrt2 - 1", 0 < e < SQRT2M1),
        ("epsilon0 > 4/(16d - 1)", e > 4 / (16 * d - 1)),
        ("V(1 + epsilon0) has unit inner term", rel(1 / V, K)),
        ("x < -ln(1 - x) at x = V", _log_gap(V) > 0),
        ("budget <= over_V", vals["budget"] <= vals["over_V"]),
        ("over_V == explicit_V", rel(vals["over_V"], vals["explicit_V"])),
        ("explicit_V == cover_bound", rel(vals["explicit_V"], vals["cover_bound"])),
        ("1 + 4/epsilon0 < 16d", 1 + 4 / e < 16 * d),
        ("cover_bound < sixteen_d", vals["cover_bound"] < vals["sixteen_d"]),
        ("sixteen_d == closed_form", rel(vals["sixteen_d"], vals["closed_form"])),
        ("closed_form < tight", vals["closed_form"] < vals["tight"]),
        ("tight < relaxed", vals["tight"] < vals["relaxed"]),
    ]
    report = ChainReport(d, e, vals, checks)
    if not report.holds:
        broken = [name for name, ok in checks if not ok]
        raise ChainBroken(f"d={d}: {', '.join(broken)}")
    return report
