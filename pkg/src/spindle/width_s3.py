"""Integral-geometry identities for constant-width bodies on S^3, checked on caps.

A cap of angular radius rho in S^3 has constant width 2 rho.  Its polar is
the cap of radius pi/2 - rho about the antipode.  We check

    M1 + 2 V = 2 pi w               (Blaschke)
    M1 + V + V* = pi^2              (Allendoerfer)
    pi^2 + V = 2 pi w + V*          (their difference)

both in closed form and by independent quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom_core import OutOfRange

PI2 = math.pi ** 2


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class CapBodyS3:
    angular_radius: float

    def __post_init__(self):
        if not (0 < self.angular_radius <= math.pi / 2):
            raise OutOfRange("cap radius must lie in (0, pi/2]")

    @property
    def width(self) -> float:
        return 2 * self.angular_radius

    @classmethod
    def from_width(cls, w: float) -> "CapBodyS3":
        return cls(w / 2)


def cap_volume(rho: float) -> float:
    if not (0 <= rho <= math.pi):
        raise OutOfRange("rho must lie in [0, pi]")
    return 2 * math.pi * rho - math.pi * math.sin(2 * rho)


def polar_body(rho: float) -> CapBodyS3:
    if not (0 < rho < math.pi / 2):
        raise OutOfRange("rho must lie in (0, pi/2)")
    return CapBodyS3(math.pi / 2 - rho)


def mean_curvature_integral(rho: float) -> float:
    """Boundary area 4 pi sin^2 rho times mean curvature cot rho."""
    if not (0 < rho < math.pi / 2):
        raise OutOfRange("rho must lie in (0, pi/2)")
    return 2 * math.pi * math.sin(2 * rho)


# --- quadrature -----------------------------------------------------------------

def _sphere_grid(grid: int):
    """Midpoint rule in z (area-uniform) times periodic trapezoid in longitude."""
    if grid < 32:
        raise ValueError("grid must be at least 32")
    z = -1 + (np.arange(grid) + 0.5) * (2 / grid)
    lam = np.arange(grid) * (2 * math.pi / grid)
    Z, L = np.meshgrid(z, lam, indexing="ij")
    s = np.sqrt(1 - Z * Z)
    omega = np.stack([s * np.cos(L), s * np.sin(L), Z], axis=-1)
    weight = (2 / grid) * (2 * math.pi / grid)
    return Z, L, omega, weight


def volume_quadrature(profile, grid: int) -> float:
    """Volume of a star body about the pole of S^3 with radial function ``profile``.

    ``profile`` maps unit directions (shape ``(..., 3)``) in the tangent space
    at the pole to geodesic radii in [0, pi]; a number means a constant
    profile.  The radial integral of sin^2 is done in closed form.
    """
    _, _, omega, wgt = _sphere_grid(grid)
    r = np.broadcast_to(profile(omega) if callable(profile) else float(profile), omega.shape[:2])
    inner = 0.5 * (r - np.sin(r) * np.cos(r))
    return float(inner.sum() * wgt)


def offset_cap_profile(rho: float, offset: float):
    """Radial function about the pole of a cap of radius ``rho`` whose center
    sits at geodesic distance ``offset < rho`` from the pole (toward e1)."""
    if not (0 <= offset < rho):
        raise OutOfRange("offset must lie in [0, rho)")

    def profile(omega):
        A = math.cos(offset)
        B = math.sin(offset) * omega[..., 0]
        R = np.hypot(A, B)
        return np.arctan2(B, A) + np.arccos(np.clip(math.cos(rho) / R, -1, 1))

    return profile


def _cap_boundary(rho, Z, L):
    s = np.sqrt(1 - Z * Z)
    omega = np.stack([s * np.cos(L), s * np.sin(L), Z, np.zeros_like(Z)], axis=-1)
    pole = np.array([0, 0, 0, 1.0])
    f = math.cos(rho) * pole + math.sin(rho) * omega
    N = -math.sin(rho) * pole + math.cos(rho) * omega
    return f, N


def mean_curvature_quadrature(rho: float, grid: int, h: float = 1e-6) -> float:
    """Integral of the mean curvature of the cap boundary from its second fundamental form.

    The boundary 2-sphere is parametrized over the (z, longitude) grid in R^4;
    tangent vectors and normal derivatives come from central differences.
    """
    Z, L, _, wgt = _sphere_grid(grid)
    fz = (_cap_boundary(rho, Z + h, L)[0] - _cap_boundary(rho, Z - h, L)[0]) / (2 * h)
    fl = (_cap_boundary(rho, Z, L + h)[0] - _cap_boundary(rho, Z, L - h)[0]) / (2 * h)
    Nz = (_cap_boundary(rho, Z + h, L)[1] - _cap_boundary(rho, Z - h, L)[1]) / (2 * h)
    Nl = (_cap_boundary(rho, Z, L + h)[1] - _cap_boundary(rho, Z, L - h)[1]) / (2 * h)
    dot = lambda a, b: np.einsum("...k,...k->...", a, b)  # noqa: E731
    E, F, G = dot(fz, fz), dot(fz, fl), dot(fl, fl)
    hzz, hzl, hlz, hll = dot(fz, Nz), dot(fz, Nl), dot(fl, Nz), dot(fl, Nl)
    det = E * G - F * F
    trace = (G * hzz - F * (hzl + hlz) + E * hll) / det
    return float((0.5 * trace * np.sqrt(det)).sum() * wgt)


@dataclass
class IdentityReport:
    body: CapBodyS3
    V: float
    V_polar: float
    M1: float
    residual_blaschke: float
    residual_allendoerfer: float
    residual_duality: float
    method: str
    tolerance: float
    grid: int | None = None
    error_estimate: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return max(abs(self.residual_blaschke), abs(self.residual_allendoerfer),
                   abs(self.residual_duality)) < self.tolerance

    def to_json(self) -> dict:
        return {
            "rho_rad": self.body.angular_radius, "width_rad": self.body.width,
            "V": self.V, "V_polar": self.V_polar, "M1": self.M1,
            "residual_blaschke": self.residual_blaschke,
            "residual_allendoerfer": self.residual_allendoerfer,
            "residual_duality": self.residual_duality,
            "method": self.method, "tolerance": self.tolerance, "grid": self.grid,
            "error_estimate": self.error_estimate, "passed": self.passed,
        }

    CSV_FIELDS = ("method", "grid", "rho_rad", "width_rad", "V", "V_polar", "M1",
                  "residual_blaschke", "residual_allendoerfer", "residual_duality", "passed")

    def csv_row(self) -> dict:
        doc = self.to_json()
        return {k: doc[k] for k in self.CSV_FIELDS}


ANALYTIC_TOL = 1e-12
QUADRATURE_TOL = 1e-6


def identity_report(rho: float, method: str = "analytic", grid: int = 400,
                    offset: float = 0.0) -> IdentityReport:
    """Residuals of the three identities for the cap of radius ``rho``.

    With ``method="quadrature"`` the volumes come from ``volume_quadrature``
    (optionally with the cap displaced by ``offset`` from the grid pole) and
    M1 from the second fundamental form.  Each quantity is also evaluated at
    half the grid; if the change exceeds the tolerance the run is declared
    non-convergent.
    """
    body = CapBodyS3(rho)
    if not rho < math.pi / 2:
        raise OutOfRange("rho must lie in (0, pi/2)")
    polar = polar_body(rho)
    w = body.width
    if method == "analytic":
        V, Vp, M1 = cap_volume(rho), cap_volume(polar.angular_radius), mean_curvature_integral(rho)
        tol, est, g = ANALYTIC_TOL, {}, None
    elif method == "quadrature":
        def compute(n):
            off = lambda r: offset_cap_profile(r, offset * r) if offset else r  # noqa: E731
            return (volume_quadrature(off(rho), n),
                    volume_quadrature(off(polar.angular_radius), n),
                    mean_curvature_quadrature(rho, n))
        V, Vp, M1 = compute(grid)
        coarse = compute(max(32, grid // 2))
        est = {k: abs(a - b) / 3 for k, a, b in zip(("V", "V_polar", "M1"), (V, Vp, M1), coarse)}
        tol, g = QUADRATURE_TOL, grid
        if max(est.values()) > tol:
            raise QuadratureError(f"quadrature not converged at grid {grid}: {est}")
    else:
        raise ValueError(f"unknown method {method!r}")
    return IdentityReport(
        body, V, Vp, M1,
        residual_blaschke=M1 + 2 * V - 2 * math.pi * w,
        residual_allendoerfer=M1 + V + Vp - PI2,
        residual_duality=PI2 + V - 2 * math.pi * w - Vp,
        method=method, tolerance=tol, grid=g, error_estimate=est,
    )


def convergence_study(rho: float, offset: float, grids=(32, 64, 128, 256)) -> dict:
    """Quadrature error of a displaced cap's volume against the closed form."""
    exact = cap_volume(rho)
    errors = [abs(volume_quadrature(offset_cap_profile(rho, offset), n) - exact) for n in grids]
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    return {"grids": list(grids), "errors": errors, "ratios": ratios}
