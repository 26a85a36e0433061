"""Two-media geometry: interface shapes, point classification, surface sampling.

The space splits into an interior region (medium 1) and its exterior
(medium 2) across an analytic interface S. Supported interfaces: circular
cylinder about a coordinate axis (a strip in dimension 2), a cone with vertex
at the origin, a coordinate hyperplane, and a ball. Classification runs on a
signed distance that is negative inside region 1; the interface itself is the
zero set resolved within a fixed tie tolerance and is assigned to medium 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SURFACE_TOL = 1e-12

CYLINDER = "cylinder"
CONE = "cone"
HALFSPACE = "halfspace"
BALL = "ball"

OMEGA1 = "omega1"
OMEGA2 = "omega2"
SURFACE = "surface"


@dataclass(frozen=True)
class MediumPair:
    """Constant wave speeds squared reciprocals on the two regions."""

    mu1: float
    mu2: float

    def __post_init__(self):
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise ValueError("medium coefficients must be positive")
        if self.mu1 == self.mu2:
            raise ValueError("the two media must differ")

    @property
    def largest(self) -> float:
        return max(self.mu1, self.mu2)

    @property
    def smallest(self) -> float:
        return min(self.mu1, self.mu2)


@dataclass(frozen=True)
class SurfaceSample:
    point: tuple
    normal1: tuple
    area_weight: float


@dataclass(frozen=True)
class Geometry:
    """Interface shape, dimension, media, and orientation.

    axis and plane_index are 1-based coordinate indices. invert swaps the
    roles of the two regions (the signed distance and interface normal flip);
    media are never swapped implicitly.
    """

    kind: str
    dim: int
    media: MediumPair
    radius: float = 0.0
    axis: int = 0
    half_angle: float = 0.0
    plane_index: int = 0
    offset: float = 0.0
    invert: bool = False

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.kind == CYLINDER:
            if self.radius <= 0:
                raise ValueError("cylinder radius must be positive")
            ax = self.axis if self.axis else self.dim
            if not 1 <= ax <= self.dim:
                raise ValueError("cylinder axis out of range")
            object.__setattr__(self, "axis", ax)
        elif self.kind == BALL:
            if self.radius <= 0:
                raise ValueError("ball radius must be positive")
        elif self.kind == CONE:
            if not 0 < self.half_angle <= math.pi / 2:
                raise ValueError("cone half-angle must lie in (0, pi/2]")
            ax = self.axis if self.axis else self.dim
            if not 1 <= ax <= self.dim:
                raise ValueError("cone axis out of range")
            object.__setattr__(self, "axis", ax)
        elif self.kind == HALFSPACE:
            idx = self.plane_index if self.plane_index else 1
            if not 1 <= idx <= self.dim:
                raise ValueError("plane index out of range")
            object.__setattr__(self, "plane_index", idx)
        else:
            raise ValueError(f"unknown geometry kind {self.kind!r}")

    def swapped(self) -> "Geometry":
        """Same interface with regions and media exchanged."""
        media = MediumPair(self.media.mu2, self.media.mu1)
        return Geometry(self.kind, self.dim, media, self.radius, self.axis,
                        self.half_angle, self.plane_index, self.offset,
                        not self.invert)

    def _radial_axes(self) -> tuple:
        return tuple(j for j in range(self.dim) if j != self.axis - 1)


def _signed_distance_arrays(g: Geometry, coords: "list[np.ndarray]") -> np.ndarray:
    """Signed distance to S, negative in region 1, for broadcastable coords."""
    if g.kind == CYLINDER:
        rad2 = sum(coords[j] ** 2 for j in g._radial_axes())
        d = np.sqrt(rad2) - g.radius
    elif g.kind == BALL:
        d = np.sqrt(sum(c**2 for c in coords)) - g.radius
    elif g.kind == HALFSPACE:
        d = coords[g.plane_index - 1] - g.offset
        d = d + np.zeros(np.broadcast_shapes(*(c.shape for c in coords)))
    else:  # cone
        r = np.sqrt(sum(c**2 for c in coords))
        axial = coords[g.axis - 1] + np.zeros_like(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            theta = np.arccos(np.clip(np.where(r > 0, axial / np.where(r > 0, r, 1.0), 1.0),
                                      -1.0, 1.0))
        d = r * np.sin(theta - g.half_angle)
    return -d if g.invert else np.asarray(d, dtype=float)


def signed_distance(g: Geometry, point) -> float:
    pt = np.asarray(point, dtype=float)
    if pt.shape != (g.dim,):
        raise ValueError("point dimension mismatch")
    return float(_signed_distance_arrays(g, [np.asarray(c) for c in pt]))


def classify_point(g: Geometry, point) -> str:
    d = signed_distance(g, point)
    if abs(d) <= SURFACE_TOL:
        return SURFACE
    return OMEGA1 if d < 0 else OMEGA2


def mu_at(g: Geometry, point) -> float:
    """Medium coefficient at a point; interface points take the region-2 value."""
    side = classify_point(g, point)
    return g.media.mu1 if side == OMEGA1 else g.media.mu2


@lru_cache(maxsize=6)
def mu_node_values(g: Geometry, grid) -> np.ndarray:
    """Medium coefficient on every node of a grid (interface ties to region 2)."""
    from .field import mesh

    d = _signed_distance_arrays(g, mesh(grid))
    out = np.where(d < -SURFACE_TOL, g.media.mu1, g.media.mu2)
    out = out + np.zeros(grid.shape)
    out.setflags(write=False)
    return out


def _counts_2d(total: int, len_a: float, len_b: float) -> tuple:
    na = max(8, int(round(math.sqrt(total * len_a / max(len_b, 1e-300)))))
    nb = max(8, int(math.ceil(total / na)))
    return na, nb


def sample_surface(g: Geometry, region_radius: float, target_count: int = 10000):
    """Analytic quadrature samples of S inside the ball of the given radius.

    Returns a list of SurfaceSample whose area weights sum to the surface
    measure of the intersection (exactly, for every kind except the sphere
    cap rule of the ball, which converges at second order). Empty when the
    interface does not meet the ball. The cone vertex is excluded.
    """
    if region_radius <= 0:
        raise ValueError("region radius must be positive")
    if target_count < 8:
        raise ValueError("target count too small")
    R = region_radius
    flip = -1.0 if g.invert else 1.0
    out = []

    if g.kind == CYLINDER:
        rho = g.radius
        if rho >= R:
            return out
        T = math.sqrt(R * R - rho * rho)
        ra = g._radial_axes()
        ax = g.axis - 1
        if g.dim == 3:
            n_phi, n_t = _counts_2d(target_count, 2 * math.pi * rho, 2 * T)
            dphi, dt = 2 * math.pi / n_phi, 2 * T / n_t
            for i in range(n_phi):
                phi = (i + 0.5) * dphi
                c, s = math.cos(phi), math.sin(phi)
                for j in range(n_t):
                    t = -T + (j + 0.5) * dt
                    pt = [0.0] * 3
                    pt[ra[0]], pt[ra[1]], pt[ax] = rho * c, rho * s, t
                    nm = [0.0] * 3
                    nm[ra[0]], nm[ra[1]] = flip * c, flip * s
                    out.append(SurfaceSample(tuple(pt), tuple(nm), rho * dphi * dt))
        else:
            n_t = max(8, target_count // 2)
            dt = 2 * T / n_t
            for side in (-1.0, 1.0):
                for j in range(n_t):
                    t = -T + (j + 0.5) * dt
                    pt = [0.0] * 2
                    pt[ra[0]], pt[ax] = side * rho, t
                    nm = [0.0] * 2
                    nm[ra[0]] = flip * side
                    out.append(SurfaceSample(tuple(pt), tuple(nm), dt))
        return out

    if g.kind == BALL:
        rho = g.radius
        if rho >= R:
            return out
        if g.dim == 3:
            n_t, n_phi = _counts_2d(target_count, math.pi * rho, 2 * math.pi * rho)
            dth, dphi = math.pi / n_t, 2 * math.pi / n_phi
            for i in range(n_t):
                th = (i + 0.5) * dth
                st, ct = math.sin(th), math.cos(th)
                for j in range(n_phi):
                    phi = (j + 0.5) * dphi
                    nvec = (st * math.cos(phi), st * math.sin(phi), ct)
                    pt = tuple(rho * c for c in nvec)
                    nm = tuple(flip * c for c in nvec)
                    out.append(SurfaceSample(pt, nm, rho * rho * st * dth * dphi))
        else:
            m = max(8, target_count)
            dphi = 2 * math.pi / m
            for j in range(m):
                phi = (j + 0.5) * dphi
                nvec = (math.cos(phi), math.sin(phi))
                out.append(SurfaceSample(tuple(rho * c for c in nvec),
                                         tuple(flip * c for c in nvec), rho * dphi))
        return out

    if g.kind == HALFSPACE:
        c0 = g.offset
        if abs(c0) >= R:
            return out
        smax = math.sqrt(R * R - c0 * c0)
        i0 = g.plane_index - 1
        others = tuple(j for j in range(g.dim) if j != i0)
        if g.dim == 3:
            n_s, n_phi = _counts_2d(target_count, smax, 2 * math.pi * smax / 2)
            ds, dphi = smax / n_s, 2 * math.pi / n_phi
            for i in range(n_s):
                s = (i + 0.5) * ds
                for j in range(n_phi):
                    phi = (j + 0.5) * dphi
                    pt = [0.0] * 3
                    pt[i0] = c0
                    pt[others[0]], pt[others[1]] = s * math.cos(phi), s * math.sin(phi)
                    nm = [0.0] * 3
                    nm[i0] = flip
                    out.append(SurfaceSample(tuple(pt), tuple(nm), s * ds * dphi))
        else:
            n_t = max(8, target_count)
            dt = 2 * smax / n_t
            for j in range(n_t):
                t = -smax + (j + 0.5) * dt
                pt = [0.0] * 2
                pt[i0], pt[others[0]] = c0, t
                nm = [0.0] * 2
                nm[i0] = flip
                out.append(SurfaceSample(tuple(pt), tuple(nm), dt))
        return out

    # cone, vertex excluded by the open slant range
    th0 = g.half_angle
    ax = g.axis - 1
    ra = g._radial_axes()
    st0, ct0 = math.sin(th0), math.cos(th0)
    if g.dim == 3:
        n_s, n_phi = _counts_2d(target_count, R, 2 * math.pi * R * st0 / 2)
        ds, dphi = R / n_s, 2 * math.pi / n_phi
        for i in range(n_s):
            s = (i + 0.5) * ds
            for j in range(n_phi):
                phi = (j + 0.5) * dphi
                c, sn = math.cos(phi), math.sin(phi)
                pt = [0.0] * 3
                pt[ra[0]], pt[ra[1]], pt[ax] = s * st0 * c, s * st0 * sn, s * ct0
                nm = [0.0] * 3
                nm[ra[0]], nm[ra[1]], nm[ax] = flip * ct0 * c, flip * ct0 * sn, -flip * st0
                out.append(SurfaceSample(tuple(pt), tuple(nm), s * st0 * ds * dphi))
    else:
        n_s = max(8, target_count // 2)
        ds = R / n_s
        for side in (-1.0, 1.0):
            for i in range(n_s):
                s = (i + 0.5) * ds
                pt = [0.0] * 2
                pt[ra[0]], pt[ax] = side * s * st0, s * ct0
                nm = [0.0] * 2
                nm[ra[0]], nm[ax] = flip * side * ct0, -flip * st0
                out.append(SurfaceSample(tuple(pt), tuple(nm), ds))
    return out


def check_interface_sign_condition(g: Geometry, region_radius: float = 2.0,
                                   target_count: int = 10000, samples=None):
    """Interface sign condition: min over samples of (mu2 - mu1)(x . n1).

    Passes when the minimum is >= -1e-10. Returns (ok, min_product,
    worst_point) so callers can report where the condition is tightest.
    """
    if samples is None:
        samples = sample_surface(g, region_radius, target_count)
    if not samples:
        raise ValueError("no interface samples inside the region")
    jump = g.media.mu2 - g.media.mu1
    worst = math.inf
    worst_point = samples[0].point
    for s in samples:
        dot = sum(p * nc for p, nc in zip(s.point, s.normal1))
        prod = jump * dot
        if prod < worst:
            worst = prod
            worst_point = s.point
    return worst >= -1e-10, worst, worst_point
