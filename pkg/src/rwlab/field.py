"""Grids, complex fields, weighted norms, radial quadratures, and weight profiles.

Everything downstream (operator assembly, radiation functionals, experiment
drivers) works on uniform Cartesian grids over the box [-L, L]^N with nodes at
the box corners, N in {2, 3}. Fields are complex node arrays in row-major
(C) order. Volume quadrature is the node rule with weight h^N, halved once per
axis on box faces, so constants integrate exactly over the box.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

RWF1_MAGIC = b"RWF1"

TRUNCATED = "truncated"
POWER_DELTA = "power_delta"
TWOD_ALPHA = "twod_alpha"
TWOD_DELTA = "twod_delta"


@dataclass(frozen=True)
class Grid:
    """Uniform node grid on [-L, L]^dim with n nodes per axis."""

    dim: int
    L: float
    n: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.n < 16:
            raise ValueError("n must be at least 16")
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError("L must be positive and finite")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def n_nodes(self) -> int:
        return self.n**self.dim

    def axis_coords(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n)


@dataclass(frozen=True)
class Field:
    """Complex values on the nodes of a grid, stored in the grid's shape."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v.view(np.float64))):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)


def mesh(grid: Grid) -> "list[np.ndarray]":
    """Broadcastable (sparse) coordinate arrays for the grid nodes."""
    x = grid.axis_coords()
    return list(np.meshgrid(*([x] * grid.dim), indexing="ij", sparse=True))


@lru_cache(maxsize=3)
def node_radii(grid: Grid) -> np.ndarray:
    xs = mesh(grid)
    r2 = np.zeros(grid.shape)
    for x in xs:
        r2 = r2 + x * x
    r = np.sqrt(r2)
    r.setflags(write=False)
    return r


def unit_radial(grid: Grid) -> "list[np.ndarray]":
    """Components of x/|x| with the origin node (if any) mapped to 0."""
    r = node_radii(grid)
    safe = np.where(r > 0, r, 1.0)
    return [np.asarray(x / safe) for x in mesh(grid)]


@lru_cache(maxsize=3)
def quad_weights(grid: Grid) -> np.ndarray:
    w1 = np.full(grid.n, grid.h)
    w1[0] *= 0.5
    w1[-1] *= 0.5
    w = w1
    for _ in range(grid.dim - 1):
        w = np.multiply.outer(w, w1)
    w.setflags(write=False)
    return w


def weighted_norm(u: Field, t: float) -> float:
    """L2 norm against the radial weight (1 + |x|)^(2t)."""
    r = node_radii(u.grid)
    w = quad_weights(u.grid)
    integrand = w * (1.0 + r) ** (2.0 * t) * (u.values.real**2 + u.values.imag**2)
    return float(np.sqrt(integrand.sum()))


def x_norm(u: Field, geom) -> float:
    """Norm of the solution space: L2 against the measure mu(x) dx."""
    from .geometry import mu_node_values

    mu = mu_node_values(geom, u.grid)
    w = quad_weights(u.grid)
    integrand = w * mu * (u.values.real**2 + u.values.imag**2)
    return float(np.sqrt(integrand.sum()))


def _d1(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """First derivative: central interior, second-order one-sided at faces."""
    return np.gradient(values, h, axis=axis, edge_order=2)


def _d2(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Pure second derivative: central interior, second-order one-sided at faces."""
    n = values.shape[axis]
    if n < 5:
        raise ValueError("grid too small for the second-derivative stencil (n < 5)")
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h**2
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def gradient(u: Field) -> "list[Field]":
    h = u.grid.h
    return [Field(u.grid, _d1(u.values, h, ax)) for ax in range(u.grid.dim)]


def sobolev_norm(u: Field, order: int, t: float) -> float:
    """Weighted Sobolev norm of order 1 or 2 against (1 + |x|)^(2t).

    Order 1 sums |u|^2 and all first differences; order 2 adds all pure and
    mixed second differences (each mixed pair counted once).
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if u.grid.n < 5:
        raise ValueError("grid too small for the stencil (n < 5)")
    h = u.grid.h
    r = node_radii(u.grid)
    w = quad_weights(u.grid) * (1.0 + r) ** (2.0 * t)

    def sq(a):
        return a.real**2 + a.imag**2

    total = (w * sq(u.values)).sum()
    firsts = [_d1(u.values, h, ax) for ax in range(u.grid.dim)]
    for d in firsts:
        total += (w * sq(d)).sum()
    if order == 2:
        for ax in range(u.grid.dim):
            total += (w * sq(_d2(u.values, h, ax))).sum()
        for ax1 in range(u.grid.dim):
            for ax2 in range(ax1 + 1, u.grid.dim):
                total += (w * sq(_d1(firsts[ax1], h, ax2))).sum()
    return float(np.sqrt(total))


def starred_norm(u: Field, t: float) -> float:
    """Two-dimensional norm with |x| weight inside the unit disk.

    Integrates |x| |u|^2 over the unit disk and (1 + |x|)^(2t) |u|^2 outside
    it; only defined for dim == 2.
    """
    if u.grid.dim != 2:
        raise ValueError("starred norm is defined for dim == 2 only")
    r = node_radii(u.grid)
    w = quad_weights(u.grid)
    sq = u.values.real**2 + u.values.imag**2
    inner = np.where(r < 1.0, r, 0.0)
    outer = np.where(r >= 1.0, (1.0 + r) ** (2.0 * t), 0.0)
    return float(np.sqrt((w * (inner + outer) * sq).sum()))


def annulus_integral(u: Field, r_in: float, r_out: float) -> complex:
    """Node-rule integral over the spherical shell r_in < |x| < r_out.

    Nodes within half a spacing of either sphere get fractional weight
    (linear ramp over one cell), which keeps the rule second order when
    the integrand does not vanish at the shell boundaries.
    """
    g = u.grid
    if not 0.0 <= r_in < r_out:
        raise ValueError("need 0 <= r_in < r_out")
    if r_out >= g.L * (1.0 - 1e-9):
        raise ValueError("outer radius must stay inside the box")
    r = node_radii(g)
    w = quad_weights(g)
    cover = (np.clip((r_out - r) / g.h + 0.5, 0.0, 1.0)
             * np.clip((r - r_in) / g.h + 0.5, 0.0, 1.0))
    return complex((w * u.values * cover).sum())


def interpolate(u: Field, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of the field at arbitrary points in the box."""
    g = u.grid
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[1] != g.dim:
        raise ValueError("point dimension mismatch")
    if np.any(np.abs(pts) > g.L * (1.0 + 1e-12)):
        raise ValueError("interpolation point outside the grid box")
    s = (pts + g.L) / g.h
    i0 = np.clip(np.floor(s).astype(np.int64), 0, g.n - 2)
    frac = s - i0
    vals = np.zeros(pts.shape[0], dtype=np.complex128)
    for corner in range(2**g.dim):
        idx = []
        wgt = np.ones(pts.shape[0])
        for ax in range(g.dim):
            bit = (corner >> ax) & 1
            idx.append(i0[:, ax] + bit)
            wgt = wgt * (frac[:, ax] if bit else 1.0 - frac[:, ax])
        vals += wgt * u.values[tuple(idx)]
    return vals


def sphere_points(grid_dim: int, R: float, n_theta: int = 64, n_phi: int = 128,
                  n_angle: int = 512):
    """Quadrature nodes and weights on the sphere |x| = R.

    dim 2: midpoint rule in the angle (n_angle nodes, kept even so antipodal
    symmetry is exact). dim 3: Gauss-Legendre in the polar cosine crossed with
    midpoint in longitude; weights sum to the exact sphere measure.
    """
    if grid_dim == 2:
        m = max(512, n_angle + (n_angle % 2))
        ang = (np.arange(m) + 0.5) * (2.0 * np.pi / m)
        pts = R * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        w = np.full(m, R * 2.0 * np.pi / m)
        return pts, w
    nt = max(64, n_theta)
    npn = max(128, n_phi + (n_phi % 2))
    ct, glw = np.polynomial.legendre.leggauss(nt)
    st = np.sqrt(1.0 - ct**2)
    phi = (np.arange(npn) + 0.5) * (2.0 * np.pi / npn)
    cp, sp = np.cos(phi), np.sin(phi)
    x = R * np.outer(st, cp).ravel()
    y = R * np.outer(st, sp).ravel()
    zc = R * np.repeat(ct, npn)
    pts = np.stack([x, y, zc], axis=1)
    w = np.repeat(glw, npn) * (R**2 * 2.0 * np.pi / npn)
    return pts, w


def sphere_integral(u: Field, R: float, n_theta: int = 64, n_phi: int = 128,
                    n_angle: int = 512) -> complex:
    """Integral of the (interpolated) field over the sphere |x| = R."""
    g = u.grid
    if not 0.0 < R < g.L:
        raise ValueError("sphere radius must satisfy 0 < R < L")
    pts, w = sphere_points(g.dim, R, n_theta, n_phi, n_angle)
    return complex(np.sum(w * interpolate(u, pts)))


# ---------------------------------------------------------------------------
# Radial weight profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightProfile:
    """Piecewise radial weight with value and one-sided derivative."""

    kind: str
    r0: float = 0.0
    delta: float = 0.0
    alpha: float = 0.0

    @classmethod
    def truncated(cls, r0: float) -> "WeightProfile":
        if r0 <= 0:
            raise ValueError("truncation radius must be positive")
        return cls(TRUNCATED, r0=r0)

    @classmethod
    def power_delta(cls, delta: float) -> "WeightProfile":
        if not 0.5 < delta <= 1.0:
            raise ValueError("delta must lie in (1/2, 1]")
        return cls(POWER_DELTA, delta=delta)

    @classmethod
    def twod_alpha(cls, r0: float, alpha: float) -> "WeightProfile":
        if r0 <= 0:
            raise ValueError("junction radius must be positive")
        if not 0.0 < alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        return cls(TWOD_ALPHA, r0=r0, alpha=alpha)

    @classmethod
    def twod_delta(cls, delta: float) -> "WeightProfile":
        if not 0.5 < delta <= 1.0:
            raise ValueError("delta must lie in (1/2, 1]")
        return cls(TWOD_DELTA, delta=delta)


def _hermite_join(r, a, b, v0, s0, v1, s1):
    """Cubic Hermite value and derivative on [a, b] from endpoint data."""
    width = b - a
    tau = (r - a) / width
    h00 = 2 * tau**3 - 3 * tau**2 + 1
    h10 = tau**3 - 2 * tau**2 + tau
    h01 = -2 * tau**3 + 3 * tau**2
    h11 = tau**3 - tau**2
    val = v0 * h00 + s0 * width * h10 + v1 * h01 + s1 * width * h11
    d00 = (6 * tau**2 - 6 * tau) / width
    d10 = 3 * tau**2 - 4 * tau + 1
    d01 = (-6 * tau**2 + 6 * tau) / width
    d11 = 3 * tau**2 - 2 * tau
    der = v0 * d00 + s0 * d10 + v1 * d01 + s1 * d11
    return val, der


def eval_weight(profile: WeightProfile, r):
    """Value and derivative of the radial weight at r (scalar or array)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    k = profile.kind
    if k == TRUNCATED:
        r0 = profile.r0
        xi = np.minimum(r, r0)
        dxi = np.where(r <= r0, 1.0, 0.0)
    elif k == POWER_DELTA:
        d = profile.delta
        p = 2.0 * d - 1.0
        scale = 2.0**-p
        xi = np.where(r <= 1.0, r, scale * (1.0 + r) ** p)
        dxi = np.where(r <= 1.0, 1.0, scale * p * (1.0 + r) ** (p - 1.0))
    elif k == TWOD_ALPHA:
        r0, a = profile.r0, profile.alpha
        # the outer branch is discarded below r0 but still evaluated there,
        # and r**(a-1) blows up at r = 0 for a < 1
        ro = np.where(r > 0, r, 1.0)
        xi = np.where(r <= r0, r**2, r0 ** (2.0 - a) * ro**a)
        dxi = np.where(r <= r0, 2.0 * r, a * r0 ** (2.0 - a) * ro ** (a - 1.0))
    elif k == TWOD_DELTA:
        d = profile.delta
        p = 2.0 * d - 1.0
        scale = 2.0 ** (-2.0 * d)
        v0, s0 = 0.125, 0.5
        v1, s1 = 0.5, p / 4.0
        jv, jd = _hermite_join(np.clip(r, 0.5, 1.0), 0.5, 1.0, v0, s0, v1, s1)
        xi = np.where(r <= 0.5, 0.5 * r**2,
                      np.where(r >= 1.0, scale * (1.0 + r) ** p, jv))
        dxi = np.where(r <= 0.5, r,
                       np.where(r >= 1.0, scale * p * (1.0 + r) ** (p - 1.0), jd))
    else:
        raise ValueError(f"unknown weight profile kind {k!r}")
    if xi.ndim == 0:
        return float(xi), float(dxi)
    return xi, dxi


# ---------------------------------------------------------------------------
# Field IO
# ---------------------------------------------------------------------------


def write_rwf1(path, u: Field) -> None:
    """Binary field dump: magic, u32 dim, u32 n, f64 L, then (re, im) f64 pairs."""
    g = u.grid
    with open(path, "wb") as fh:
        fh.write(RWF1_MAGIC)
        fh.write(struct.pack("<IId", g.dim, g.n, g.L))
        fh.write(np.ascontiguousarray(u.values, dtype="<c16").tobytes())


def read_rwf1(path) -> Field:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != RWF1_MAGIC:
            raise ValueError("not an RWF1 field file")
        dim, n = struct.unpack("<II", fh.read(8))
        (L,) = struct.unpack("<d", fh.read(8))
        count = n**dim
        raw = fh.read(16 * count)
        if len(raw) != 16 * count:
            raise ValueError("truncated RWF1 payload")
    g = Grid(dim, L, n)
    vals = np.frombuffer(raw, dtype="<c16").astype(np.complex128).reshape(g.shape)
    return Field(g, vals)


def export_field_csv(path, u: Field) -> None:
    """Flat table of node indices, coordinates, and complex values."""
    g = u.grid
    x = g.axis_coords()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [f"i{ax}" for ax in range(g.dim)]
            + [f"x{ax}" for ax in range(g.dim)]
            + ["re", "im"]
        )
        flat = u.values.ravel()
        for pos, idx in enumerate(np.ndindex(g.shape)):
            v = flat[pos]
            writer.writerow(
                [*idx, *(format(x[i], ".17g") for i in idx),
                 format(v.real, ".17g"), format(v.imag, ".17g")]
            )
