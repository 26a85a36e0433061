"""Closed-form reference fields and the special functions they need.

These are the independent answer keys the numerical experiments are judged
against: outgoing point sources in two and three dimensions, plane waves,
Gaussian bumps with analytic Laplacians, and the one-dimensional two-media
transmission solution. Cylinder functions are evaluated in-repo; the test
suite cross-checks them against an independent second implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import Field, Grid, mesh
from .geometry import Geometry, mu_node_values
from .spectral import PLUS, SpectralParam, k_at

_EULER_GAMMA = 0.5772156649015328606065
_SERIES_CUT = 13.0
_CHUNK = 1 << 16


# ---------------------------------------------------------------------------
# Cylinder functions of orders 0 and 1, real nonnegative argument.
#
# J0, J1 use the midpoint rule on the cosine integral representation; the
# rule's error is an alias series of Bessel terms of order ~2m, so taking
# m a bit past 0.7*x makes it vanish to machine precision.  Y0, Y1 use the
# ascending series up to x = 13 and the large-argument cosine/sine expansion
# beyond, where its optimally truncated tail is ~exp(-2x).
# ---------------------------------------------------------------------------


def _j_by_integral(order: int, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    for lo in range(0, x.size, _CHUNK):
        part = x[lo:lo + _CHUNK]
        m = max(40, int(0.7 * float(part.max(initial=0.0))) + 30)
        theta = (np.arange(m) + 0.5) * (math.pi / m)
        phase = order * theta[None, :] - np.outer(part, np.sin(theta))
        out[lo:lo + _CHUNK] = np.cos(phase).mean(axis=1)
    return out


def _y_by_series(order: int, x: np.ndarray) -> np.ndarray:
    t = 0.25 * x * x
    lead = np.log(0.5 * x) + _EULER_GAMMA
    if order == 0:
        j = _j_by_integral(0, x)
        term = np.ones_like(x)
        acc = np.zeros_like(x)
        hk = 0.0
        for k in range(1, 60):
            term = term * (-t) / (k * k)
            hk += 1.0 / k
            acc = acc + hk * term
        return (2.0 / math.pi) * (lead * j - acc)
    j = _j_by_integral(1, x)
    term = np.ones_like(x)
    acc = np.zeros_like(x)
    hk = 0.0
    for k in range(0, 60):
        if k > 0:
            term = term * (-t) / (k * (k + 1))
            hk += 1.0 / k
        acc = acc + (hk + hk + 1.0 / (k + 1)) * term
    with np.errstate(divide="ignore"):
        inv = np.where(x > 0, 1.0 / np.where(x > 0, x, 1.0), np.inf)
    return (2.0 / math.pi) * (lead * j - inv - 0.25 * x * acc)


def _pq_expansion(order: int, x: np.ndarray):
    mu4 = 4.0 * order * order
    term = np.ones_like(x)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    for j in range(1, 25):
        term = term * (mu4 - (2 * j - 1) ** 2) / (8.0 * j * x)
        half, odd = divmod(j, 2)
        if odd:
            q = q + ((-1.0) ** half) * term
        else:
            p = p + ((-1.0) ** half) * term
    return p, q


def _y_by_expansion(order: int, x: np.ndarray) -> np.ndarray:
    p, q = _pq_expansion(order, x)
    omega = x - (0.5 * order + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.sin(omega) + q * np.cos(omega))


def _dispatch_real(order: int, x, fn_small, fn_large):
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0):
        raise ValueError("argument must be nonnegative")
    out = np.empty_like(arr)
    small = arr <= _SERIES_CUT
    if small.any():
        out[small] = fn_small(order, arr[small])
    if (~small).any():
        out[~small] = fn_large(order, arr[~small])
    return float(out[0]) if scalar else out


def bessel_j0(x):
    return _dispatch_real(0, x, _j_by_integral, _j_by_integral)


def bessel_j1(x):
    return _dispatch_real(1, x, _j_by_integral, _j_by_integral)


def bessel_y0(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("Y0 needs a positive argument")
    return _dispatch_real(0, x, _y_by_series, _y_by_expansion)


def bessel_y1(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("Y1 needs a positive argument")
    return _dispatch_real(1, x, _y_by_series, _y_by_expansion)


def hankel1_0(x):
    return bessel_j0(x) + 1j * bessel_y0(x)


def hankel1_1(x):
    return bessel_j1(x) + 1j * bessel_y1(x)


# ---------------------------------------------------------------------------
# Analytic fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SphericalWave3D:
    """Outgoing point source in three dimensions: exp(ik s)/(4 pi s)."""

    k: complex
    center: tuple = (0.0, 0.0, 0.0)

    dim = 3

    def _offsets(self, pts):
        d = pts - np.asarray(self.center)[None, :]
        s = np.sqrt((d * d).sum(axis=1))
        return d, s

    def values(self, pts):
        _, s = self._offsets(np.asarray(pts, float))
        safe = np.where(s > 0, s, 1.0)
        v = np.exp(1j * self.k * safe) / (4.0 * math.pi * safe)
        return np.where(s > 0, v, 0.0)

    def gradient(self, pts):
        d, s = self._offsets(np.asarray(pts, float))
        safe = np.where(s > 0, s, 1.0)
        v = np.exp(1j * self.k * safe) / (4.0 * math.pi * safe)
        radial = (1j * self.k - 1.0 / safe) * v / safe
        return np.where(s[:, None] > 0, radial[:, None] * d, 0.0)

    def laplacian(self, pts):
        return -self.k**2 * self.values(pts)


@dataclass(frozen=True)
class HankelWave2D:
    """Outgoing point source in two dimensions, first-kind cylinder wave."""

    k: float
    center: tuple = (0.0, 0.0)

    dim = 2

    def _offsets(self, pts):
        d = pts - np.asarray(self.center)[None, :]
        s = np.sqrt((d * d).sum(axis=1))
        return d, s

    def values(self, pts):
        _, s = self._offsets(np.asarray(pts, float))
        safe = np.where(s > 0, s, 1.0)
        v = hankel1_0(self.k * safe)
        return np.where(s > 0, v, 0.0)

    def gradient(self, pts):
        d, s = self._offsets(np.asarray(pts, float))
        safe = np.where(s > 0, s, 1.0)
        radial = -self.k * hankel1_1(self.k * safe) / safe
        return np.where(s[:, None] > 0, radial[:, None] * d, 0.0)

    def laplacian(self, pts):
        return -self.k**2 * self.values(pts)


@dataclass(frozen=True)
class PlaneWave:
    """exp(i k d.x) along a unit direction d."""

    k: complex
    direction: tuple

    def __post_init__(self):
        d = np.asarray(self.direction, float)
        nrm = float(np.sqrt((d * d).sum()))
        if abs(nrm - 1.0) > 1e-12:
            object.__setattr__(self, "direction", tuple(d / nrm))

    def values(self, pts):
        pts = np.asarray(pts, float)
        return np.exp(1j * self.k * pts @ np.asarray(self.direction))

    def gradient(self, pts):
        v = self.values(pts)
        return 1j * self.k * v[:, None] * np.asarray(self.direction)[None, :]

    def laplacian(self, pts):
        return -self.k**2 * self.values(pts)


@dataclass(frozen=True)
class GaussianBump:
    """exp(-|x|^2 / w^2); smooth, rapidly decaying, analytic Laplacian."""

    width: float = 1.0

    def values(self, pts):
        pts = np.asarray(pts, float)
        r2 = (pts * pts).sum(axis=1)
        return np.exp(-r2 / self.width**2).astype(np.complex128)

    def gradient(self, pts):
        pts = np.asarray(pts, float)
        v = self.values(pts)
        return (-2.0 / self.width**2) * v[:, None] * pts

    def laplacian(self, pts):
        pts = np.asarray(pts, float)
        r2 = (pts * pts).sum(axis=1)
        dim = pts.shape[1]
        return (4.0 * r2 / self.width**4 - 2.0 * dim / self.width**2) * self.values(pts)


@dataclass(frozen=True)
class TransmissionPlane1D:
    """Two-media normal-incidence transmission profile along one coordinate.

    Unit-amplitude wave incident from the medium-1 side of the plane
    x_axis = 0; the field depends on that coordinate alone. Complex spectral
    parameters are accepted; the wave numbers come from the branch square
    root, so both half-planes are served.
    """

    mu1: float
    mu2: float
    z: complex
    axis: int = 1  # 1-based coordinate index
    half_plane: str = PLUS

    def _wavenumbers(self):
        p = SpectralParam(self.z.real, self.z.imag, self.half_plane)
        return k_at(p, self.mu1), k_at(p, self.mu2)

    def coefficients(self):
        k1, k2 = self._wavenumbers()
        return (k1 - k2) / (k1 + k2), 2.0 * k1 / (k1 + k2)

    def values(self, pts):
        pts = np.asarray(pts, float)
        s = pts[:, self.axis - 1]
        k1, k2 = self._wavenumbers()
        refl, trans = self.coefficients()
        left = np.exp(1j * k1 * s) + refl * np.exp(-1j * k1 * s)
        right = trans * np.exp(1j * k2 * s)
        return np.where(s < 0, left, right)

    def gradient(self, pts):
        pts = np.asarray(pts, float)
        s = pts[:, self.axis - 1]
        k1, k2 = self._wavenumbers()
        refl, trans = self.coefficients()
        left = 1j * k1 * (np.exp(1j * k1 * s) - refl * np.exp(-1j * k1 * s))
        right = 1j * k2 * trans * np.exp(1j * k2 * s)
        out = np.zeros(pts.shape, dtype=np.complex128)
        out[:, self.axis - 1] = np.where(s < 0, left, right)
        return out

    def laplacian(self, pts):
        pts = np.asarray(pts, float)
        s = pts[:, self.axis - 1]
        k1, k2 = self._wavenumbers()
        ksq = np.where(s < 0, k1 * k1, k2 * k2)
        return -ksq * self.values(pts)


def eval_analytic(kind, points, want_gradient: bool = False):
    """Evaluate a closed-form field (and optionally its gradient) at points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    vals = kind.values(pts)
    if want_gradient:
        return vals, kind.gradient(pts)
    return vals


def _grid_points(grid: Grid) -> np.ndarray:
    xs = np.meshgrid(*([grid.axis_coords()] * grid.dim), indexing="ij")
    return np.stack([x.ravel() for x in xs], axis=1)


def field_from_analytic(kind, grid: Grid) -> Field:
    """Sample a closed-form field on the grid nodes.

    Kinds with a point singularity return 0 exactly at the singular node;
    place sources off the node lattice when the near field matters.
    """
    pts = _grid_points(grid)
    vals = np.empty(grid.n_nodes, dtype=np.complex128)
    for lo in range(0, pts.shape[0], _CHUNK):
        vals[lo:lo + _CHUNK] = kind.values(pts[lo:lo + _CHUNK])
    return Field(grid, vals.reshape(grid.shape))


def gradient_fields_from_analytic(kind, grid: Grid) -> "list[Field]":
    pts = _grid_points(grid)
    grads = np.empty((grid.n_nodes, grid.dim), dtype=np.complex128)
    for lo in range(0, pts.shape[0], _CHUNK):
        grads[lo:lo + _CHUNK] = kind.gradient(pts[lo:lo + _CHUNK])
    return [Field(grid, grads[:, ax].reshape(grid.shape)) for ax in range(grid.dim)]


def transmission_coefficients(mu1: float, mu2: float, lam: float):
    """Reflection and transmission amplitudes at a plane two-media interface.

    Continuity of the field and its normal derivative at the interface gives
    R = (k1 - k2)/(k1 + k2) and T = 2 k1/(k1 + k2) with k_j = sqrt(lam mu_j);
    consequences: 1 + R = T and the flux balance k1 (1 - R^2) = k2 T^2.
    """
    if mu1 <= 0 or mu2 <= 0 or lam <= 0:
        raise ValueError("media coefficients and lam must be positive")
    k1, k2 = math.sqrt(lam * mu1), math.sqrt(lam * mu2)
    return (k1 - k2) / (k1 + k2), 2.0 * k1 / (k1 + k2)


def manufactured_pair(kind, p: SpectralParam, geom: Geometry, grid: Grid):
    """Exact-solution pair (u*, f*) with f* = -lap(u*)/mu - z u*.

    Applying the discrete resolvent at z to f* must reproduce u* up to the
    discretization error, which is the operator convergence oracle.
    """
    u = field_from_analytic(kind, grid)
    pts = _grid_points(grid)
    lap = np.empty(grid.n_nodes, dtype=np.complex128)
    for lo in range(0, pts.shape[0], _CHUNK):
        lap[lo:lo + _CHUNK] = kind.laplacian(pts[lo:lo + _CHUNK])
    mu = mu_node_values(geom, grid).ravel()
    f_vals = -lap / mu - p.z * u.values.ravel()
    return u, Field(grid, f_vals.reshape(grid.shape))
