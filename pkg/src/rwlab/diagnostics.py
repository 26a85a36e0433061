"""Radiation functionals, the weighted integral identity, and estimate ratios.

The radiation operator acting on a field u is the vector with components

    D_j u = d_j u + ((N - 1) / (2 r)) xt_j u - i k xt_j u,       xt = x / |x|,

whose radial part D_r u = sum_j D_j u xt_j annihilates outgoing waves. The
wave number k is selectable: the branch value at complex z, or the one-sided
real-axis limits +sqrt(lam mu) / -sqrt(lam mu). Nodes with |x| <= h are
excluded from every 1/r and 1/r^2 expression and masked to zero.

identity_residual evaluates both sides of the exact divergence identity that
links the weighted radiation energy, the interface jump terms, and the sphere
fluxes, and reports the relative defect; on conforming discrete data the
defect shrinks at the differencing rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import (Field, Grid, WeightProfile, annulus_integral, eval_weight,
                    gradient, interpolate, node_radii, quad_weights,
                    sphere_integral, sphere_points, starred_norm, unit_radial,
                    weighted_norm)
from .geometry import Geometry, mu_node_values, sample_surface
from .spectral import SpectralParam, branch_coefficients, dimension_constants

ALPHA_INV_SQRT_MU = "inv_sqrt_mu"
ALPHA_ONE = "one"

PROBE_PLAIN = "plain"
PROBE_PLUS = "plus"
PROBE_MINUS = "minus"
PROBE_SOMMERFELD_PLUS = "sommerfeld_plus"
PROBE_SOMMERFELD_MINUS = "sommerfeld_minus"


@dataclass(frozen=True)
class SignedK:
    """Wave number from the branch square root at complex z."""

    param: SpectralParam


@dataclass(frozen=True)
class PlusLimit:
    """Real-axis limit from above: k = +sqrt(lam mu)."""

    lam: float


@dataclass(frozen=True)
class MinusLimit:
    """Real-axis limit from below: k = -sqrt(lam mu)."""

    lam: float


def variant_k_values(variant, geom: Geometry, grid: Grid) -> np.ndarray:
    mu = mu_node_values(geom, grid)
    if isinstance(variant, SignedK):
        bc = branch_coefficients(variant.param)
        return np.sqrt(mu) * complex(bc.c_a, bc.c_b)
    if isinstance(variant, PlusLimit):
        return np.sqrt(variant.lam * mu).astype(np.complex128)
    if isinstance(variant, MinusLimit):
        return (-np.sqrt(variant.lam * mu)).astype(np.complex128)
    raise TypeError(f"unknown radiation variant {variant!r}")


@dataclass(frozen=True)
class RadiationField:
    components: "list[Field]"
    radial: Field
    mask: np.ndarray
    variant: object

    def magnitude(self) -> Field:
        total = np.zeros(self.radial.grid.shape)
        for c in self.components:
            total = total + c.values.real**2 + c.values.imag**2
        return Field(self.radial.grid, np.sqrt(total))


def _origin_mask(grid: Grid) -> np.ndarray:
    return np.asarray(node_radii(grid)) > grid.h


def radiation_term(u: Field, geom: Geometry, variant,
                   grads: "list[Field] | None" = None) -> RadiationField:
    """Radiation vector and its radial part on the grid.

    grads overrides the central-difference gradient with externally supplied
    (for instance closed-form) derivative fields.
    """
    g = u.grid
    if grads is None:
        grads = gradient(u)
    mask = _origin_mask(g)
    r = node_radii(g)
    safe_r = np.where(mask, r, 1.0)
    xt = unit_radial(g)
    k = variant_k_values(variant, geom, g)
    curvature = (g.dim - 1) / (2.0 * safe_r)
    comps = []
    radial = np.zeros(g.shape, dtype=np.complex128)
    for ax in range(g.dim):
        c = grads[ax].values + (curvature - 1j * k) * xt[ax] * u.values
        c = np.where(mask, c, 0.0)
        comps.append(Field(g, c))
        radial = radial + c * xt[ax]
    return RadiationField(comps, Field(g, radial), mask, variant)


def mean_radiation_residual(u: Field, lam: float, geom: Geometry, R: float,
                            sign: str = "plus",
                            grads: "list[Field] | None" = None) -> float:
    """Ball average (1/R) int_{|x|<R} |grad u -+ i sqrt(lam mu) xt u|^2 dx.

    Tends to zero in R for fields radiating with the matching sign and grows
    like the volume term for the opposite sign.
    """
    if sign not in (PROBE_PLUS, PROBE_MINUS):
        raise ValueError("sign must be 'plus' or 'minus'")
    g = u.grid
    if grads is None:
        grads = gradient(u)
    mask = _origin_mask(g)
    mu = mu_node_values(geom, g)
    k = np.sqrt(lam * mu)
    s = 1.0 if sign == PROBE_PLUS else -1.0
    xt = unit_radial(g)
    total = np.zeros(g.shape)
    for ax in range(g.dim):
        m = grads[ax].values - s * 1j * k * xt[ax] * u.values
        total = total + np.where(mask, m.real**2 + m.imag**2, 0.0)
    val = annulus_integral(Field(g, total), 0.0, R)
    return float(val.real) / R


def surface_decay_probe(u: Field, geom: Geometry, lam: float, radii,
                        alpha: float = 0.0, mode: str = PROBE_PLUS,
                        grads: "list[Field] | None" = None,
                        n_theta: int = 64, n_phi: int = 128,
                        n_angle: int = 512):
    """Sphere integrals R^alpha int_{|x|=R} (probe integrand) dS over radii.

    Modes: 'plain' uses |d_r u|^2 + |u|^2; 'plus'/'minus' use the squared
    radial radiation term at the matching real-axis limit; the sommerfeld
    modes use |d_r u -+ i k u|^2 without the curvature correction.
    """
    g = u.grid
    if grads is None:
        grads = gradient(u)
    mask = _origin_mask(g)
    xt = unit_radial(g)
    du_r = np.zeros(g.shape, dtype=np.complex128)
    for ax in range(g.dim):
        du_r = du_r + grads[ax].values * xt[ax]
    du_r = np.where(mask, du_r, 0.0)
    if mode == PROBE_PLAIN:
        integrand = du_r.real**2 + du_r.imag**2 + np.where(
            mask, u.values.real**2 + u.values.imag**2, 0.0)
    elif mode in (PROBE_PLUS, PROBE_MINUS):
        variant = PlusLimit(lam) if mode == PROBE_PLUS else MinusLimit(lam)
        rad = radiation_term(u, geom, variant, grads)
        integrand = rad.radial.values.real**2 + rad.radial.values.imag**2
    elif mode in (PROBE_SOMMERFELD_PLUS, PROBE_SOMMERFELD_MINUS):
        mu = mu_node_values(geom, g)
        k = np.sqrt(lam * mu)
        s = 1.0 if mode == PROBE_SOMMERFELD_PLUS else -1.0
        m = du_r - s * 1j * k * np.where(mask, u.values, 0.0)
        integrand = m.real**2 + m.imag**2
    else:
        raise ValueError(f"unknown probe mode {mode!r}")
    fld = Field(g, integrand)
    out = []
    for R in radii:
        val = sphere_integral(fld, R, n_theta, n_phi, n_angle).real
        out.append((float(R), float(R**alpha * val)))
    return out


def flux_conservation(u: Field, radii, grads: "list[Field] | None" = None,
                      n_theta: int = 64, n_phi: int = 128,
                      n_angle: int = 512):
    """Im int_{|x|=R} d_r u conj(u) dS for each radius.

    Vanishes identically for solutions of the homogeneous real-parameter
    problem; for an outgoing point source it is a positive constant in R.
    """
    g = u.grid
    if grads is None:
        grads = gradient(u)
    mask = _origin_mask(g)
    xt = unit_radial(g)
    t = np.zeros(g.shape, dtype=np.complex128)
    for ax in range(g.dim):
        t = t + grads[ax].values * xt[ax]
    t = np.where(mask, t * np.conj(u.values), 0.0)
    fld = Field(g, t)
    return [(float(R), float(sphere_integral(fld, R, n_theta, n_phi,
                                             n_angle).imag))
            for R in radii]


@dataclass(frozen=True)
class IdentityReport:
    lhs_terms: tuple
    rhs_terms: tuple
    residual: float

    @property
    def lhs_sum(self) -> float:
        return float(sum(self.lhs_terms))

    @property
    def rhs_sum(self) -> float:
        return float(sum(self.rhs_terms))


def identity_residual(u: Field, f: Field, p: SpectralParam, geom: Geometry,
                      profile: WeightProfile, r_in: float, r_out: float,
                      alpha_kind: str = ALPHA_INV_SQRT_MU,
                      grads: "list[Field] | None" = None,
                      n_theta: int = 64, n_phi: int = 128, n_angle: int = 512,
                      surface_count: int = 20000) -> IdentityReport:
    """Both sides of the weighted radiation identity on the shell r_in..r_out.

    The left side carries the weighted radiation energy, the interface
    term, the transverse excess, the centrifugal term, and a correction
    that is nonzero only when the weight itself jumps across the surface
    (a discontinuous weight leaves one-sided flux behind that the four
    classical terms do not see). The right side carries the source
    coupling, the interface jump, and the two sphere fluxes. The residual
    is |lhs - rhs| / (|lhs| + |rhs|).
    """
    g = u.grid
    if g.dim not in (2, 3):
        raise ValueError("unsupported dimension")
    if not g.h < r_in < r_out < g.L:
        raise ValueError("need h < r_in < r_out < L")
    if alpha_kind not in (ALPHA_INV_SQRT_MU, ALPHA_ONE):
        raise ValueError("alpha_kind must be 'inv_sqrt_mu' or 'one'")

    bc = branch_coefficients(p)
    c_branch = complex(bc.c_a, bc.c_b)
    mod_z = abs(p.z)
    c_n = dimension_constants(g.dim, 1.0).c_N

    mu = np.asarray(mu_node_values(geom, g))
    r = np.asarray(node_radii(g))
    mask = r > g.h
    safe_r = np.where(mask, r, 1.0)
    xt = unit_radial(g)

    b_node = np.sqrt(mu) * bc.c_b
    k_node = np.sqrt(mu) * c_branch
    alpha_node = 1.0 / np.sqrt(mu) if alpha_kind == ALPHA_INV_SQRT_MU else np.ones_like(mu)
    xi, dxi = eval_weight(profile, r)
    phi = alpha_node * xi
    dphi = alpha_node * dxi

    if grads is None:
        grads = gradient(u)
    curvature = (g.dim - 1) / (2.0 * safe_r)
    d_sq = np.zeros(g.shape)
    d_r = np.zeros(g.shape, dtype=np.complex128)
    for ax in range(g.dim):
        comp = grads[ax].values + (curvature - 1j * k_node) * xt[ax] * u.values
        comp = np.where(mask, comp, 0.0)
        d_sq = d_sq + comp.real**2 + comp.imag**2
        d_r = d_r + comp * xt[ax]
        del comp
    dr_sq = d_r.real**2 + d_r.imag**2
    u_sq = u.values.real**2 + u.values.imag**2

    def shell(arr) -> float:
        return float(annulus_integral(Field(g, arr), r_in, r_out).real)

    lhs1 = shell((b_node * phi + 0.5 * dphi) * d_sq)
    lhs3 = shell((phi / safe_r - dphi) * (d_sq - dr_sq) * mask)
    lhs4 = c_n * shell(
        (phi / safe_r - 0.5 * dphi + b_node * phi) * u_sq / safe_r**2 * mask)
    rhs1 = shell((phi * mu * (f.values * np.conj(d_r)).real))

    sphere_integrand = phi * (2.0 * dr_sq - d_sq - c_n * u_sq / safe_r**2 * mask)
    sphere_field = Field(g, sphere_integrand)
    rhs3 = 0.5 * float(sphere_integral(sphere_field, r_out, n_theta, n_phi,
                                       n_angle).real)
    rhs4 = -0.5 * float(sphere_integral(sphere_field, r_in, n_theta, n_phi,
                                        n_angle).real)
    del sphere_integrand, sphere_field, d_sq, dr_sq, u_sq

    # interface terms: contributions from the two one-sided traces combine
    # into single integrals over S with per-side coefficients
    lhs2 = 0.0
    lhs5 = 0.0
    rhs2 = 0.0
    samples = sample_surface(geom, r_out, surface_count)
    samples = [s for s in samples
               if r_in < math.sqrt(sum(c * c for c in s.point)) < r_out]
    if samples:
        pts = np.array([s.point for s in samples])
        normals = np.array([s.normal1 for s in samples])
        wts = np.array([s.area_weight for s in samples])
        radii_s = np.sqrt((pts * pts).sum(axis=1))
        xi_s, _ = eval_weight(profile, radii_s)
        u_s = interpolate(u, pts)
        grad_s = [interpolate(grads[ax], pts) for ax in range(g.dim)]
        dn = np.zeros(len(samples), dtype=np.complex128)
        ur_s = np.zeros(len(samples), dtype=np.complex128)
        g_sq = np.zeros(len(samples))
        for ax in range(g.dim):
            dn = dn + grad_s[ax] * normals[:, ax]
            ur_s = ur_s + grad_s[ax] * pts[:, ax] / radii_s
            g_sq = g_sq + grad_s[ax].real**2 + grad_s[ax].imag**2
        u_sq_s = u_s.real**2 + u_s.imag**2
        mu1, mu2 = geom.media.mu1, geom.media.mu2
        a1 = 1.0 / math.sqrt(mu1) if alpha_kind == ALPHA_INV_SQRT_MU else 1.0
        a2 = 1.0 / math.sqrt(mu2) if alpha_kind == ALPHA_INV_SQRT_MU else 1.0
        jump_l = (a1 * math.sqrt(mu1) - a2 * math.sqrt(mu2)) * np.conj(c_branch)
        lhs2 = float(np.sum(wts * xi_s * (jump_l * dn * np.conj(u_s)).imag))
        xdotn = (pts * normals).sum(axis=1) / radii_s
        coeff1 = a1 * ((g.dim - 1) * math.sqrt(mu1) * bc.c_b / radii_s + mu1 * mod_z)
        coeff2 = a2 * ((g.dim - 1) * math.sqrt(mu2) * bc.c_b / radii_s + mu2 * mod_z)
        rhs2 = 0.5 * float(np.sum(
            wts * xi_s * xdotn * (coeff1 - coeff2) * u_sq_s))
        # weight-jump correction: one-sided flux that survives only when
        # the weight factor differs between the two media
        curv_s = (g.dim - 1) / (2.0 * radii_s)
        jump_phi = (a1 - a2) * xi_s
        lhs5 = float(np.sum(wts * jump_phi * (
            -(dn * np.conj(ur_s)).real
            - curv_s * (dn * np.conj(u_s)).real
            + 0.5 * xdotn * g_sq
            - 0.5 * xdotn * curv_s**2 * u_sq_s
            + 0.5 * c_n * xdotn * u_sq_s / radii_s**2)))

    lhs_terms = (lhs1, lhs2, lhs3, lhs4, lhs5)
    rhs_terms = (rhs1, rhs2, rhs3, rhs4)
    lhs_sum = sum(lhs_terms)
    rhs_sum = sum(rhs_terms)
    residual = abs(lhs_sum - rhs_sum) / (abs(lhs_sum) + abs(rhs_sum) + 1e-300)
    return IdentityReport(lhs_terms, rhs_terms, residual)


def radiation_source_ratio(u: Field, f: Field, delta: float, geom: Geometry,
                           variant, grads: "list[Field] | None" = None) -> float:
    """Weighted radiation energy of u against the weighted source size.

    Dimension 3: |D u| in the (delta - 1)-weighted norm over ||f|| in the
    delta-weighted norm. Dimension 2 uses the starred norm for the numerator
    and adds ||u|| at weight -delta to the denominator.
    """
    if not 0.5 < delta <= 1.0:
        raise ValueError("delta must lie in (1/2, 1]")
    rad = radiation_term(u, geom, variant, grads)
    mag = rad.magnitude()
    if u.grid.dim >= 3:
        denom = weighted_norm(f, delta)
        if denom == 0.0:
            raise ValueError("source norm vanishes")
        return weighted_norm(mag, delta - 1.0) / denom
    denom = weighted_norm(f, delta) + weighted_norm(u, -delta)
    if denom == 0.0:
        raise ValueError("source and solution norms vanish")
    return starred_norm(mag, delta - 1.0) / denom
