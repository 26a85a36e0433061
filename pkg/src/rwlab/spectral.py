"""Spectral parameters and the branch square root for the two-media wave operator.

The resolvent is applied at z = lambda + i*eta with lambda >= 0. All wave
numbers derive from the branch square root k(x, z) = sqrt(z * mu(x)) taken
with nonnegative imaginary part; its real and imaginary coefficients are
computed in closed form so that no generic complex sqrt (with its own branch
cut convention) ever enters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

PLUS = "plus"
MINUS = "minus"


@dataclass(frozen=True)
class SpectralParam:
    """Point z = lam + i*eta of the closed upper or lower half-plane.

    half_plane disambiguates the boundary case eta == 0, where the two
    one-sided limits of the branch coefficients differ.
    """

    lam: float
    eta: float
    half_plane: str = ""

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam < 0 is outside the supported spectral range")
        if self.lam == 0 and self.eta == 0:
            raise ValueError("z = 0 is excluded")
        side = self.half_plane
        if side == "":
            side = MINUS if self.eta < 0 else PLUS
            object.__setattr__(self, "half_plane", side)
        if side not in (PLUS, MINUS):
            raise ValueError(f"half_plane must be '{PLUS}' or '{MINUS}'")
        if self.eta > 0 and side != PLUS:
            raise ValueError("eta > 0 lies in the upper half-plane")
        if self.eta < 0 and side != MINUS:
            raise ValueError("eta < 0 lies in the lower half-plane")

    @property
    def z(self) -> complex:
        return complex(self.lam, self.eta)

    @classmethod
    def from_z(cls, z: complex, half_plane: str = "") -> "SpectralParam":
        return cls(z.real, z.imag, half_plane)


@dataclass(frozen=True)
class BranchCoefficients:
    """Real decomposition sqrt(z) = c_a + i*c_b with c_b >= 0.

    e_z = sqrt(2(|z| + lam)) is the modulus-type factor that recurs in the
    resolvent bounds; it satisfies e_z**2 = 2(|z| + lam) and
    c_a**2 + c_b**2 = |z|.
    """

    c_a: float
    c_b: float
    e_z: float


@dataclass(frozen=True)
class DimensionConstants:
    """Constants attached to the space dimension and the weight exponent."""

    c_N: float
    c_delta: float


def branch_coefficients(p: SpectralParam) -> BranchCoefficients:
    """Closed-form coefficients of the branch square root of z.

    For eta != 0:
        c_a = sign(eta) * sqrt((|z| + lam) / 2)
        c_b = |eta| / sqrt(2 (|z| + lam))
    For eta == 0, lam > 0 the one-sided limits are c_a = +-sqrt(lam), c_b = 0,
    the sign chosen by the half-plane tag.
    """
    lam, eta = p.lam, p.eta
    if eta == 0.0:
        if lam <= 0:
            raise ValueError("z = 0 has no branch coefficients")
        root = math.sqrt(lam)
        c_a = root if p.half_plane == PLUS else -root
        return BranchCoefficients(c_a, 0.0, math.sqrt(2.0 * (lam + lam)))
    mod = math.hypot(lam, eta)
    s = mod + lam
    c_a = math.copysign(math.sqrt(0.5 * s), eta)
    c_b = abs(eta) / math.sqrt(2.0 * s)
    return BranchCoefficients(c_a, c_b, math.sqrt(2.0 * s))


def k_at(p: SpectralParam, mu: float) -> complex:
    """Wave number k = sqrt(mu) * (c_a + i c_b); satisfies k*k = z*mu, Im k >= 0."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    bc = branch_coefficients(p)
    root = math.sqrt(mu)
    return complex(root * bc.c_a, root * bc.c_b)


def dimension_constants(dim: int, delta: float) -> DimensionConstants:
    """c_N = (N-1)(N-3)/4 and c_delta = (2 delta - 1) / 2**(2 delta - 1).

    The weight exponent is restricted to 1/2 < delta <= 1.
    """
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    if not 0.5 < delta <= 1.0:
        raise ValueError("delta must lie in (1/2, 1]")
    c_n = (dim - 1) * (dim - 3) / 4.0
    c_delta = (2.0 * delta - 1.0) / 2.0 ** (2.0 * delta - 1.0)
    return DimensionConstants(c_n, c_delta)
