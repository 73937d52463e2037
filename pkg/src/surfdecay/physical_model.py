"""Atom, dielectric and surface-potential descriptions.

Unit conventions used across the package: lengths in nm, every energy is
stored as an ordinary frequency (energy / h) in Hz, and van der Waals
coefficients are in Hz nm^3.  One kHz um^3 equals 1e12 Hz nm^3.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, GeometryViolation, NoDistinctExtrema

KHZ_UM3 = 1.0e12  # Hz nm^3 per kHz um^3
THZ = 1.0e12

# xi^4 exp(-xi) peaks at xi = 4 with value 256/e^4
_XI_PEAK_VALUE = 256.0 / math.e**4
# upper bracket for the outer root; exp(-60) is far below any C3/A ratio here
XI_UPPER = 60.0


@dataclass(frozen=True)
class PhysicalConstants:
    planck_h: float = 6.62607015e-34  # J s
    c: float = 299792458.0  # m/s
    atomic_mass_unit: float = 1.66053906660e-27  # kg

    @property
    def hbar(self) -> float:
        return self.planck_h / (2.0 * math.pi)


CONSTANTS = PhysicalConstants()


class InternalState(str, enum.Enum):
    EXCITED = "excited"
    GROUND = "ground"


@dataclass(frozen=True)
class AtomSpecies:
    """Two-level atom: mass in kg and free-space transition wavelength in nm."""

    mass: float
    lambda0: float

    def __post_init__(self):
        if not (self.mass > 0 and self.lambda0 > 0):
            raise DomainError("atom mass and wavelength must be positive")

    @classmethod
    def from_amu(cls, mass_amu: float, lambda0_nm: float) -> "AtomSpecies":
        return cls(mass=mass_amu * CONSTANTS.atomic_mass_unit, lambda0=lambda0_nm)

    @property
    def omega0(self) -> float:
        """Transition frequency in Hz (ordinary frequency, c / lambda0)."""
        return CONSTANTS.c / (self.lambda0 * 1e-9)

    @property
    def k0(self) -> float:
        """Free-space wave number 2 pi / lambda0 in nm^-1."""
        return 2.0 * math.pi / self.lambda0

    @property
    def kinetic_coefficient(self) -> float:
        """h / (8 pi^2 m) in Hz nm^2: the Schroedinger kinetic term in frequency units."""
        return CONSTANTS.planck_h / (8.0 * math.pi**2 * self.mass) * 1e18


CESIUM_D2 = AtomSpecies.from_amu(132.9, 852.0)


@dataclass(frozen=True)
class DielectricHalfSpace:
    n1: float

    def __post_init__(self):
        if not self.n1 >= 1.0:
            raise DomainError(f"refractive index must be >= 1, got {self.n1}")


def dielectric_c3(c3_metal: float, n: float) -> float:
    """Scale a perfect-conductor C3 by (n^2 - 1)/(n^2 + 1)."""
    return (n * n - 1.0) / (n * n + 1.0) * c3_metal


@dataclass(frozen=True)
class PotentialParams:
    """V(x) = A exp(-alpha x) - C3 / x^3, with C3 in Hz nm^3, A in Hz, alpha in nm^-1."""

    internal_state: InternalState
    C3: float
    A: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "internal_state", InternalState(self.internal_state))
        if not (self.C3 > 0 and self.A > 0 and self.alpha > 0):
            raise DomainError("C3, A and alpha must all be positive")

    @property
    def extremum_ratio(self) -> float:
        """3 alpha^3 C3 / A, the right-hand side of xi^4 exp(-xi) = const."""
        return 3.0 * self.alpha**3 * self.C3 / self.A

    def __call__(self, x):
        return potential(self, x)

    def turning_point_bound(self, energy: float) -> float:
        """(C3/|E|)^(1/3): never smaller than the true outer turning point for E < 0."""
        return (self.C3 / abs(energy)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class WellGeometry:
    x_p: float
    x_m: float
    x_a: float
    xi_p: float
    xi_m: float
    depth_D: float
    peak_value: float


def potential(params: PotentialParams, x):
    """Surface potential in Hz at distance x (nm); scalar or array input."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("the surface potential is defined for x > 0 only")
    v = params.A * np.exp(-params.alpha * xa) - params.C3 / xa**3
    return float(v) if np.ndim(v) == 0 else v


def derive_repulsion_params(C3: float, D: float, x_m: float,
                            internal_state=InternalState.GROUND) -> PotentialParams:
    """Repulsion height A and range alpha from C3, the depth D and the minimum x_m."""
    if not (C3 > 0 and D > 0 and x_m > 0):
        raise DomainError("C3, D and x_m must be positive")
    x_a = (C3 / D) ** (1.0 / 3.0)
    lower = x_a / 4.0 ** (1.0 / 3.0)
    if not (lower < x_m < x_a):
        raise GeometryViolation(
            f"x_m = {x_m:g} nm must satisfy x_a/4^(1/3) < x_m < x_a, "
            f"i.e. {lower:.6g} nm < x_m < {x_a:.6g} nm (condition A3)")
    xi_m = 3.0 / (1.0 - (x_m / x_a) ** 3)
    if xi_m >= XI_UPPER:
        # alpha diverges as x_m -> x_a; the well would be a cusp at x_a
        raise GeometryViolation(
            f"x_m = {x_m:g} nm is too close to x_a = {x_a:.6g} nm (alpha x_m = {xi_m:.4g} "
            f">= {XI_UPPER:g}); condition A3 holds only marginally")
    alpha = xi_m / x_m
    A = 3.0 * D * math.exp(alpha * x_m) / (alpha * x_m - 3.0)
    return PotentialParams(internal_state, C3=C3, A=A, alpha=alpha)


def well_geometry(params: PotentialParams) -> WellGeometry:
    """Barrier peak and well minimum from the two roots of xi^4 exp(-xi) = 3 alpha^3 C3 / A."""
    c = params.extremum_ratio
    if c >= _XI_PEAK_VALUE * (1.0 - 1e-12):
        raise NoDistinctExtrema(
            f"3 alpha^3 C3 / A = {c:.6g} >= 256/e^4 = {_XI_PEAK_VALUE:.6g}")

    def f(xi):
        return xi**4 * math.exp(-xi) - c

    xi_p = brentq(f, 0.0, 4.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    xi_m = brentq(f, 4.0, XI_UPPER, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    x_p = xi_p / params.alpha
    x_m = xi_m / params.alpha
    depth = -potential(params, x_m)
    return WellGeometry(
        x_p=x_p, x_m=x_m, x_a=(params.C3 / depth) ** (1.0 / 3.0) if depth > 0 else math.nan,
        xi_p=xi_p, xi_m=xi_m, depth_D=depth, peak_value=potential(params, x_p))


def transition_frequency(x, V_e: PotentialParams, V_g: PotentialParams, atom: AtomSpecies):
    """Local transition frequency omega0 + V_e(x) - V_g(x) in Hz."""
    return atom.omega0 + (potential(V_e, x) - potential(V_g, x))


def crossover_length(C3_e: float, C3_g: float, atom: AtomSpecies) -> float:
    """Distance where the van der Waals shift difference equals omega0."""
    return ((C3_e - C3_g) / atom.omega0) ** (1.0 / 3.0)


def silica_cesium_potentials(x_m: float = 0.19):
    """Excited and ground potentials for Cs D2 near fused silica."""
    V_e = derive_repulsion_params(3.09 * KHZ_UM3, 316.0 * THZ, x_m, InternalState.EXCITED)
    V_g = derive_repulsion_params(1.56 * KHZ_UM3, 159.6 * THZ, x_m, InternalState.GROUND)
    return V_e, V_g
