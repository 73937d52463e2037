"""Spontaneous decay of translational levels near a nonabsorbing dielectric half-space.

All rates are in units of the free-space rate gamma_0 = gamma_f(omega_0).
Frequencies are ordinary frequencies in Hz; the wave number belonging to a
frequency nu is k = 2 pi nu / c, in nm^-1.

Mode sums are reduced to integrals over xi in [0, 1] (propagating modes) and
xi in [0, sqrt(n1^2 - 1)] (evanescent modes).  Both use Gauss-Legendre rules;
the evanescent interval is mapped through xi = sqrt(n1^2 - 1) sin(theta) to
absorb the square-root edge of the integrand.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, NonRadiativePair
from .overlaps import OverlapMatrix, PairKernel, franck_condon_factors, pair_product
from .physical_model import CONSTANTS, AtomSpecies
from .spectrum import StateKind, TranslationalState

C_NM = CONSTANTS.c * 1e9  # nm/s
FREE_SPACE_INDEX_TOL = 1e-9
DEFAULT_ORDER = 64


class Orientation(str, enum.Enum):
    PERPENDICULAR = "perpendicular"
    PARALLEL = "parallel"
    RANDOM = "random"


def wave_number(frequency: float) -> float:
    """k = 2 pi nu / c in nm^-1 for an ordinary frequency nu in Hz."""
    return 2.0 * math.pi * frequency / C_NM


@dataclass(frozen=True)
class RateScale:
    """Reference frequency and, optionally, the absolute free-space rate in s^-1."""

    omega0: float
    gamma0: float = 1.0
    absolute: bool = False

    def to_absolute(self, value):
        return value * self.gamma0 if self.absolute else value


def gamma_f_ratio(omega: float, scale: RateScale) -> float:
    """gamma_f(omega)/gamma_0 = (omega/omega0)^3 (times gamma_0 when it is absolute)."""
    if not omega > 0:
        raise DomainError("transition frequency must be positive")
    return scale.to_absolute((omega / scale.omega0) ** 3)


def interference_coeffs(xi, n1: float):
    """Reflection weights (r_perp, r_par) of the propagating-mode integrals."""
    xi = np.asarray(xi, dtype=float)
    n2 = n1 * n1
    eta = np.sqrt(n2 - 1.0 + xi * xi)
    rp = (n2 * xi - eta) / (n2 * xi + eta)
    rs = (xi - eta) / (xi + eta)
    r_perp = (1.0 - xi * xi) * rp
    r_par = rs - xi * xi * rp
    return r_perp, r_par


def evanescent_coeffs(xi, n1: float):
    """Transmission weights (T_perp, T_par) of the evanescent-mode integrals."""
    xi = np.asarray(xi, dtype=float)
    if not n1 > 1.0:
        raise DomainError("evanescent modes need n1 > 1")
    top = math.sqrt(n1 * n1 - 1.0)
    if np.any(xi < 0) or np.any(xi > top * (1 + 1e-14)):
        raise DomainError(f"xi must lie in [0, {top:.6g}]")
    n2 = n1 * n1
    root = np.sqrt(np.maximum(n2 - 1.0 - xi * xi, 0.0))
    den = (n2 + 1.0) * xi * xi + 1.0
    t_perp = 2.0 * n2 / (n2 - 1.0) * root / den * xi * (1.0 + xi * xi)
    t_par = 2.0 / (n2 - 1.0) * (1.0 + n2 * xi * xi / den) * xi * root
    return t_perp, t_par


@dataclass(frozen=True, eq=False)
class RateQuadrature:
    n1: float
    order: int
    propagating_nodes: np.ndarray
    propagating_weights: np.ndarray
    evanescent_nodes: np.ndarray
    evanescent_weights: np.ndarray

    @classmethod
    def build(cls, n1: float, order: int = DEFAULT_ORDER) -> "RateQuadrature":
        if n1 < 1.0:
            raise DomainError("refractive index must be >= 1")
        t, w = np.polynomial.legendre.leggauss(order)
        pn = 0.5 * (t + 1.0)
        pw = 0.5 * w
        if n1 <= 1.0 + FREE_SPACE_INDEX_TOL:
            en = np.zeros(0)
            ew = np.zeros(0)
        else:
            top = math.sqrt(n1 * n1 - 1.0)
            theta = 0.25 * math.pi * (t + 1.0)
            en = top * np.sin(theta)
            ew = top * np.cos(theta) * 0.25 * math.pi * w
        return cls(n1, order, pn, pw, en, ew)

    @property
    def free_space(self) -> bool:
        return self.evanescent_nodes.size == 0

    def coefficients(self, orientation=Orientation.RANDOM):
        """Weights (direct, reflected, evanescent) of the three mode integrals."""
        orientation = Orientation(orientation)
        xi = self.propagating_nodes
        if self.free_space:
            r_perp = r_par = np.zeros_like(xi)
            t_perp = t_par = np.zeros(0)
        else:
            r_perp, r_par = interference_coeffs(xi, self.n1)
            t_perp, t_par = evanescent_coeffs(self.evanescent_nodes, self.n1)
        if orientation is Orientation.PERPENDICULAR:
            return 1.5 * (1.0 - xi * xi), 1.5 * r_perp, 1.5 * t_perp
        if orientation is Orientation.PARALLEL:
            return 0.75 * (1.0 + xi * xi), 0.75 * r_par, 0.75 * t_par
        return np.ones_like(xi), 0.5 * (r_perp + r_par), 0.5 * (t_perp + t_par)


def gamma_x(omega: float, x, n1: float, quad: Optional[RateQuadrature] = None,
            orientation=Orientation.RANDOM) -> dict:
    """Decay rate of an atom at rest at distance x (nm), in units of gamma_f(omega).

    Returns a dict with ``total`` = 1 + ``interference_part`` + ``evanescent_part``.
    """
    quad = quad or RateQuadrature.build(n1)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("x must be >= 0")
    k = wave_number(omega)
    direct, refl, evan = quad.coefficients(orientation)
    base = float(np.dot(quad.propagating_weights, direct))
    xs = np.atleast_1d(x)
    phase = 2.0 * k * np.outer(xs, quad.propagating_nodes)
    interference = np.cos(phase) @ (quad.propagating_weights * refl)
    if quad.free_space:
        evanescent = np.zeros_like(xs)
    else:
        decay = np.exp(-2.0 * k * np.outer(xs, quad.evanescent_nodes))
        evanescent = decay @ (quad.evanescent_weights * evan)
    total = base + interference + evanescent
    if x.ndim == 0:
        return {"total": float(total[0]), "interference_part": float(interference[0]),
                "evanescent_part": float(evanescent[0])}
    return {"total": total, "interference_part": interference, "evanescent_part": evanescent}


def transition_omega(a: TranslationalState, b: TranslationalState, atom: AtomSpecies) -> float:
    """omega_ab = omega_0 + E_a - E_b (Hz)."""
    return atom.omega0 + a.energy - b.energy


def _kernel(overlaps: Optional[OverlapMatrix], a, b) -> PairKernel:
    if overlaps is not None:
        return overlaps.kernel(a, b)
    return PairKernel(a, b)


def gamma_tensor(a, a2, b, b2, *, atom: AtomSpecies, quad: RateQuadrature,
                 orientation=Orientation.RANDOM, overlaps: Optional[OverlapMatrix] = None,
                 surface: bool = True, freeze_frequency: bool = False) -> float:
    """gamma_{a a' b b'} in units of gamma_0.

    ``surface=False`` drops the reflected and evanescent contributions and
    ``freeze_frequency=True`` evaluates everything at omega_0 instead of omega_ab.
    """
    omega = transition_omega(a, b, atom)
    if omega <= 0:
        raise NonRadiativePair(f"omega_ab = {omega:g} Hz <= 0")
    if freeze_frequency:
        omega = atom.omega0
    k = wave_number(omega)
    direct, refl, evan = quad.coefficients(orientation)
    beta = k * quad.propagating_nodes
    f1 = _kernel(overlaps, a, b).F(beta)
    f2 = f1 if (a2 is a and b2 is b) else _kernel(overlaps, a2, b2).F(beta)
    w = quad.propagating_weights
    value = np.dot(w * direct, (f1 * np.conj(f2)).real)
    if surface and not quad.free_space:
        value += np.dot(w * refl, (f1 * f2).real)
        beta_e = k * quad.evanescent_nodes
        i1 = _kernel(overlaps, a, b).I(beta_e)
        i2 = i1 if (a2 is a and b2 is b) else _kernel(overlaps, a2, b2).I(beta_e)
        value += np.dot(quad.evanescent_weights * evan, i1 * i2)
    return float((omega / atom.omega0) ** 3 * value)


def gamma_ab(a, b, **kwargs) -> float:
    """Transition rate a -> b (a density per Hz when b is a free level)."""
    return gamma_tensor(a, a, b, b, **kwargs)


def rate_matrix(excited: Sequence[TranslationalState], ground: Iterable[TranslationalState],
                **kwargs) -> np.ndarray:
    """gamma_ab for every excited a and every ground b, shape (len(excited), n_ground).

    ``ground`` may be a lazy iterable; each ground state is released after use,
    so dense continuum meshes need not fit in memory.
    """
    cols = [[gamma_ab(a, b, **kwargs) for a in excited] for b in ground]
    return np.array(cols, dtype=float).reshape(len(cols), len(excited)).T


def effective_partner(a: TranslationalState, ground: Sequence[TranslationalState]):
    """Ground level with the largest Franck-Condon factor; ties go to the lower nu."""
    bound = [b for b in ground if b.kind == StateKind.BOUND]
    if not bound:
        raise DomainError("need at least one bound ground level")
    fc = franck_condon_factors(a, bound)
    best = np.flatnonzero(fc >= fc.max())
    return min((bound[i] for i in best), key=lambda s: s.nu)


def _gamma_x_on_grid(omega: float, x: np.ndarray, quad: RateQuadrature,
                     orientation) -> np.ndarray:
    # gamma_x varies on the scale 1/(2k); tabulate and spline rather than
    # evaluating the xi-integrals at every wavefunction sample
    k = wave_number(omega)
    h = min(0.5, 0.02 / k)
    lo, hi = float(x[0]), float(x[-1])
    n = max(8, int(math.ceil((hi - lo) / h)) + 1)
    xt = np.linspace(lo, hi, n)
    table = gamma_x(omega, xt, quad.n1, quad, orientation)["total"]
    return CubicSpline(xt, table)(x)


def gamma_cross(a: TranslationalState, a2: TranslationalState,
                ground: Sequence[TranslationalState], *, atom: AtomSpecies,
                quad: RateQuadrature, orientation=Orientation.RANDOM,
                partner: Optional[TranslationalState] = None,
                effective_frequency: bool = True) -> float:
    """<a| gamma_x(omega_ab_eff) |a'> / gamma_0 with the effective partner of ``a``.

    With ``effective_frequency=False`` the rest-atom rate is taken at omega_0,
    which removes the red-shift suppression of deep levels.
    """
    if effective_frequency:
        b_eff = partner or effective_partner(a, ground)
        omega = transition_omega(a, b_eff, atom)
    else:
        omega = atom.omega0
    if omega <= 0:
        raise NonRadiativePair(f"effective omega = {omega:g} Hz <= 0")
    x, p = pair_product(a, a2)
    g = _gamma_x_on_grid(omega, x, quad, orientation)
    return float((omega / atom.omega0) ** 3 * np.dot(p, g))


def linewidth(a: TranslationalState, ground: Sequence[TranslationalState], **kwargs) -> float:
    """Radiative linewidth gamma_a / gamma_0."""
    return gamma_cross(a, a, ground, **kwargs)


def free_space_tensor(a, a2, b, b2, k0: float, quad: Optional[RateQuadrature] = None) -> float:
    """f_{a a' b b'} as a single integral over xi of Re[F_ab F*_a'b'] at xi k0."""
    quad = quad or RateQuadrature.build(1.0)
    beta = k0 * quad.propagating_nodes
    f1 = PairKernel(a, b).F(beta)
    f2 = PairKernel(a2, b2).F(beta)
    return float(np.dot(quad.propagating_weights, (f1 * np.conj(f2)).real))


def free_space_tensor_direct(a, a2, b, b2, k0: float, stride: int = 1,
                             chunk: int = 2048) -> float:
    """Same quantity as a double integral with the sinc kernel (brute force, O(N^2)).

    ``stride`` subsamples both products; pass the same stride-resampled states to the
    single-integral form when comparing the two.
    """
    x1, p1 = pair_product(a, b)
    x2, p2 = pair_product(a2, b2)
    x1, p1 = x1[::stride], p1[::stride] * stride
    x2, p2 = x2[::stride], p2[::stride] * stride
    keep1 = p1 != 0
    keep2 = p2 != 0
    x1, p1, x2, p2 = x1[keep1], p1[keep1], x2[keep2], p2[keep2]
    total = 0.0
    for s in range(0, x1.size, chunk):
        d = k0 * (x1[s:s + chunk, None] - x2[None, :])
        total += float(p1[s:s + chunk] @ np.sinc(d / math.pi) @ p2)
    return total


@dataclass(frozen=True, eq=False)
class RateTensor:
    """Decay coefficients over a finite basis, in units of gamma_0.

    ``gamma_aabb[a, a', b, b']``; marginals ``gamma_ab[a, b]``, ``gamma_cross[a, a']``
    (sum over the retained b of gamma_{a a' b b}) and ``gamma_a`` (its diagonal).
    """

    levels_a: list
    levels_b: list
    gamma_aabb: np.ndarray
    orientation: Orientation = Orientation.RANDOM

    @property
    def gamma_ab(self) -> np.ndarray:
        n_a, n_b = self.gamma_aabb.shape[0], self.gamma_aabb.shape[2]
        return self.gamma_aabb[np.arange(n_a), np.arange(n_a)][:, np.arange(n_b), np.arange(n_b)]

    @property
    def gamma_cross(self) -> np.ndarray:
        return np.einsum("ijbb->ij", self.gamma_aabb)

    @property
    def gamma_a(self) -> np.ndarray:
        return np.diag(self.gamma_cross).copy()

    def scaled(self, factor: float) -> "RateTensor":
        return RateTensor(self.levels_a, self.levels_b, self.gamma_aabb * factor, self.orientation)


def build_rate_tensor(excited: Sequence[TranslationalState], ground: Sequence[TranslationalState], *,
                      atom: AtomSpecies, quad: RateQuadrature, orientation=Orientation.RANDOM,
                      ground_weights=None) -> RateTensor:
    """Full gamma_{a a' b b'} over a basis.

    Free ground levels enter with ``ground_weights`` (trapezoid energy weights),
    i.e. as wavefunctions scaled by sqrt(weight), so densities become rates.
    """
    n_a, n_b = len(excited), len(ground)
    wts = np.ones(n_b) if ground_weights is None else np.asarray(ground_weights, dtype=float)
    direct, refl, evan = quad.coefficients(orientation)
    kernels = [[PairKernel(a, b) for b in ground] for a in excited]
    scale = np.sqrt(wts)
    out = np.zeros((n_a, n_a, n_b, n_b))
    w = quad.propagating_weights
    for i, a in enumerate(excited):
        for j, b in enumerate(ground):
            omega = transition_omega(a, b, atom)
            if omega <= 0:
                raise NonRadiativePair(f"omega_ab = {omega:g} Hz <= 0")
            k = wave_number(omega)
            beta = k * quad.propagating_nodes
            f_all = np.array([[kern.F(beta) for kern in row] for row in kernels])
            f_all *= scale[None, :, None]
            f1 = f_all[i, j]
            val = np.einsum("q,abq->ab", w * direct, (f1[None, None, :] * np.conj(f_all)).real)
            if not quad.free_space:
                val += np.einsum("q,abq->ab", w * refl, (f1[None, None, :] * f_all).real)
                beta_e = k * quad.evanescent_nodes
                i_all = np.array([[kern.I(beta_e) for kern in row] for row in kernels])
                i_all *= scale[None, :, None]
                val += np.einsum("q,abq->ab", quad.evanescent_weights * evan,
                                 i_all[i, j][None, None, :] * i_all)
            out[i, :, j, :] = (omega / atom.omega0) ** 3 * val
    return RateTensor(list(excited), list(ground), out, Orientation(orientation))
