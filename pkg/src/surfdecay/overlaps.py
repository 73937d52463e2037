"""Transition kernels F_ab(beta) = <a|exp(i beta x)|b> and I_ab(beta) = <a|exp(-beta x)|b>."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, GridMismatch
from .spectrum import StateKind, TranslationalState, common_length

MOMENT_BIN_WIDTH = 10.0  # nm
MOMENT_ORDER = 6
# the binned Taylor expansion is used only while |beta| * bin_width / 2 stays below this
MOMENT_MAX_PHASE = 0.05


def pair_product(a: TranslationalState, b: TranslationalState):
    """Grid points and quadrature-weighted product phi_a phi_b over the common support."""
    common_length(a.grid, b.grid)
    m = min(a.psi.size, b.psi.size)
    grid = a.grid if a.grid.n >= b.grid.n else b.grid
    w = grid.weights[:m]
    return grid.x[:m], a.psi[:m] * b.psi[:m] * w


def overlap_F(a: TranslationalState, b: TranslationalState, beta: float) -> complex:
    """<a| exp(i beta x) |b> by direct quadrature on the shared grid."""
    x, p = pair_product(a, b)
    return complex(np.sum(p * np.exp(1j * beta * x)))


def overlap_I(a: TranslationalState, b: TranslationalState, beta: float) -> float:
    """<a| exp(-beta x) |b> for an evanescent decay constant beta >= 0."""
    if beta < 0:
        raise DomainError("evanescent kernel needs beta >= 0")
    x, p = pair_product(a, b)
    return float(np.sum(p * np.exp(-beta * x)))


class PairKernel:
    """Compressed form of phi_a phi_b for fast kernel evaluation at many beta.

    The weighted product is reduced to Taylor moments about the centres of
    bins of width ``bin_width``; since exp(i beta x) varies on the scale of the
    optical wavelength, a handful of moments per bin reproduce the direct
    quadrature to ~1e-12.  Larger |beta| falls back to the direct sum.
    """

    def __init__(self, a: TranslationalState, b: TranslationalState,
                 bin_width: float = MOMENT_BIN_WIDTH, order: int = MOMENT_ORDER):
        self.x, self.p = pair_product(a, b)
        self.bin_width = bin_width
        x0 = self.x[0]
        idx = np.floor((self.x - x0) / bin_width).astype(np.int64)
        nb = int(idx[-1]) + 1
        self.centres = x0 + (np.arange(nb) + 0.5) * bin_width
        d = self.x - self.centres[idx]
        self.moments = np.empty((order + 1, nb))
        term = self.p.copy()
        for m in range(order + 1):
            self.moments[m] = np.bincount(idx, weights=term, minlength=nb) / math.factorial(m)
            term = term * d
        keep = np.any(self.moments != 0.0, axis=0)
        self.centres = self.centres[keep]
        self.moments = self.moments[:, keep]
        self.overlap = float(np.sum(self.p))

    def _fast(self, beta: np.ndarray) -> bool:
        return bool(np.all(np.abs(beta) * self.bin_width * 0.5 <= MOMENT_MAX_PHASE))

    def F(self, beta) -> np.ndarray:
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        if not self._fast(beta):
            return np.exp(1j * np.outer(beta, self.x)) @ self.p
        ib = 1j * beta
        powers = ib[:, None] ** np.arange(self.moments.shape[0])[None, :]
        inner = powers @ self.moments
        return np.sum(np.exp(np.outer(ib, self.centres)) * inner, axis=1)

    def I(self, beta) -> np.ndarray:
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        if np.any(beta < 0):
            raise DomainError("evanescent kernel needs beta >= 0")
        if not self._fast(beta):
            return np.exp(-np.outer(beta, self.x)) @ self.p
        powers = (-beta)[:, None] ** np.arange(self.moments.shape[0])[None, :]
        inner = powers @ self.moments
        return np.sum(np.exp(-np.outer(beta, self.centres)) * inner, axis=1)


def _uniform_resample(state: TranslationalState, xs: np.ndarray) -> np.ndarray:
    out = np.zeros_like(xs)
    x = state.grid.x[: state.psi.size]
    inside = xs <= x[-1]
    out[inside] = CubicSpline(x, state.psi)(xs[inside])
    return out


def momentum_overlap(a: TranslationalState, b: TranslationalState, k: float, *,
                     dx: float = 4.0e-4) -> complex:
    """Integral of conj(phi~_a(p + hbar k)) phi~_b(p) dp from discrete Fourier transforms.

    Both states are resampled on a uniform grid whose length is a whole number
    of periods 2 pi / k, so the momentum shift is an exact cyclic shift of the
    transform.  Independent of ``overlap_F`` except for the wavefunctions.
    """
    if a.grid.key != b.grid.key:
        raise GridMismatch("states live on different grids")
    x0 = a.grid.x_min
    extent = max(a.grid.x[a.psi.size - 1], b.grid.x[b.psi.size - 1]) - x0
    if k != 0.0:
        period = 2.0 * math.pi / abs(k)
        shift = int(math.ceil(extent / period))
        length = shift * period
    else:
        shift = 0
        length = extent
    n = int(math.ceil(length / dx))
    step = length / n
    xs = x0 + step * np.arange(n)
    fa = np.fft.fft(_uniform_resample(a, xs))
    fb = np.fft.fft(_uniform_resample(b, xs))
    m = shift if k >= 0 else -shift
    # conj(phi~_a) evaluated at momentum index j + m
    total = np.sum(np.conj(np.roll(fa, -m)) * fb) * step / n
    return complex(total * np.exp(1j * k * x0))


@dataclass(eq=False)
class OverlapMatrix:
    """F and I tables over (excited level, ground level, beta) plus per-pair kernels."""

    excited_levels: list
    ground_levels: list
    beta_mesh: np.ndarray
    F: np.ndarray
    I: np.ndarray
    kernels: dict

    @classmethod
    def build(cls, excited: Sequence[TranslationalState], ground: Sequence[TranslationalState],
              beta_mesh: Optional[np.ndarray] = None) -> "OverlapMatrix":
        beta_mesh = np.zeros(1) if beta_mesh is None else np.asarray(beta_mesh, dtype=float)
        kernels = {}
        F = np.empty((len(excited), len(ground), beta_mesh.size), dtype=complex)
        I = np.empty((len(excited), len(ground), beta_mesh.size))
        for i, a in enumerate(excited):
            for j, b in enumerate(ground):
                kern = PairKernel(a, b)
                kernels[(id(a), id(b))] = kern
                F[i, j] = kern.F(beta_mesh)
                I[i, j] = kern.I(np.abs(beta_mesh))
        return cls(list(excited), list(ground), beta_mesh, F, I, kernels)

    def kernel(self, a: TranslationalState, b: TranslationalState) -> PairKernel:
        key = (id(a), id(b))
        if key not in self.kernels:
            self.kernels[key] = PairKernel(a, b)
        return self.kernels[key]

    def franck_condon(self) -> np.ndarray:
        """|<a|b>|^2 for every pair."""
        return np.array([[self.kernel(a, b).overlap ** 2 for b in self.ground_levels]
                         for a in self.excited_levels])


def franck_condon_factors(a: TranslationalState, ground: Sequence[TranslationalState]) -> np.ndarray:
    out = np.empty(len(ground))
    for j, b in enumerate(ground):
        _, p = pair_product(a, b)
        out[j] = np.sum(p) ** 2
    return out


def completeness_sum(a: TranslationalState, bound: Sequence[TranslationalState],
                     free: Sequence[TranslationalState] = (), free_weights=None) -> float:
    """sum_b |<a|b>|^2 over bound levels plus the trapezoid integral over free levels."""
    total = float(np.sum(franck_condon_factors(a, bound))) if bound else 0.0
    if free:
        dens = franck_condon_factors(a, free)
        total += float(np.dot(dens, free_weights))
    return total


def is_bound(state: TranslationalState) -> bool:
    return state.kind == StateKind.BOUND
