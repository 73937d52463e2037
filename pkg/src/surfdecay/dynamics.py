"""Radiative master equation over a finite set of translational levels.

The density matrix lives in the interaction picture with respect to the atomic
level energies, so the generators carry explicit phase factors
exp(i 2 pi (nu_1 - nu_2) t) built from level frequencies in Hz.  Rates are
absolute (s^-1): a RateTensor in units of gamma_0 is multiplied by ``gamma0``.

Index layout: excited levels first, then ground levels.  Free ground levels
enter with their trapezoid energy weight, so the rate densities of the
continuum act as ordinary rates of the discretized levels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BasisMismatch, DomainError, StiffnessFailure
from .overlaps import PairKernel, momentum_overlap
from .physical_model import CONSTANTS, AtomSpecies
from .rates import RateTensor

C_NM = CONSTANTS.c * 1e9  # nm/s
TWO_PI = 2.0 * math.pi
# free-space D2 decay rate of cesium, 1/(30.5 ns), used when no other scale is given
CESIUM_D2_GAMMA0 = 3.28e7  # s^-1
SECULAR_TOL = 1e-6  # Hz; frequency differences below this count as degenerate


@dataclass(eq=False)
class LevelBasis:
    """Excited levels a and ground levels b retained in the dynamics.

    ``ground_weights`` is 1 for bound levels and the energy weight (Hz) for
    free levels.  ``frequencies`` gives omega_a = omega_0 + E_a and
    omega_b = E_b in Hz; only differences enter the equations.
    """

    excited: list
    ground: list
    omega0: float
    ground_weights: np.ndarray = None

    def __post_init__(self):
        self.excited = list(self.excited)
        self.ground = list(self.ground)
        if self.ground_weights is None:
            self.ground_weights = np.ones(len(self.ground))
        self.ground_weights = np.asarray(self.ground_weights, dtype=float)
        if self.ground_weights.shape != (len(self.ground),):
            raise DomainError("one weight per ground level is required")
        if np.any(self.ground_weights <= 0):
            raise DomainError("ground weights must be positive")
        for levels in (self.excited, self.ground):
            keys = [(s.kind, s.nu, s.energy) for s in levels]
            if len(set(keys)) != len(keys):
                raise DomainError("duplicate level in basis")
        if not np.all(np.isfinite(self.frequencies)):
            raise DomainError("level frequencies must be finite")

    @property
    def n_excited(self) -> int:
        return len(self.excited)

    @property
    def n_ground(self) -> int:
        return len(self.ground)

    @property
    def dim(self) -> int:
        return self.n_excited + self.n_ground

    @property
    def frequencies(self) -> np.ndarray:
        e = [self.omega0 + s.energy for s in self.excited]
        g = [s.energy for s in self.ground]
        return np.array(e + g, dtype=float)

    def labels(self) -> list:
        out = [f"e{s.nu}" if s.nu is not None else f"e@{s.energy:.6g}" for s in self.excited]
        out += [f"g{s.nu}" if s.nu is not None else f"g@{s.energy:.6g}" for s in self.ground]
        return out


@dataclass(eq=False)
class DensityMatrix:
    basis: LevelBasis
    rho: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        if self.rho.shape != (self.basis.dim, self.basis.dim):
            raise BasisMismatch(f"rho has shape {self.rho.shape}, basis has {self.basis.dim} levels")

    @classmethod
    def pure_level(cls, basis: LevelBasis, index: int) -> "DensityMatrix":
        rho = np.zeros((basis.dim, basis.dim), dtype=complex)
        rho[index, index] = 1.0
        return cls(basis, rho)

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()

    def violations(self) -> dict:
        """Distance from each defining property: Hermiticity, unit trace, nonnegative diagonal."""
        return {
            "hermiticity": float(np.max(np.abs(self.rho - self.rho.conj().T))),
            "trace": float(abs(np.trace(self.rho) - 1.0)),
            "negative_diagonal": float(max(0.0, -np.min(self.rho.diagonal().real))),
        }

    def is_valid(self, herm_tol=1e-12, trace_tol=1e-10, diag_tol=1e-10) -> bool:
        v = self.violations()
        return (v["hermiticity"] <= herm_tol and v["trace"] <= trace_tol
                and v["negative_diagonal"] <= diag_tol)

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.rho + self.rho.conj().T)
        return float(np.linalg.eigvalsh(h)[0])


@dataclass(frozen=True)
class DriveField:
    """Classical plane wave along the surface normal.

    ``rabi_scale`` is the angular Rabi frequency E_l d_leg / hbar in s^-1,
    ``omega_l`` the field frequency in Hz and ``beta_l`` the signed wave
    number in nm^-1 (positive for propagation away from the surface).
    """

    rabi_scale: float
    omega_l: float
    beta_l: float

    def __post_init__(self):
        if not self.omega_l > 0:
            raise DomainError("drive frequency must be positive")
        expected = TWO_PI * self.omega_l / C_NM
        if abs(abs(self.beta_l) - expected) > 1e-9 * expected:
            raise DomainError(f"|beta_l| must equal 2 pi omega_l / c = {expected:.12g} nm^-1")

    @classmethod
    def plane_wave(cls, rabi_scale: float, omega_l: float, direction: int = 1) -> "DriveField":
        if direction not in (1, -1):
            raise DomainError("direction must be +1 or -1")
        return cls(rabi_scale, omega_l, direction * TWO_PI * omega_l / C_NM)


@dataclass(eq=False)
class RabiMatrix:
    """Omega[l, a, b] = rabi_scale_l * F_ab(beta_l) in s^-1 (free b carry sqrt(weight))."""

    Omega: np.ndarray

    @classmethod
    def build(cls, basis: LevelBasis, drives: Sequence[DriveField],
              method: str = "direct") -> "RabiMatrix":
        om = np.zeros((len(drives), basis.n_excited, basis.n_ground), dtype=complex)
        scale = np.sqrt(basis.ground_weights)
        for l, d in enumerate(drives):
            for i, a in enumerate(basis.excited):
                for j, b in enumerate(basis.ground):
                    if method == "direct":
                        f = PairKernel(a, b).F(d.beta_l)[0]
                    elif method == "momentum":
                        f = momentum_overlap(a, b, d.beta_l)
                    else:
                        raise DomainError(f"unknown overlap method {method!r}")
                    om[l, i, j] = d.rabi_scale * f * scale[j]
        return cls(om)


def _masked_phase(freqs: np.ndarray, secular: bool):
    diff = freqs[:, None] - freqs[None, :]
    keep = np.abs(diff) <= SECULAR_TOL if secular else np.ones_like(diff, dtype=bool)
    return TWO_PI * diff, keep


class MasterEquation:
    """Right-hand side of the decay (and optionally driven) equations for one basis."""

    def __init__(self, basis: LevelBasis, rates: RateTensor, *, gamma0: float = CESIUM_D2_GAMMA0,
                 drives: Sequence[DriveField] = (), rabi: Optional[RabiMatrix] = None,
                 secular: bool = False, atom: Optional[AtomSpecies] = None,
                 relaxation: Optional[np.ndarray] = None):
        if (rates.gamma_aabb.shape[0] != basis.n_excited
                or rates.gamma_aabb.shape[2] != basis.n_ground):
            raise BasisMismatch("rate tensor does not cover the basis")
        if drives and rabi is None:
            rabi = RabiMatrix.build(basis, drives)
        if rabi is not None and rabi.Omega.shape[1:] != (basis.n_excited, basis.n_ground):
            raise BasisMismatch("Rabi matrix does not cover the basis")
        self.basis = basis
        self.secular = secular
        self.ne = basis.n_excited
        freqs = basis.frequencies
        g4 = np.asarray(rates.gamma_aabb, dtype=float) * gamma0
        # cross coefficients are the marginals over the retained ground levels,
        # which keeps the trace exactly conserved in a truncated basis
        cross = np.einsum("ijbb->ij", g4)
        fe = freqs[: self.ne]
        fg = freqs[self.ne:]
        self._w_ee, keep_ee = _masked_phase(fe, secular)
        self._w_gg, _ = _masked_phase(fg, secular)
        # G[a, a''] = gamma_{a'' a} exp(i w_{a a''} t)
        self._G0 = np.where(keep_ee, cross.T, 0.0)
        # C[a, a', b, b'] = (gamma_aa'bb' + gamma*_a'ab'b) / 2
        c4 = 0.5 * (g4 + g4.transpose(1, 0, 3, 2))
        if secular:
            dw = (fg[None, None, :, None] - fg[None, None, None, :]) \
                - (fe[:, None, None, None] - fe[None, :, None, None])
            c4 = np.where(np.abs(dw) <= SECULAR_TOL, c4, 0.0)
        self._C = c4
        self._relax = None
        if relaxation is not None:
            # extra population transfer R[i, j] (j -> i, s^-1), e.g. phenomenological
            # phonon processes; none ship by default
            r = np.array(relaxation, dtype=float)
            if r.shape != (basis.dim, basis.dim) or np.any(r < 0):
                raise BasisMismatch("relaxation must be a nonnegative dim x dim matrix")
            np.fill_diagonal(r, 0.0)
            out_rate = r.sum(axis=0)
            self._relax = (r, 0.5 * (out_rate[:, None] + out_rate[None, :]))
        self._drives = list(drives)
        self._omega = None if rabi is None or not drives else rabi.Omega
        if self._omega is not None:
            omega0 = basis.omega0
            trans = np.array([[omega0 + a.energy - b.energy for b in basis.ground]
                              for a in basis.excited])
            self._delta = np.array([TWO_PI * (d.omega_l - trans) for d in self._drives])

    def decay(self, t: float, rho: np.ndarray) -> np.ndarray:
        ne = self.ne
        out = np.zeros_like(rho)
        G = self._G0 * np.exp(1j * self._w_ee * t)
        ee = rho[:ne, :ne]
        out[:ne, :ne] = -0.5 * (G @ ee + ee @ G.conj().T)
        out[:ne, ne:] = -0.5 * (G @ rho[:ne, ne:])
        out[ne:, :ne] = out[:ne, ne:].conj().T
        x = ee * np.exp(-1j * self._w_ee * t)
        out[ne:, ne:] = np.einsum("ijbc,ij->bc", self._C, x) * np.exp(1j * self._w_gg * t)
        return out

    def coupling(self, t: float) -> np.ndarray:
        """M(t) = sum_l Omega_lab exp(-i delta_lab t) |a><b| + h.c."""
        dim = self.basis.dim
        m = np.zeros((dim, dim), dtype=complex)
        if self._omega is None:
            return m
        block = np.sum(self._omega * np.exp(-1j * self._delta * t), axis=0)
        m[: self.ne, self.ne:] = block
        m[self.ne:, : self.ne] = block.conj().T
        return m

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        out = self.decay(t, rho)
        if self._omega is not None:
            m = self.coupling(t)
            out += 0.5j * (m @ rho - rho @ m)
        if self._relax is not None:
            r, damp = self._relax
            out -= damp * rho
            out[np.diag_indices_from(out)] += r @ rho.diagonal()
        return out


def decay_generator(rho: DensityMatrix, t: float, rates: RateTensor, *,
                    gamma0: float = CESIUM_D2_GAMMA0, secular: bool = False) -> np.ndarray:
    """d rho / dt from spontaneous decay alone, in s^-1."""
    eq = MasterEquation(rho.basis, rates, gamma0=gamma0, secular=secular)
    return eq(t, rho.rho)


def driven_generator(rho: DensityMatrix, t: float, rates: RateTensor,
                     drives: Sequence[DriveField], rabi: Optional[RabiMatrix] = None, *,
                     gamma0: float = CESIUM_D2_GAMMA0, secular: bool = False) -> np.ndarray:
    """d rho / dt with coherent plane-wave driving plus spontaneous decay."""
    eq = MasterEquation(rho.basis, rates, gamma0=gamma0, drives=drives, rabi=rabi,
                        secular=secular)
    return eq(t, rho.rho)


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    basis: LevelBasis
    nfev: int = 0
    audit: dict = field(default_factory=dict)

    def __getitem__(self, i) -> DensityMatrix:
        return DensityMatrix(self.basis, self.states[i])

    @property
    def populations(self) -> np.ndarray:
        return np.einsum("tii->ti", self.states).real


class _TooManySteps(Exception):
    pass


def evolve(rho0: DensityMatrix, t_final: float, rates: RateTensor, *,
           drives: Sequence[DriveField] = (), rabi: Optional[RabiMatrix] = None,
           gamma0: float = CESIUM_D2_GAMMA0, tol: float = 1e-9, t_eval=None,
           secular: bool = False, method: str = "DOP853",
           max_evaluations: int = 2_000_000,
           relaxation: Optional[np.ndarray] = None) -> Trajectory:
    """Integrate the master equation from rho0 over [0, t_final] seconds.

    Adaptive embedded Runge-Kutta with rtol = atol = ``tol``.  Raises
    StiffnessFailure when the step size collapses or the evaluation budget is
    exhausted; fast level-spacing phases are the usual cause and the secular
    flag removes them.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if t_final < 0:
        raise DomainError("t_final must be >= 0")
    basis = rho0.basis
    eq = MasterEquation(basis, rates, gamma0=gamma0, drives=drives, rabi=rabi, secular=secular,
                        relaxation=relaxation)
    dim = basis.dim
    times = np.array([0.0, t_final] if t_eval is None else t_eval, dtype=float)
    if t_final == 0.0:
        states = np.repeat(rho0.rho[None], times.size, axis=0)
        return Trajectory(times, states, basis, 0, _audit(states, basis, tol))
    if times.min() < 0 or times.max() > t_final:
        raise DomainError("sample times must lie in [0, t_final]")
    count = [0]

    def rhs(t, y):
        count[0] += 1
        if count[0] > max_evaluations:
            raise _TooManySteps
        return eq(t, y.reshape(dim, dim)).ravel()

    try:
        sol = solve_ivp(rhs, (0.0, t_final), rho0.rho.ravel(), method=method, t_eval=times,
                        rtol=tol, atol=tol)
    except _TooManySteps:
        raise StiffnessFailure(
            f"more than {max_evaluations} evaluations; enable the secular flag "
            "or shrink the basis") from None
    if not sol.success:
        raise StiffnessFailure(f"{sol.message}; enable the secular flag or shrink the basis")
    states = sol.y.T.reshape(-1, dim, dim)
    return Trajectory(sol.t, states, basis, sol.nfev, _audit(states, basis, tol))


def _audit(states: np.ndarray, basis: LevelBasis, tol: float) -> dict:
    """Worst trace drift, Hermiticity residue and smallest eigenvalue along a trajectory."""
    herm = np.max(np.abs(states - np.conj(np.transpose(states, (0, 2, 1)))))
    traces = np.einsum("tii->t", states)
    sym = 0.5 * (states + np.conj(np.transpose(states, (0, 2, 1))))
    min_eig = float(np.min(np.linalg.eigvalsh(sym)[:, 0]))
    return {
        "trace_drift": float(np.max(np.abs(traces - traces[0]))),
        "hermiticity": float(herm),
        "min_eigenvalue": min_eig,
        "positivity_ok": min_eig >= -100.0 * tol,
    }


def two_level_steady_state(rabi: float, detuning: float, gamma: float) -> float:
    """Excited population of a driven two-level atom (all arguments angular, s^-1)."""
    return rabi**2 / (4.0 * (detuning**2 + gamma**2 / 4.0) + 2.0 * rabi**2)


def diagonal_decay_populations(rates: RateTensor, gamma0: float, p0: np.ndarray,
                               times: np.ndarray) -> np.ndarray:
    """Populations of the decoupled diagonal system by matrix exponential.

    Excited populations decay with gamma_a (basis marginal), ground levels
    collect gamma_ab.  Used as an independent check of ``evolve``.
    """
    from scipy.linalg import expm

    g4 = rates.gamma_aabb * gamma0
    ne, nb = g4.shape[0], g4.shape[2]
    gab = np.array([[g4[i, i, j, j] for j in range(nb)] for i in range(ne)])
    A = np.zeros((ne + nb, ne + nb))
    A[np.arange(ne), np.arange(ne)] = -gab.sum(axis=1)
    A[ne:, :ne] = gab.T
    return np.array([expm(A * t) @ p0 for t in times])
