"""Bound and free center-of-mass eigenstates in a one-dimensional surface potential.

The radial equation  -K psi'' + V psi = E psi  (K = h/(8 pi^2 m), energies in
Hz, x in nm) is integrated with the Numerov method on a uniform grid in an
auxiliary coordinate u.  The map

    u = ln x + (x_knee / x_scale) ln(1 + x / x_knee)

is logarithmic near the repulsive wall, nearly linear at intermediate
distances and logarithmic again beyond x_knee, so the same grid resolves
the 50 nm^-1 wall and the tens-of-micrometre tails of levels just below
threshold.  With
psi = sqrt(dx/du) chi the equation keeps Numerov form,

    chi'' + [ (dx/du)^2 (E - V)/K + S/2 ] chi = 0,

where S is the Schwarzian derivative of x(u).  Grids sharing
(x_min, du, x_scale, x_knee) are nested prefixes of each other, so states solved
with different extents can be compared point by point.
"""
from __future__ import annotations

import bisect
import enum
import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numba
import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import ConvergenceFailure, DomainError, GridMismatch, GridTooCoarse
from .physical_model import AtomSpecies, InternalState, PotentialParams, well_geometry

DEFAULT_X_MIN = 0.1  # nm, deep inside the exponential wall
DEFAULT_DU = 1.0e-4
DEFAULT_X_SCALE = 100.0  # nm, where the grid turns from logarithmic to uniform
DEFAULT_X_KNEE = 1000.0  # nm, where it turns logarithmic again
DEFAULT_X_CAP = 1.0e5  # nm, room for the levels closest to threshold
TAIL_FACTOR = 3.0
TAIL_DECAY_LENGTHS = 12.0
# free states stop where the phase advance per grid step exceeds this
FREE_MAX_PHASE_STEP = 0.2
COUNT_X_FAR = 1.0e7  # nm, zero-energy node counting extent


class StateKind(str, enum.Enum):
    BOUND = "bound"
    FREE = "free"


class Normalization(str, enum.Enum):
    UNIT = "unit"
    PER_UNIT_ENERGY = "per_unit_energy"


# ---------------------------------------------------------------------------
# grids


def _map_u(x, x_scale: float, x_knee: Optional[float]):
    if x_knee is None:
        return np.log(x) + x / x_scale
    return np.log(x) + (x_knee / x_scale) * np.log1p(x / x_knee)


def _invert_map(u: np.ndarray, x_scale: float, x_knee: Optional[float]) -> np.ndarray:
    """Solve _map_u(x) = u by Newton iteration in y = ln x.

    The map is convex in y, so starting from an upper bound of the root (each
    of its two terms alone must not exceed u) the iteration is monotone.
    """
    if x_knee is None:
        y = np.minimum(u, np.log(x_scale * np.maximum(u, 1e-300)))
    else:
        c = x_knee / x_scale
        bound = x_knee * np.expm1(np.maximum(u, 1e-300) / c)
        y = np.minimum(u, np.log(bound))
    for _ in range(200):
        x = np.exp(y)
        p = x_scale if x_knee is None else x_scale * (1.0 + x / x_knee)
        step = (_map_u(x, x_scale, x_knee) - u) / (1.0 + x / p)
        y -= step
        if np.max(np.abs(step)) < 1e-15:
            break
    return np.exp(y)


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Grid points x(u_i) with u_i = u_0 + i du.

    ``jacobian`` is dx/du, ``half_schwarzian`` the S/2 term of the transformed
    equation and ``weights`` the trapezoid weights for integrals over x.
    """

    x: np.ndarray
    jacobian: np.ndarray
    half_schwarzian: np.ndarray
    du: float
    key: tuple

    @classmethod
    def mapped(cls, x_min: float = DEFAULT_X_MIN, x_max: float = DEFAULT_X_CAP,
               du: float = DEFAULT_DU, x_scale: Optional[float] = DEFAULT_X_SCALE,
               x_knee: Optional[float] = DEFAULT_X_KNEE) -> "SpatialGrid":
        """Grid uniform in u = ln x + (x_knee/x_scale) ln(1 + x/x_knee).

        Spacing is logarithmic below ``x_scale``, close to x_scale * du up to
        ``x_knee`` and logarithmic again beyond it.  ``x_knee=None`` keeps the
        spacing uniform at large x; ``x_scale=None`` gives a pure log grid.
        """
        if not (0 < x_min < x_max):
            raise DomainError("need 0 < x_min < x_max")
        if x_scale is None or math.isinf(x_scale):
            u0 = math.log(x_min)
            n = int(math.floor((math.log(x_max) - u0) / du)) + 1
            u = u0 + du * np.arange(n)
            x = np.exp(u)
            jac = x.copy()
            hs = np.full(n, -0.25)
            key = ("mapped", x_min, du, math.inf)
        else:
            u0 = float(_map_u(x_min, x_scale, x_knee))
            n = int(math.floor((float(_map_u(x_max, x_scale, x_knee)) - u0) / du)) + 1
            u = u0 + du * np.arange(n)
            x = _invert_map(u, x_scale, x_knee)
            x[0] = x_min
            s = x_scale
            r = 0.0 if x_knee is None else x_scale / x_knee
            p = s + r * x
            jac = x * p / (x + p)
            hs = -(x * p * s * s + 0.25 * (p * p + r * x * x) ** 2) / (x + p) ** 4
            key = ("mapped", x_min, du, float(x_scale), x_knee)
        return cls(x=x, jacobian=jac, half_schwarzian=hs, du=du, key=key)

    @classmethod
    def uniform(cls, x_min: float, x_max: float, n: int) -> "SpatialGrid":
        x = np.linspace(x_min, x_max, n)
        dx = x[1] - x[0]
        return cls(x=x, jacobian=np.full(n, dx), half_schwarzian=np.zeros(n), du=1.0,
                   key=("uniform", x_min, dx))

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def x_min(self) -> float:
        return float(self.x[0])

    @property
    def x_max(self) -> float:
        return float(self.x[-1])

    @property
    def weights(self) -> np.ndarray:
        w = self.jacobian * self.du
        w = w.copy()
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def truncated(self, n: int) -> "SpatialGrid":
        n = max(3, min(int(n), self.n))
        return SpatialGrid(self.x[:n], self.jacobian[:n], self.half_schwarzian[:n],
                           self.du, self.key)

    def index_at(self, x: float) -> int:
        """Number of grid points with x_i <= x."""
        return int(np.searchsorted(self.x, x, side="right"))


def common_length(*grids: SpatialGrid) -> int:
    """Length of the union of nested grids; raise if they are not nested."""
    key = grids[0].key
    for g in grids[1:]:
        if g.key != key:
            raise GridMismatch(f"grids {key} and {g.key} are not nested")
    return max(g.n for g in grids)


# ---------------------------------------------------------------------------
# Numerov kernels


@numba.njit(cache=True)
def _count_nodes(a, V, c, E, h2, n):
    """Sign changes of the outward solution on points 1..n-1; -1 if the step is too coarse."""
    f0 = 1.0 + h2 * (a[0] * (E - V[0]) + c[0])
    f1 = 1.0 + h2 * (a[1] * (E - V[1]) + c[1])
    y0 = 0.0
    y1 = 1.0e-30
    nodes = 0
    for i in range(2, n):
        f2 = 1.0 + h2 * (a[i] * (E - V[i]) + c[i])
        if f2 <= 0.0:
            return -1, y1, y0
        y2 = ((12.0 - 10.0 * f1) * y1 - f0 * y0) / f2
        if y2 == 0.0:
            nodes += 1
            y2 = -1e-300 if y1 > 0 else 1e-300
        elif (y2 < 0.0) != (y1 < 0.0):
            nodes += 1
        if abs(y2) > 1e150:
            y2 *= 1e-150
            y1 *= 1e-150
        y0 = y1
        y1 = y2
        f0 = f1
        f1 = f2
    return nodes, y1, y0


@numba.njit(cache=True)
def _outward(a, V, c, E, h2, n):
    y = np.zeros(n)
    y[1] = 1.0e-30
    f0 = 1.0 + h2 * (a[0] * (E - V[0]) + c[0])
    f1 = 1.0 + h2 * (a[1] * (E - V[1]) + c[1])
    for i in range(2, n):
        f2 = 1.0 + h2 * (a[i] * (E - V[i]) + c[i])
        y[i] = ((12.0 - 10.0 * f1) * y[i - 1] - f0 * y[i - 2]) / f2
        if abs(y[i]) > 1e150:
            for j in range(i + 1):
                y[j] *= 1e-150
        f0 = f1
        f1 = f2
    return y


@numba.njit(cache=True)
def _inward(a, V, c, E, h2, n, stop):
    y = np.zeros(n)
    y[n - 2] = 1.0e-30
    f0 = 1.0 + h2 * (a[n - 1] * (E - V[n - 1]) + c[n - 1])
    f1 = 1.0 + h2 * (a[n - 2] * (E - V[n - 2]) + c[n - 2])
    for i in range(n - 3, stop - 1, -1):
        f2 = 1.0 + h2 * (a[i] * (E - V[i]) + c[i])
        y[i] = ((12.0 - 10.0 * f1) * y[i + 1] - f0 * y[i + 2]) / f2
        if abs(y[i]) > 1e150:
            for j in range(i, n):
                y[j] *= 1e-150
        f0 = f1
        f1 = f2
    return y


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class TranslationalState:
    """A center-of-mass eigenstate sampled on a (prefix of a) shared grid.

    Bound states are normalized to one; free states per unit energy in Hz.
    """

    kind: StateKind
    internal_state: InternalState
    nu: Optional[int]
    energy: float
    grid: SpatialGrid
    psi: np.ndarray
    normalization: Normalization
    phase_shift: Optional[float] = None

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def padded(self, n: int) -> np.ndarray:
        if n <= self.psi.size:
            return self.psi[:n]
        out = np.zeros(n)
        out[: self.psi.size] = self.psi
        return out

    def node_count(self, rel_floor: float = 1e-7) -> int:
        p = self.psi[np.abs(self.psi) > rel_floor * np.max(np.abs(self.psi))]
        return int(np.count_nonzero(np.signbit(p[1:]) != np.signbit(p[:-1])))

    def norm(self) -> float:
        return float(np.sum(self.grid.weights * self.psi**2))


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    states: list
    max_nu: int
    energy_window: tuple

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.states])

    @property
    def nus(self) -> np.ndarray:
        return np.array([s.nu for s in self.states])

    def by_nu(self, nu: int) -> TranslationalState:
        for s in self.states:
            if s.nu == nu:
                return s
        raise KeyError(nu)

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, i):
        return self.states[i]


class _Problem:
    """Potential sampled on a full-extent grid plus the per-energy truncation rule."""

    def __init__(self, potential: Callable, atom: AtomSpecies, grid: SpatialGrid,
                 tail_factor: float = TAIL_FACTOR):
        self.potential = potential
        self.atom = atom
        self.grid = grid
        self.K = atom.kinetic_coefficient
        self.V = np.ascontiguousarray(np.asarray(potential(grid.x), dtype=float))
        self.a = np.ascontiguousarray(grid.jacobian**2 / self.K)
        self.c = np.ascontiguousarray(grid.half_schwarzian)
        self.h2 = grid.du**2 / 12.0
        self.tail_factor = tail_factor
        self._turning = getattr(potential, "turning_point_bound", None)

    def n_for(self, energy: float) -> int:
        if self._turning is None or energy >= 0:
            return self.grid.n
        x_turn = self._turning(energy)
        kappa = math.sqrt(-energy / self.K)
        x_max = max(self.tail_factor * x_turn, x_turn + TAIL_DECAY_LENGTHS / kappa)
        return max(16, min(self.grid.n, self.grid.index_at(x_max)))

    def n_free(self, energy: float) -> int:
        """Length over which a free state at ``energy`` is resolved by the grid."""
        step = np.sqrt(np.maximum(self.a * (energy - self.V), 0.0)) * self.grid.du
        bad = np.flatnonzero(step > FREE_MAX_PHASE_STEP)
        if bad.size == 0:
            return self.grid.n
        if bad[0] < 16:
            raise GridTooCoarse(f"free state at E = {energy:g} Hz not resolved; reduce du")
        return int(bad[0])

    def count(self, energy: float) -> int:
        n = self.n_for(energy)
        nodes, _, _ = _count_nodes(self.a, self.V, self.c, energy, self.h2, n)
        if nodes < 0:
            raise GridTooCoarse(f"Numerov weight non-positive at E = {energy:g} Hz; reduce du")
        return nodes

    def q(self, energy: float, n: int) -> np.ndarray:
        return self.a[:n] * (energy - self.V[:n]) + self.c[:n]


def _state_label(potential) -> InternalState:
    return getattr(potential, "internal_state", InternalState.GROUND)


@functools.lru_cache(maxsize=8)
def _default_grid(x_min=DEFAULT_X_MIN, x_cap=DEFAULT_X_CAP, du=DEFAULT_DU,
                  x_scale=DEFAULT_X_SCALE, x_knee=DEFAULT_X_KNEE) -> SpatialGrid:
    return SpatialGrid.mapped(x_min, x_cap, du, x_scale, x_knee)


def _bound_wavefunction(prob: _Problem, energy: float, nu: int) -> TranslationalState:
    n = prob.n_for(energy)
    grid = prob.grid.truncated(n)
    q = prob.q(energy, n)
    allowed = np.nonzero(q > 0)[0]
    if allowed.size == 0:
        raise ConvergenceFailure(f"no classically allowed region at E = {energy:g} Hz")
    i_turn = int(allowed[-1])
    # the outward sweep stops at the turning point; beyond it the solution diverges
    out = np.zeros(n)
    out[: i_turn + 1] = _outward(prob.a, prob.V, prob.c, energy, prob.h2, i_turn + 1)
    if i_turn >= n - 3:
        chi = out
    else:
        # match on the outermost lobe of the outward solution
        seg = out[: i_turn + 1]
        sign_change = np.nonzero(np.signbit(seg[1:]) != np.signbit(seg[:-1]))[0]
        start = int(sign_change[-1]) + 1 if sign_change.size else 1
        m = start + int(np.argmax(np.abs(seg[start:])))
        inw = _inward(prob.a, prob.V, prob.c, energy, prob.h2, n, m)
        if inw[m] == 0.0 or out[m] == 0.0:
            raise ConvergenceFailure(f"matching failed for nu = {nu}")
        chi = np.empty(n)
        chi[: m + 1] = out[: m + 1]
        chi[m + 1:] = inw[m + 1:] * (out[m] / inw[m])
    psi = np.sqrt(grid.jacobian) * chi
    norm = math.sqrt(np.sum(grid.weights * psi**2))
    psi /= norm
    # sign convention: outermost lobe positive
    big = np.nonzero(np.abs(psi) > 1e-3 * np.max(np.abs(psi)))[0]
    if psi[big[-1]] < 0:
        psi = -psi
    return TranslationalState(StateKind.BOUND, _state_label(prob.potential), nu, energy,
                              grid, psi, Normalization.UNIT)


def _level_tolerance(energy: float) -> float:
    return max(1e-13 * abs(energy), 1e-6)


def solve_bound(params, atom: AtomSpecies, window: Sequence[float], *,
                grid: Optional[SpatialGrid] = None, nus: Optional[Sequence[int]] = None,
                tail_factor: float = TAIL_FACTOR) -> SpectrumTable:
    """All bound levels with energy (Hz) inside ``window``.

    ``params`` is a PotentialParams or any vectorized callable x -> V(x) in Hz.
    Levels are located by node-count bisection; each wavefunction is then
    assembled from outward and inward Numerov sweeps matched on the outermost
    lobe.  ``nus`` restricts the solve to the given quantum numbers.
    """
    e_lo, e_hi = float(window[0]), float(window[1])
    if not e_lo < e_hi:
        raise DomainError("energy window must satisfy E1 < E2")
    if isinstance(params, PotentialParams):
        depth = well_geometry(params).depth_D
        e_lo = max(e_lo, -depth)
        e_hi = min(e_hi, -1e-9)
    grid = grid or _default_grid()
    prob = _Problem(params, atom, grid, tail_factor)

    if e_lo >= e_hi:
        return SpectrumTable([], -1, (float(window[0]), float(window[1])))
    samples_e = [e_lo, e_hi]
    samples_n = [prob.count(e_lo), prob.count(e_hi)]
    if samples_n[1] < samples_n[0]:
        raise GridTooCoarse("node count decreased with energy")
    wanted = range(samples_n[0], samples_n[1])
    if nus is not None:
        wanted = sorted(set(nus) & set(wanted))

    states = []
    for nu in wanted:
        # tightest bracket from all counts recorded so far
        i = bisect.bisect_right(samples_n, nu) - 1
        lo = samples_e[i]
        j = bisect.bisect_right(samples_n, nu)
        hi = samples_e[j]
        for _ in range(400):
            if hi - lo <= _level_tolerance(hi):
                break
            mid = 0.5 * (lo + hi)
            cnt = prob.count(mid)
            k = bisect.bisect_left(samples_e, mid)
            samples_e.insert(k, mid)
            samples_n.insert(k, cnt)
            if samples_n != sorted(samples_n):
                raise GridTooCoarse(f"non-monotone node count near E = {mid:g} Hz")
            if cnt <= nu:
                lo = mid
            else:
                hi = mid
        else:
            raise ConvergenceFailure(f"bisection did not converge for nu = {nu}")
        state = _bound_wavefunction(prob, 0.5 * (lo + hi), nu)
        if state.node_count() != nu:
            raise GridTooCoarse(
                f"level nu = {nu} has {state.node_count()} nodes; refine the grid")
        states.append(state)
    max_nu = states[-1].nu if states else -1
    return SpectrumTable(states, max_nu, (float(window[0]), float(window[1])))


def count_bound(params, atom: AtomSpecies, *, x_min: float = DEFAULT_X_MIN,
                x_far: float = COUNT_X_FAR, du: float = DEFAULT_DU) -> int:
    """Number of bound levels: nodes of the zero-energy solution on (x_min, infinity).

    Integration runs on a logarithmic grid to ``x_far``; beyond it the
    zero-energy solution is linear in x, so one more node is counted when the
    linear continuation crosses zero.
    """
    grid = SpatialGrid.mapped(x_min, x_far, du, None)
    prob = _Problem(params, atom, grid)
    nodes, y1, y0 = _count_nodes(prob.a, prob.V, prob.c, 0.0, prob.h2, grid.n)
    if nodes < 0:
        raise GridTooCoarse("Numerov weight non-positive at E = 0; reduce du")
    x1, x0 = grid.x[-1], grid.x[-2]
    p1 = math.sqrt(x1) * y1
    p0 = math.sqrt(x0) * y0
    if p1 != p0:
        x_zero = x1 - p1 * (x1 - x0) / (p1 - p0)
        if x_zero > x1:
            nodes += 1
    return nodes


def wkb_bound_count(params: PotentialParams, atom: AtomSpecies) -> float:
    """Semiclassical phase integral / pi over the region V < 0 (diagnostic only)."""
    geo = well_geometry(params)
    K = atom.kinetic_coefficient

    def k(x):
        return math.sqrt(max(-potential_value(params, x), 0.0) / K)

    # inner zero of V lies between the peak and the minimum
    x_in = brentq(lambda x: potential_value(params, x), geo.x_p, geo.x_m)
    x_split = 20.0 * geo.x_m
    phase, _ = quad(k, x_in, x_split, limit=500)
    # -C3/x^3 tail: integral of sqrt(C3/K) x^-3/2 from x_split to infinity
    phase += 2.0 * math.sqrt(params.C3 / K) / math.sqrt(x_split)
    return phase / math.pi


def potential_value(params, x: float) -> float:
    return float(params(np.asarray(x, dtype=float)))


# ---------------------------------------------------------------------------
# free states

_D1_STENCIL = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0


@numba.njit(cache=True)
def _numerov_uniform(f, h, y0, y1):
    """Numerov march of y'' = f y on a uniform grid from two starting values."""
    n = f.size
    y = np.empty(n)
    y[0] = y0
    y[1] = y1
    w = h * h / 12.0
    for i in range(2, n):
        y[i] = (2.0 * (1.0 + 5.0 * w * f[i - 1]) * y[i - 1]
                - (1.0 - w * f[i - 2]) * y[i - 2]) / (1.0 - w * f[i])
    return y


def _continue_outward(params, energy, K, x0, x_far, y0, k_inf, kh=0.02):
    """Carry (psi, psi') from x0 to about x_far on a uniform grid; returns the end state."""
    h = kh / k_inf
    n = int(math.ceil((x_far - x0) / h)) + 8
    x = x0 + h * np.arange(n)
    f = (np.asarray(params(x), dtype=float) - energy) / K
    # fourth-order Taylor start from psi, psi' and psi'' = f psi
    df = (f[1] - f[0]) / h
    p, dp = y0
    y1 = (p + h * dp + 0.5 * h * h * f[0] * p
          + h**3 / 6.0 * (df * p + f[0] * dp) + h**4 / 24.0 * (f[0] ** 2 * p + 2.0 * df * dp))
    y = _numerov_uniform(f, h, p, y1)
    i = n - 4
    return np.array([y[i], np.dot(_D1_STENCIL, y[i - 3: i + 4]) / h]), x[i]


def solve_free(params, atom: AtomSpecies, energy: float, *,
               grid: Optional[SpatialGrid] = None, asymptotic_ratio: float = 1e-6,
               internal_state=None) -> TranslationalState:
    """Scattering state at ``energy`` (Hz), normalized per unit energy in Hz.

    Beyond the grid the solution is carried on a uniform mesh until
    |V| < asymptotic_ratio * E, where the amplitude invariant k psi^2 + psi'^2/k
    fixes the normalization.  Asymptotically psi -> sqrt(1/(pi K k)) sin(kx + delta).
    """
    grid = grid or _default_grid()
    return _free_state(_Problem(params, atom, grid), energy, asymptotic_ratio, internal_state)


def _free_state(prob: _Problem, energy: float, asymptotic_ratio: float = 1e-6,
                internal_state=None) -> TranslationalState:
    if not energy > 0:
        raise DomainError("free states need energy > 0")
    params = prob.potential
    K = prob.K
    n = prob.n_free(energy)
    grid = prob.grid.truncated(n)
    chi = _outward(prob.a, prob.V, prob.c, energy, prob.h2, n)
    psi = np.sqrt(grid.jacobian) * chi
    # derivative at index n-4 by a sixth-order central stencil in u
    i0 = n - 4
    dpsi_du = np.dot(_D1_STENCIL, psi[i0 - 3: i0 + 4]) / grid.du
    x0 = grid.x[i0]
    y0 = np.array([psi[i0], dpsi_du / grid.jacobian[i0]])
    scale = max(abs(y0[0]), abs(y0[1]) / math.sqrt(energy / K))
    y0 = y0 / scale
    psi = psi / scale

    def V(x):
        return potential_value(params, x)

    k_inf = math.sqrt(energy / K)
    x_far = x0
    if abs(V(x0)) > asymptotic_ratio * energy:
        if isinstance(params, PotentialParams):
            x_far = (params.C3 / (asymptotic_ratio * energy)) ** (1.0 / 3.0)
        else:
            while abs(V(x_far)) > asymptotic_ratio * energy and x_far < 1e9:
                x_far *= 2.0

    if x_far > x0:
        y_far, x_far = _continue_outward(params, energy, K, x0, x_far, y0, k_inf)
    else:
        y_far = y0
    k_loc = math.sqrt((energy - V(x_far)) / K)
    invariant = k_loc * y_far[0] ** 2 + y_far[1] ** 2 / k_loc
    psi = psi / math.sqrt(math.pi * K * invariant)

    phase = math.atan2(k_loc * y_far[0], y_far[1]) - k_inf * x_far
    if isinstance(params, PotentialParams):
        phase += params.C3 / (4.0 * K * k_inf * x_far**2)
    delta = (phase + 0.5 * math.pi) % math.pi - 0.5 * math.pi
    label = internal_state or _state_label(params)
    return TranslationalState(StateKind.FREE, InternalState(label), None, float(energy), grid,
                              psi, Normalization.PER_UNIT_ENERGY, phase_shift=delta)


def continuum_mesh(e_min: float = 0.1, e_max: float = 1e10, n: int = 257):
    """Log-spaced free-state energies (Hz) and weights for integrals over E.

    The weights are the trapezoid rule in ln E applied to E * f(E), which
    follows the roughly scale-free structure of Franck-Condon densities.
    """
    if not (0 < e_min < e_max) or n < 2:
        raise DomainError("need 0 < e_min < e_max and at least two points")
    e = np.geomspace(e_min, e_max, n)
    h = math.log(e_max / e_min) / (n - 1)
    w = e * h
    w[0] *= 0.5
    w[-1] *= 0.5
    return e, w


def solve_continuum(params, atom: AtomSpecies, energies, *, grid=None):
    """Free states at each energy, sharing one sampled potential."""
    prob = _Problem(params, atom, grid or _default_grid())
    return [_free_state(prob, float(e)) for e in energies]


def iter_continuum(params, atom: AtomSpecies, energies, *, grid=None):
    """Lazy variant of ``solve_continuum`` for dense meshes that do not fit in memory."""
    prob = _Problem(params, atom, grid or _default_grid())
    for e in energies:
        yield _free_state(prob, float(e))


# ---------------------------------------------------------------------------
# diagnostics


def inner_product(a: TranslationalState, b: TranslationalState) -> float:
    n = common_length(a.grid, b.grid)
    grid = a.grid if a.grid.n == n else b.grid
    return float(np.sum(grid.weights * a.padded(n) * b.padded(n)))


def orthonormality_report(table) -> float:
    """Worst |<nu|nu'> - delta_nu,nu'| over all pairs of the table's states."""
    states = list(table.states if isinstance(table, SpectrumTable) else table)
    if not states:
        raise DomainError("empty table")
    n = common_length(*[s.grid for s in states])
    grid = max((s.grid for s in states), key=lambda g: g.n)
    m = np.array([s.padded(n) for s in states])
    gram = (m * grid.weights) @ m.T
    return float(np.max(np.abs(gram - np.eye(len(states)))))


def kinetic_expectation(state: TranslationalState, params) -> float:
    """<T> = E - <V> for a bound state (Hz)."""
    v = np.asarray(params(state.grid.x), dtype=float)
    return state.energy - float(np.sum(state.grid.weights * v * state.psi**2))
