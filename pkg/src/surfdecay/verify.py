"""Self-checks: reference values, independent oracles and invariants.

Every check yields one ``Check`` row.  The report is deterministic: fixed
check order, fixed random seeds and fixed number formatting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .dynamics import (DensityMatrix, DriveField, LevelBasis, RabiMatrix, decay_generator,
                       driven_generator, evolve, two_level_steady_state)
from .overlaps import franck_condon_factors, momentum_overlap, overlap_F
from .physical_model import well_geometry
from .pipeline import Pipeline, lifetime_fit
from .rates import (RateQuadrature, RateTensor, build_rate_tensor, evanescent_coeffs, gamma_ab,
                    gamma_x, interference_coeffs, linewidth, rate_matrix, wave_number,
                    free_space_tensor, free_space_tensor_direct)
from .spectrum import SpatialGrid, iter_continuum, continuum_mesh, solve_bound

SEED = 20240611
HEADER = "name,expected,got,tolerance,status"


@dataclass(frozen=True)
class Check:
    name: str
    expected: str
    got: float
    tolerance: str
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name},{self.expected},{self.got:.12g},{self.tolerance},{status}"


def _near(name, expected, got, tol, relative=False) -> Check:
    err = abs(got - expected) / abs(expected) if relative else abs(got - expected)
    kind = "rel" if relative else "abs"
    ok = bool(np.isfinite(got)) and err <= tol
    return Check(name, f"{expected:.12g}", float(got), f"{kind}<={tol:g}", ok)


def _bounded(name, got, limit, expected="0") -> Check:
    """A residual that must stay at or below ``limit``."""
    return Check(name, expected, float(got), f"<={limit:g}", bool(np.isfinite(got)) and got <= limit)


def _interval(name, got, lo, hi) -> Check:
    return Check(name, f"[{lo:g};{hi:g}]", float(got), "interval", bool(lo <= got <= hi))


def _rel(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


# ---------------------------------------------------------------------------
# individual groups


def check_potential(p: Pipeline) -> Iterator[Check]:
    """Repulsion parameters derived from the silica-cesium inputs and the round trip."""
    cfg = p.config
    for label, spec, a_ref in (("g", cfg.ground, 1.6e18), ("e", cfg.excited, 3.17e18)):
        par = spec.params
        yield _interval(f"alpha_{label}_per_nm", par.alpha, 52.0, 55.0)
        yield _near(f"A_{label}_Hz", a_ref, par.A, 0.10, relative=True)
        if spec.derived_from is not None:
            _, depth, x_m = spec.derived_from
            geo = well_geometry(par)
            yield _near(f"depth_roundtrip_{label}", 1.0, geo.depth_D / depth, 1e-9)
            yield _near(f"minimum_roundtrip_{label}", 1.0, geo.x_m / x_m, 1e-9)


def check_counts(p: Pipeline) -> Iterator[Check]:
    n_e, n_g = p.counts
    yield _near("bound_count_excited", 437, n_e, 3)
    yield _near("bound_count_ground", 311, n_g, 3)


def check_rest_atom(p: Pipeline) -> Iterator[Check]:
    w0 = p.atom.omega0
    k0 = wave_number(w0)
    n1 = p.config.n1

    def at(kx):
        return gamma_x(w0, kx / k0, n1, p.quad)

    yield _near("gamma_x_kx0", 1.6, at(0.0)["total"], 0.05)
    for kx in (0.5, 2.0, 5.0, 8.0):
        yield _bounded(f"interference_negative_kx{kx:g}", at(kx)["interference_part"], 0.0,
                       expected="<0")
    kx = np.linspace(0.0, p.config.rates.kx_max, p.config.rates.kx_points)
    ev = gamma_x(w0, kx / k0, n1, p.quad)["evanescent_part"]
    yield Check("evanescent_positive_min", ">0", float(ev.min()), ">0", bool(ev.min() > 0))
    yield _near("gamma_x_kx20", 1.0, at(20.0)["total"], 0.05)


def check_fresnel(p: Pipeline) -> Iterator[Check]:
    """Reflection and transmission weights against textbook Fresnel amplitudes."""
    n1 = p.config.n1
    n2 = n1 * n1
    rng = np.random.default_rng(SEED)
    xi = rng.uniform(0.0, 1.0, 20)
    eta = np.sqrt(n2 - 1.0 + xi**2)
    r_p = (n2 * xi - eta) / (n2 * xi + eta)
    r_perp, _ = interference_coeffs(xi, n1)
    yield _bounded("fresnel_reflection_identity", np.max(np.abs(r_perp - (1 - xi**2) * r_p)), 1e-12)
    xi = rng.uniform(0.0, math.sqrt(n2 - 1.0), 20)
    eta = np.sqrt(n2 - 1.0 - xi**2)
    t_p = 2.0 * n1 * eta / (eta + 1j * n2 * xi)
    t_perp, _ = evanescent_coeffs(xi, n1)
    ref = xi / (2.0 * eta) * (1.0 + xi**2) * np.abs(t_p) ** 2
    yield _bounded("fresnel_transmission_identity", np.max(np.abs(t_perp - ref)), 1e-12)


def check_quadrature(p: Pipeline) -> Iterator[Check]:
    """Doubling the Gauss-Legendre order must leave every rate unchanged."""
    fine = RateQuadrature.build(p.config.n1, 2 * p.order)
    w0 = p.atom.omega0
    k0 = wave_number(w0)
    kx = np.linspace(0.0, p.config.rates.kx_max, 61)
    orient = p.config.rates.orientation
    g1 = gamma_x(w0, kx / k0, p.config.n1, p.quad, orient)["total"]
    g2 = gamma_x(w0, kx / k0, p.config.n1, fine, orient)["total"]
    yield _bounded("quadrature_doubling_gamma_x", _rel(g1, g2), 1e-6)
    ex = list(p.window_excited)
    gr = list(p.window_ground)
    if ex and gr:
        pick_a = [ex[0], ex[len(ex) // 2], ex[-1]]
        pick_b = [gr[0], gr[len(gr) // 2], gr[-1]]
        r1 = rate_matrix(pick_a, pick_b, atom=p.atom, quad=p.quad, orientation=orient)
        r2 = rate_matrix(pick_a, pick_b, atom=p.atom, quad=fine, orientation=orient)
        yield _bounded("quadrature_doubling_gamma_ab", _rel(r1, r2), 1e-6)
        ground = p.shallow_ground
        l1 = [linewidth(a, ground, atom=p.atom, quad=p.quad, orientation=orient) for a in pick_a]
        l2 = [linewidth(a, ground, atom=p.atom, quad=fine, orientation=orient) for a in pick_a]
        yield _bounded("quadrature_doubling_gamma_a", _rel(l1, l2), 1e-6)


def _shallow_linewidths(p: Pipeline) -> dict:
    ground = p.shallow_ground
    return {a.nu: linewidth(a, ground, **p._rate_kwargs()) for a in p.window_excited}


def check_shallow(p: Pipeline) -> Iterator[Check]:
    widths = _shallow_linewidths(p)
    if 429 in widths:
        yield _near("gamma_a_nu429", 1.0, widths[429], 0.05)
    if 385 in widths:
        yield _near("gamma_a_nu385", 1.53, widths[385], 0.08)
    nus = sorted(nu for nu in widths if 385 <= nu <= 429)
    if len(nus) > 1:
        vals = np.array([widths[nu] for nu in nus])
        # gamma_a must fall as nu rises; count any upward step larger than noise
        rise = float(np.max(np.diff(vals)))
        yield _bounded("gamma_a_monotone_max_rise", max(rise, 0.0), 0.01)


def check_deep(p: Pipeline) -> Iterator[Check]:
    if not p.deep_excited or p.deep_excited[0].nu != 0:
        return
    a = p.deep_excited[0]
    width = linewidth(a, p.deep_ground, **p._rate_kwargs())
    yield _near("gamma_a_nu0", 0.28, width, 0.03)
    yield _near("suppression_factor_nu0", 3.6, 1.0 / width, 0.15, relative=True)
    total = float(np.sum(rate_matrix([a], p.deep_ground, **p._rate_kwargs())))
    yield _near("bound_sum_over_linewidth_nu0", 1.0, total / width, 0.05)


def check_overlap_oracle(p: Pipeline) -> Iterator[Check]:
    """Position-space kernel against the momentum-space convolution, 20 random pairs."""
    ex = list(p.window_excited)
    gr = list(p.window_ground)
    if not (ex and gr):
        return
    rng = np.random.default_rng(SEED + 1)
    k0 = p.atom.k0
    worst = 0.0
    for _ in range(20):
        a = ex[rng.integers(len(ex))]
        b = gr[rng.integers(len(gr))]
        worst = max(worst, abs(overlap_F(a, b, k0) - momentum_overlap(a, b, k0)))
    yield _bounded("overlap_momentum_oracle_max_abs", worst, 1e-5)


def check_free_space_oracle(p: Pipeline) -> Iterator[Check]:
    """Single xi-integral against the sinc double integral on 10 random quadruples."""
    ex = p.deep_excited
    gr = p.deep_ground
    if len(ex) < 2 or len(gr) < 2:
        return
    rng = np.random.default_rng(SEED + 2)
    k0 = p.atom.k0
    free = RateQuadrature.build(1.0, p.order)
    worst = 0.0
    for _ in range(10):
        a, a2 = (ex[i] for i in rng.integers(len(ex), size=2))
        b, b2 = (gr[i] for i in rng.integers(len(gr), size=2))
        single = free_space_tensor(a, a2, b, b2, k0, free)
        double = free_space_tensor_direct(a, a2, b, b2, k0)
        worst = max(worst, abs(single - double))
    yield _bounded("free_space_double_integral_max_abs", worst, 1e-6)


def sum_rule_table(p: Pipeline, nus=(425, 426, 427, 428, 429)) -> dict:
    """Per excited level, summed over bound plus continuum ground levels.

    Values are (sum of Franck-Condon factors, sum of free-space f_aabb,
    sum of gamma_ab, gamma_a from the effective-partner route).
    """
    levels = [a for a in p.window_excited if a.nu in nus]
    if not levels:
        return {}
    s = p.config.solver
    kw = p._rate_kwargs()
    k0 = p.atom.k0
    free = RateQuadrature.build(1.0, p.order)
    bound = p.shallow_ground
    fc = np.array([franck_condon_factors(a, bound).sum() for a in levels])
    f_sum = np.array([sum(free_space_tensor(a, a, b, b, k0, free) for b in bound)
                      for a in levels])
    rates = rate_matrix(levels, bound, **kw).sum(axis=1)
    e, w = continuum_mesh(s.continuum_Hz[0], s.continuum_Hz[1], s.continuum_points)
    for j, b in enumerate(iter_continuum(p.V_g, p.atom, e, grid=p.grid)):
        fc += w[j] * franck_condon_factors(b, levels)
        f_sum += w[j] * np.array([free_space_tensor(a, a, b, b, k0, free) for a in levels])
        rates += w[j] * np.array([gamma_ab(a, b, **kw) for a in levels])
    widths = np.array([linewidth(a, bound, **kw) for a in levels])
    return {a.nu: (fc[i], f_sum[i], rates[i], widths[i]) for i, a in enumerate(levels)}


def check_sum_rules(p: Pipeline) -> Iterator[Check]:
    table = sum_rule_table(p)
    if not table:
        return
    yield _bounded("completeness_max_abs_error",
                   max(abs(v[0] - 1.0) for v in table.values()), 1e-3)
    yield _bounded("free_space_completeness_max_abs_error",
                   max(abs(v[1] - 1.0) for v in table.values()), 1e-3)
    yield _bounded("rate_sum_over_linewidth_max_rel_error",
                   max(abs(v[2] / v[3] - 1.0) for v in table.values()), 0.02)


def check_dynamics(p: Pipeline) -> Iterator[Check]:
    d = p.config.dynamics
    gamma0 = d.gamma0_s
    basis = p.dynamics_basis()
    single = LevelBasis(basis.excited[:1], basis.ground, basis.omega0, basis.ground_weights)
    rates = build_rate_tensor(single.excited, single.ground, ground_weights=single.ground_weights,
                              **p._rate_kwargs())
    rate = float(rates.gamma_a[0]) * gamma0
    times = np.linspace(0.0, 5.0 / rate, 41)
    traj = evolve(DensityMatrix.pure_level(single, 0), times[-1], rates, gamma0=gamma0,
                  tol=d.tol, t_eval=times)
    fitted = lifetime_fit(traj.times, traj.populations[:, 0])
    yield _bounded("single_level_log_slope_rel_error", abs(fitted / rate - 1.0), 1e-4)
    yield _bounded("trace_drift_5_lifetimes", traj.audit["trace_drift"], 1e-8)

    # two-level reduction with a frozen center of mass (F_ab = 1)
    pair = LevelBasis(basis.excited[:1], basis.ground[:1], basis.omega0)
    unit = RateTensor(pair.excited, pair.ground, np.ones((1, 1, 1, 1)))
    a, b = pair.excited[0], pair.ground[0]
    gamma = gamma0
    rabi = 0.1 * gamma
    detuning = 0.3 * gamma  # angular
    omega_l = pair.omega0 + a.energy - b.energy + detuning / (2.0 * math.pi)
    drive = DriveField.plane_wave(rabi, omega_l, 1)
    t_end = 40.0 / gamma
    out = evolve(DensityMatrix.pure_level(pair, 1), t_end, unit, drives=[drive],
                 rabi=RabiMatrix(np.full((1, 1, 1), rabi, dtype=complex)), gamma0=gamma0,
                 tol=1e-10, t_eval=[t_end])
    steady = two_level_steady_state(rabi, detuning, gamma)
    yield _near("two_level_steady_state", steady, out.populations[-1, 0], 1e-4)

    rng = np.random.default_rng(SEED + 3)
    m = rng.normal(size=(single.dim, single.dim)) + 1j * rng.normal(size=(single.dim, single.dim))
    rho = m @ m.conj().T
    rho = DensityMatrix(single, rho / np.trace(rho))
    plain = decay_generator(rho, 1e-7, rates, gamma0=gamma0)
    off = driven_generator(rho, 1e-7, rates, [DriveField.plane_wave(0.0, p.atom.omega0)],
                           gamma0=gamma0)
    yield _bounded("drive_off_generator_max_rel",
                   float(np.max(np.abs(off - plain)) / np.max(np.abs(plain))), 1e-15)


def check_grid(p: Pipeline, picks=(0, 100, 300)) -> Iterator[Check]:
    """Halving the grid step moves eigenvalues by less than ten eigenvalue tolerances."""
    s = p.config.solver
    fine = SpatialGrid.mapped(s.x_min_nm, s.x_cap_nm, 0.5 * s.du, s.x_scale_nm, s.x_knee_nm)
    worst = 0.0
    for params, shallow in ((p.V_e, p.window_excited), (p.V_g, p.window_ground)):
        nus = list(picks) + ([shallow.states[0].nu, shallow.states[-1].nu] if len(shallow) else [])
        window = (-1e18, 0.0)
        coarse = solve_bound(params, p.atom, window, grid=p.grid, nus=nus)
        refined = solve_bound(params, p.atom, window, grid=fine, nus=nus)
        for c, f in zip(coarse, refined):
            tol = max(1e-6 * abs(f.energy), 1e3)
            worst = max(worst, abs(c.energy - f.energy) / tol)
    yield _bounded("grid_halving_shift_over_tolerance", worst, 10.0)


GROUPS: dict[str, Callable[[Pipeline], Iterator[Check]]] = {
    "potential": check_potential,
    "counts": check_counts,
    "rest_atom": check_rest_atom,
    "fresnel": check_fresnel,
    "quadrature": check_quadrature,
    "shallow": check_shallow,
    "deep": check_deep,
    "overlap_oracle": check_overlap_oracle,
    "free_space_oracle": check_free_space_oracle,
    "sum_rules": check_sum_rules,
    "dynamics": check_dynamics,
    "grid": check_grid,
}


def run_checks(pipeline: Pipeline, groups=None) -> list:
    names = list(GROUPS) if groups is None else list(groups)
    out = []
    for name in names:
        out.extend(GROUPS[name](pipeline))
    return out
