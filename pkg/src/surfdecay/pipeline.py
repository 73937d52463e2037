"""End-to-end computations driven by a RunConfig.

Each expensive intermediate (grids, level tables, quadrature) is computed once
per Pipeline and shared by every dataset that needs it.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .dynamics import (DensityMatrix, DriveField, LevelBasis, RabiMatrix, Trajectory, evolve)
from .errors import ConfigError
from .physical_model import transition_frequency, well_geometry
from .rates import (RateQuadrature, build_rate_tensor, gamma_x, linewidth, rate_matrix,
                    wave_number)
from .spectrum import (SpatialGrid, SpectrumTable, continuum_mesh, count_bound, iter_continuum,
                       solve_bound, solve_continuum)

DEEP_WINDOW = (-1e18, 0.0)


@dataclass
class Dataset:
    name: str
    header: tuple
    rows: list


class Pipeline:
    def __init__(self, config: RunConfig, quadrature_order: int = None):
        self.config = config
        self.atom = config.atom
        self.V_e = config.excited.params
        self.V_g = config.ground.params
        self.order = quadrature_order or config.rates.quadrature_order

    # -- shared intermediates -------------------------------------------------

    @functools.cached_property
    def grid(self) -> SpatialGrid:
        s = self.config.solver
        return SpatialGrid.mapped(s.x_min_nm, s.x_cap_nm, s.du, s.x_scale_nm, s.x_knee_nm)

    @functools.cached_property
    def quad(self) -> RateQuadrature:
        return RateQuadrature.build(self.config.n1, self.order)

    @functools.cached_property
    def counts(self) -> tuple:
        s = self.config.solver
        return (count_bound(self.V_e, self.atom, x_min=s.x_min_nm, du=s.du),
                count_bound(self.V_g, self.atom, x_min=s.x_min_nm, du=s.du))

    def _window(self, params) -> SpectrumTable:
        return solve_bound(params, self.atom, self.config.solver.window_Hz, grid=self.grid)

    @functools.cached_property
    def window_excited(self) -> SpectrumTable:
        return self._window(self.V_e)

    @functools.cached_property
    def window_ground(self) -> SpectrumTable:
        return self._window(self.V_g)

    @functools.cached_property
    def shallow_ground(self) -> list:
        """Ground levels from shallow_ground_nu_min up to threshold: partners of shallow a."""
        first = self.config.solver.shallow_ground_nu_min
        top = self.counts[1]
        if first >= top:
            return []
        return list(solve_bound(self.V_g, self.atom, DEEP_WINDOW, grid=self.grid,
                                nus=range(first, top)))

    @functools.cached_property
    def deep_excited(self) -> list:
        n = min(self.config.solver.deep_excited_levels, self.counts[0])
        return list(solve_bound(self.V_e, self.atom, DEEP_WINDOW, grid=self.grid, nus=range(n)))

    @functools.cached_property
    def deep_ground(self) -> list:
        n = min(self.config.solver.deep_ground_levels, self.counts[1])
        return list(solve_bound(self.V_g, self.atom, DEEP_WINDOW, grid=self.grid, nus=range(n)))

    def _rate_kwargs(self) -> dict:
        return {"atom": self.atom, "quad": self.quad, "orientation": self.config.rates.orientation}

    @property
    def rate_unit(self) -> tuple:
        """(factor, suffix): rates in gamma_0 units unless an absolute gamma_0 is configured."""
        g0 = self.config.rates.gamma0_absolute_s
        return (1.0, "over_gamma0") if g0 is None else (g0, "per_s")

    # -- potential -------------------------------------------------------------

    def potential_rows(self, n: int = 400, x_max: float = 1000.0) -> Dataset:
        x = np.geomspace(self.config.solver.x_min_nm, x_max, n)
        ve = self.V_e(x)
        vg = self.V_g(x)
        wx = transition_frequency(x, self.V_e, self.V_g, self.atom)
        rows = list(zip(x, ve, vg, wx))
        return Dataset("potentials", ("x_nm", "V_e_Hz", "V_g_Hz", "omega_x_Hz"), rows)

    def params_summary(self) -> list:
        lines = [f"n1 = {self.config.n1:.12g}",
                 f"omega0_Hz = {self.atom.omega0:.12g}",
                 f"k0_per_nm = {self.atom.k0:.12g}"]
        for label, spec in (("e", self.config.excited), ("g", self.config.ground)):
            p = spec.params
            lines += [f"C3_{label}_Hz_nm3 = {p.C3:.12g}",
                      f"A_{label}_Hz = {p.A:.12g}",
                      f"alpha_{label}_per_nm = {p.alpha:.12g}"]
            geo = well_geometry(p)
            lines += [f"x_p_{label}_nm = {geo.x_p:.12g}",
                      f"x_m_{label}_nm = {geo.x_m:.12g}",
                      f"x_a_{label}_nm = {geo.x_a:.12g}",
                      f"D_{label}_Hz = {geo.depth_D:.12g}",
                      f"barrier_{label}_Hz = {geo.peak_value:.12g}"]
        return lines

    # -- figure datasets -------------------------------------------------------

    def fig6(self) -> Dataset:
        r = self.config.rates
        kx = np.linspace(0.0, r.kx_max, r.kx_points)
        k0 = wave_number(self.atom.omega0)
        out = gamma_x(self.atom.omega0, kx / k0, self.config.n1, self.quad, r.orientation)
        rows = list(zip(kx, out["total"], out["interference_part"], out["evanescent_part"]))
        return Dataset("fig6_gamma_x", ("kx", "gamma_over_gammaf", "interference_part",
                                        "evanescent_part"), rows)

    def fig8(self) -> Dataset:
        r = self.config.rates
        x = np.geomspace(r.fig8_x_nm[0], r.fig8_x_nm[1], r.fig8_points)
        wx = transition_frequency(x, self.V_e, self.V_g, self.atom)
        vals = np.empty_like(x)
        for i, (xi, w) in enumerate(zip(x, wx)):
            vals[i] = gamma_x(w, xi, self.config.n1, self.quad, r.orientation)["total"]
        vals *= (wx / self.atom.omega0) ** 3
        factor, unit = self.rate_unit
        return Dataset("fig8_gamma_x_shifted", ("x_nm", f"gamma_x_shifted_{unit}"),
                       list(zip(x, vals * factor)))

    def _pair_rates(self, name, excited, ground) -> Dataset:
        factor, unit = self.rate_unit
        g = rate_matrix(excited, ground, **self._rate_kwargs()) * factor
        rows = [(a.nu, b.nu, g[i, j]) for i, a in enumerate(excited) for j, b in enumerate(ground)]
        return Dataset(name, ("nu_a", "nu_b", f"gamma_ab_{unit}"), rows)

    def _linewidths(self, name, excited, ground) -> Dataset:
        factor, unit = self.rate_unit
        eff = self.config.rates.effective_frequency
        rows = [(a.nu, factor * linewidth(a, ground, effective_frequency=eff, **self._rate_kwargs()))
                for a in excited]
        return Dataset(name, ("nu_a", f"gamma_a_{unit}"), rows)

    def fig9(self) -> Dataset:
        return self._pair_rates("fig9_gamma_ab_shallow", list(self.window_excited),
                                list(self.window_ground))

    def fig10(self) -> Dataset:
        return self._linewidths("fig10_gamma_a_shallow", list(self.window_excited),
                                self.shallow_ground)

    def fig11(self) -> Dataset:
        s = self.config.solver
        e, _ = continuum_mesh(s.continuum_Hz[0], s.continuum_Hz[1], self.config.rates.fig11_points)
        excited = list(self.window_excited)
        factor, unit = self.rate_unit
        g = rate_matrix(excited, iter_continuum(self.V_g, self.atom, e, grid=self.grid),
                        **self._rate_kwargs()) * factor
        rows = [(a.nu, e[j], g[i, j]) for i, a in enumerate(excited) for j in range(e.size)]
        return Dataset("fig11_gamma_ab_free", ("nu_a", "E_bf_Hz", f"density_{unit}_per_Hz"), rows)

    def fig12(self) -> Dataset:
        return self._pair_rates("fig12_gamma_ab_deep", self.deep_excited, self.deep_ground)

    def fig13(self) -> Dataset:
        return self._linewidths("fig13_gamma_a_deep", self.deep_excited, self.deep_ground)

    def datasets(self):
        for name in self.config.figures:
            yield getattr(self, name)()

    # -- dynamics --------------------------------------------------------------

    def dynamics_basis(self) -> LevelBasis:
        d = self.config.dynamics
        ex = solve_bound(self.V_e, self.atom, DEEP_WINDOW, grid=self.grid, nus=d.excited_nu)
        gr = solve_bound(self.V_g, self.atom, DEEP_WINDOW, grid=self.grid, nus=d.ground_nu)
        missing = sorted(set(d.excited_nu) - set(ex.nus)) + sorted(set(d.ground_nu) - set(gr.nus))
        if missing:
            raise ConfigError(f"dynamics basis requests levels that do not exist: {missing}")
        ground = list(gr)
        weights = [1.0] * len(ground)
        if d.continuum_points:
            e, w = continuum_mesh(d.continuum_Hz[0], d.continuum_Hz[1], d.continuum_points)
            ground += solve_continuum(self.V_g, self.atom, e, grid=self.grid)
            weights += list(w)
        return LevelBasis(list(ex), ground, self.atom.omega0, np.array(weights))

    def run_dynamics(self, basis: LevelBasis = None) -> Trajectory:
        d = self.config.dynamics
        basis = basis or self.dynamics_basis()
        rates = build_rate_tensor(basis.excited, basis.ground, ground_weights=basis.ground_weights,
                                  **self._rate_kwargs())
        drives = [DriveField(dr.rabi_scale_per_s, dr.omega_l_Hz, dr.beta_per_nm) for dr in d.drives]
        rabi = RabiMatrix.build(basis, drives) if drives else None
        if d.t_final_s is not None:
            t_final = d.t_final_s
        else:
            gamma = float(np.max(rates.gamma_a)) * d.gamma0_s
            t_final = d.t_final_lifetimes / gamma if gamma > 0 else 0.0
        rho0 = DensityMatrix.pure_level(basis, 0)
        times = np.linspace(0.0, t_final, d.samples) if t_final > 0 else np.zeros(1)
        return evolve(rho0, t_final, rates, drives=drives, rabi=rabi, gamma0=d.gamma0_s,
                      tol=d.tol, t_eval=times, secular=d.secular)

    def trajectory_rows(self, traj: Trajectory) -> Dataset:
        labels = traj.basis.labels()
        index = {lab: i for i, lab in enumerate(labels)}
        pairs = []
        for l1, l2 in self.config.dynamics.coherences:
            if l1 not in index or l2 not in index:
                raise ConfigError(f"dynamics.coherences names unknown level {l1!r} or {l2!r}; "
                                  f"known: {labels}")
            pairs.append((index[l1], index[l2]))
        header = ("t_s",) + tuple(f"pop_{lab}" for lab in labels) \
            + tuple(f"abs_rho_{labels[i]}_{labels[j]}" for i, j in pairs)
        pops = traj.populations
        rows = []
        for n, t in enumerate(traj.times):
            coh = [abs(traj.states[n, i, j]) for i, j in pairs]
            rows.append((t, *pops[n], *coh))
        return Dataset("trajectory", header, rows)


def lifetime_fit(times: np.ndarray, population: np.ndarray) -> float:
    """Decay rate from a least-squares fit of ln(population) against time."""
    keep = population > 0
    slope = np.polyfit(times[keep], np.log(population[keep]), 1)[0]
    return -float(slope)


def mean_abs_log_slope_error(times, population, rate) -> float:
    fitted = lifetime_fit(times, population)
    return abs(fitted - rate) / rate if rate else math.inf
