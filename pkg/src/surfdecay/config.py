"""Run configuration: TOML file -> validated, typed settings."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, DomainError, GeometryViolation
from .physical_model import (CONSTANTS, KHZ_UM3, THZ, AtomSpecies, InternalState, PotentialParams,
                             derive_repulsion_params)
from .rates import Orientation

FIGURES = ("fig6", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13")


def _section(raw: dict, name: str) -> dict:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{name}] must be a table")
    return value


def _number(table: dict, key: str, where: str, default=None, *, lo=None, hi=None,
            lo_open=False, integer=False):
    if key not in table:
        if default is None:
            raise ConfigError(f"{where}.{key} is required")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{where}.{key} must be finite")
    if lo is not None and (value < lo or (lo_open and value == lo)):
        raise ConfigError(f"{where}.{key} = {value} is below the allowed range ({'>' if lo_open else '>='} {lo})")
    if hi is not None and value > hi:
        raise ConfigError(f"{where}.{key} = {value} is above the allowed range (<= {hi})")
    return int(value) if integer else float(value)


def _pair(table: dict, key: str, where: str, default):
    value = table.get(key, default)
    if not (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ConfigError(f"{where}.{key} must be a two-element numeric list")
    lo, hi = float(value[0]), float(value[1])
    if not lo < hi:
        raise ConfigError(f"{where}.{key} must be increasing, got {value!r}")
    return lo, hi


def _check_keys(table: dict, allowed: set, where: str):
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")


@dataclass(frozen=True)
class PotentialSpec:
    internal_state: InternalState
    params: PotentialParams
    derived_from: Optional[tuple] = None  # (C3, D, x_m) when derived


def _potential(raw: dict, state: InternalState) -> PotentialSpec:
    where = f"potential.{state.value}"
    table = raw.get("potential", {}).get(state.value)
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] is required")
    _check_keys(table, {"C3_kHz_um3", "D_THz", "x_m_nm", "A_Hz", "alpha_per_nm"}, where)
    c3 = _number(table, "C3_kHz_um3", where, lo=0.0, lo_open=True) * KHZ_UM3
    derived = {"D_THz", "x_m_nm"} & set(table)
    direct = {"A_Hz", "alpha_per_nm"} & set(table)
    if derived and direct:
        raise ConfigError(f"[{where}] mixes derived (D_THz, x_m_nm) and direct (A_Hz, alpha_per_nm) "
                          "parameters; give exactly one set")
    if derived:
        depth = _number(table, "D_THz", where, lo=0.0, lo_open=True) * THZ
        x_m = _number(table, "x_m_nm", where, lo=0.0, lo_open=True)
        try:
            params = derive_repulsion_params(c3, depth, x_m, state)
        except GeometryViolation as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        return PotentialSpec(state, params, (c3, depth, x_m))
    if direct:
        a = _number(table, "A_Hz", where, lo=0.0, lo_open=True)
        alpha = _number(table, "alpha_per_nm", where, lo=0.0, lo_open=True)
        return PotentialSpec(state, PotentialParams(state, c3, a, alpha))
    raise ConfigError(f"[{where}] needs either D_THz and x_m_nm or A_Hz and alpha_per_nm")


@dataclass(frozen=True)
class SolverSettings:
    x_min_nm: float = 0.1
    du: float = 1e-4
    x_scale_nm: float = 100.0
    x_knee_nm: float = 1000.0
    x_cap_nm: float = 1e5
    window_Hz: tuple = (-1e9, -2e4)
    shallow_ground_nu_min: int = 150
    deep_excited_levels: int = 20
    deep_ground_levels: int = 40
    continuum_Hz: tuple = (0.1, 1e10)
    continuum_points: int = 257
    write_wavefunctions: bool = False


@dataclass(frozen=True)
class RateSettings:
    quadrature_order: int = 64
    orientation: Orientation = Orientation.RANDOM
    effective_frequency: bool = True
    kx_max: float = 30.0
    kx_points: int = 301
    fig8_x_nm: tuple = (0.2, 1000.0)
    fig8_points: int = 400
    fig11_points: int = 65
    gamma0_absolute_s: Optional[float] = None


@dataclass(frozen=True)
class DriveSpec:
    rabi_scale_per_s: float
    omega_l_Hz: float
    beta_per_nm: float


@dataclass(frozen=True)
class DynamicsSettings:
    excited_nu: tuple = (429,)
    ground_nu: tuple = tuple(range(300, 311))
    continuum_points: int = 0
    continuum_Hz: tuple = (1e3, 1e8)
    t_final_s: Optional[float] = None
    t_final_lifetimes: float = 5.0
    samples: int = 51
    tol: float = 1e-9
    secular: bool = False
    gamma0_s: float = 3.28e7
    drives: tuple = ()
    coherences: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    atom: AtomSpecies
    n1: float
    excited: PotentialSpec
    ground: PotentialSpec
    solver: SolverSettings = field(default_factory=SolverSettings)
    rates: RateSettings = field(default_factory=RateSettings)
    dynamics: DynamicsSettings = field(default_factory=DynamicsSettings)
    output_dir: str = "out"
    figures: tuple = FIGURES
    source_text: str = ""
    source_path: Optional[str] = None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text, source_path=str(path))

    @classmethod
    def from_text(cls, text: str, source_path: Optional[str] = None) -> "RunConfig":
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML: {exc}") from exc
        return cls.from_dict(raw, source_text=text, source_path=source_path)

    @classmethod
    def from_dict(cls, raw: dict, source_text: str = "", source_path=None) -> "RunConfig":
        _check_keys(raw, {"atom", "dielectric", "potential", "solver", "rates", "dynamics",
                          "output"}, "top level")
        atom_t = _section(raw, "atom")
        _check_keys(atom_t, {"mass_amu", "lambda0_nm"}, "atom")
        try:
            atom = AtomSpecies.from_amu(
                _number(atom_t, "mass_amu", "atom", lo=0.0, lo_open=True, hi=1e4),
                _number(atom_t, "lambda0_nm", "atom", lo=0.0, lo_open=True, hi=1e6))
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
        diel = _section(raw, "dielectric")
        _check_keys(diel, {"n1"}, "dielectric")
        n1 = _number(diel, "n1", "dielectric", lo=1.0, hi=10.0)
        pot = _section(raw, "potential")
        _check_keys(pot, {"excited", "ground"}, "potential")
        excited = _potential(raw, InternalState.EXCITED)
        ground = _potential(raw, InternalState.GROUND)
        solver = _solver(_section(raw, "solver"))
        rates = _rates(_section(raw, "rates"))
        dynamics = _dynamics(_section(raw, "dynamics"), atom.omega0)
        out = _section(raw, "output")
        _check_keys(out, {"directory", "figures"}, "output")
        figures = tuple(out.get("figures", FIGURES))
        bad = [f for f in figures if f not in FIGURES]
        if bad:
            raise ConfigError(f"output.figures: unknown dataset(s) {bad}; choose from {list(FIGURES)}")
        directory = out.get("directory", "out")
        if not isinstance(directory, str) or not directory:
            raise ConfigError("output.directory must be a non-empty string")
        return cls(atom, n1, excited, ground, solver, rates, dynamics, directory, figures,
                   source_text, source_path)


def _solver(t: dict) -> SolverSettings:
    w = "solver"
    d = SolverSettings()
    _check_keys(t, set(SolverSettings.__dataclass_fields__), w)
    x_min = _number(t, "x_min_nm", w, d.x_min_nm, lo=0.0, lo_open=True, hi=10.0)
    cap = _number(t, "x_cap_nm", w, d.x_cap_nm, lo=x_min, lo_open=True, hi=1e8)
    window = _pair(t, "window_Hz", w, d.window_Hz)
    if window[1] > 0:
        raise ConfigError("solver.window_Hz must lie below zero (bound levels)")
    cont = _pair(t, "continuum_Hz", w, d.continuum_Hz)
    if cont[0] <= 0:
        raise ConfigError("solver.continuum_Hz must be positive")
    return SolverSettings(
        x_min_nm=x_min,
        du=_number(t, "du", w, d.du, lo=1e-7, hi=1e-2),
        x_scale_nm=_number(t, "x_scale_nm", w, d.x_scale_nm, lo=0.0, lo_open=True),
        x_knee_nm=_number(t, "x_knee_nm", w, d.x_knee_nm, lo=0.0, lo_open=True),
        x_cap_nm=cap,
        window_Hz=window,
        shallow_ground_nu_min=_number(t, "shallow_ground_nu_min", w, d.shallow_ground_nu_min,
                                      lo=0, integer=True),
        deep_excited_levels=_number(t, "deep_excited_levels", w, d.deep_excited_levels, lo=1,
                                    integer=True),
        deep_ground_levels=_number(t, "deep_ground_levels", w, d.deep_ground_levels, lo=1,
                                   integer=True),
        continuum_Hz=cont,
        continuum_points=_number(t, "continuum_points", w, d.continuum_points, lo=2, integer=True),
        write_wavefunctions=_flag(t, "write_wavefunctions", w, d.write_wavefunctions),
    )


def _flag(t: dict, key: str, where: str, default: bool) -> bool:
    value = t.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{where}.{key} must be true or false")
    return value


def _rates(t: dict) -> RateSettings:
    w = "rates"
    d = RateSettings()
    _check_keys(t, set(RateSettings.__dataclass_fields__), w)
    try:
        orientation = Orientation(t.get("orientation", d.orientation.value))
    except ValueError:
        raise ConfigError(f"rates.orientation must be one of "
                          f"{[o.value for o in Orientation]}") from None
    g0 = t.get("gamma0_absolute_s")
    if g0 is not None:
        g0 = _number(t, "gamma0_absolute_s", w, lo=0.0, lo_open=True)
    fig8 = _pair(t, "fig8_x_nm", w, d.fig8_x_nm)
    if fig8[0] <= 0:
        raise ConfigError("rates.fig8_x_nm must be positive")
    return RateSettings(
        quadrature_order=_number(t, "quadrature_order", w, d.quadrature_order, lo=1, hi=4096,
                                 integer=True),
        orientation=orientation,
        effective_frequency=_flag(t, "effective_frequency", w, d.effective_frequency),
        kx_max=_number(t, "kx_max", w, d.kx_max, lo=0.0, lo_open=True),
        kx_points=_number(t, "kx_points", w, d.kx_points, lo=2, integer=True),
        fig8_x_nm=fig8,
        fig8_points=_number(t, "fig8_points", w, d.fig8_points, lo=2, integer=True),
        fig11_points=_number(t, "fig11_points", w, d.fig11_points, lo=2, integer=True),
        gamma0_absolute_s=g0,
    )


def _nu_list(t: dict, key: str, where: str, default: tuple) -> tuple:
    """Either an explicit list of quantum numbers or an inclusive [first, last] range."""
    value = t.get(key, default)
    if isinstance(value, dict):
        lo, hi = value.get("first"), value.get("last")
        if not (isinstance(lo, int) and isinstance(hi, int) and 0 <= lo <= hi):
            raise ConfigError(f"{where}.{key} range needs integers 0 <= first <= last")
        return tuple(range(lo, hi + 1))
    if not (isinstance(value, (list, tuple)) and all(isinstance(v, int) and v >= 0 for v in value)):
        raise ConfigError(f"{where}.{key} must be a list of nonnegative integers")
    if len(set(value)) != len(value):
        raise ConfigError(f"{where}.{key} lists a level twice")
    return tuple(value)


def _drive(t: dict, i: int, omega0: float) -> DriveSpec:
    w = f"dynamics.drives[{i}]"
    _check_keys(t, {"rabi_scale_per_s", "omega_l_Hz", "detuning_Hz", "beta_per_nm",
                    "direction"}, w)
    rabi = _number(t, "rabi_scale_per_s", w, lo=0.0)
    if ("omega_l_Hz" in t) == ("detuning_Hz" in t):
        raise ConfigError(f"{w} needs exactly one of omega_l_Hz or detuning_Hz")
    if "omega_l_Hz" in t:
        omega_l = _number(t, "omega_l_Hz", w, lo=0.0, lo_open=True)
    else:
        omega_l = omega0 + _number(t, "detuning_Hz", w)
    if ("beta_per_nm" in t) == ("direction" in t):
        raise ConfigError(f"{w} needs exactly one of beta_per_nm or direction")
    k = 2.0 * math.pi * omega_l / (CONSTANTS.c * 1e9)
    if "direction" in t:
        if t["direction"] not in (1, -1):
            raise ConfigError(f"{w}.direction must be +1 or -1")
        beta = t["direction"] * k
    else:
        beta = _number(t, "beta_per_nm", w)
        if abs(abs(beta) - k) > 1e-9 * k:
            raise ConfigError(f"{w}.beta_per_nm = {beta} must be +/- 2 pi omega_l / c = "
                              f"+/-{k:.12g} nm^-1 (a drive propagates along the surface normal)")
    return DriveSpec(rabi, omega_l, beta)


def _dynamics(t: dict, omega0: float) -> DynamicsSettings:
    w = "dynamics"
    d = DynamicsSettings()
    _check_keys(t, set(DynamicsSettings.__dataclass_fields__), w)
    excited = _nu_list(t, "excited_nu", w, list(d.excited_nu))
    ground = _nu_list(t, "ground_nu", w, list(d.ground_nu))
    if not excited:
        raise ConfigError("dynamics.excited_nu must select at least one level")
    t_final = t.get("t_final_s")
    if t_final is not None:
        t_final = _number(t, "t_final_s", w, lo=0.0)
    drives_raw = t.get("drives", [])
    if not isinstance(drives_raw, list):
        raise ConfigError("dynamics.drives must be an array of tables")
    coherences = t.get("coherences", [])
    if not (isinstance(coherences, list)
            and all(isinstance(c, list) and len(c) == 2 and all(isinstance(s, str) for s in c)
                    for c in coherences)):
        raise ConfigError("dynamics.coherences must be a list of [label, label] pairs")
    return DynamicsSettings(
        excited_nu=excited,
        ground_nu=ground,
        continuum_points=_number(t, "continuum_points", w, d.continuum_points, lo=0, integer=True),
        continuum_Hz=_pair(t, "continuum_Hz", w, d.continuum_Hz),
        t_final_s=t_final,
        t_final_lifetimes=_number(t, "t_final_lifetimes", w, d.t_final_lifetimes, lo=0.0),
        samples=_number(t, "samples", w, d.samples, lo=1, integer=True),
        tol=_number(t, "tol", w, d.tol, lo=0.0, lo_open=True, hi=1e-2),
        secular=_flag(t, "secular", w, d.secular),
        gamma0_s=_number(t, "gamma0_s", w, d.gamma0_s, lo=0.0, lo_open=True),
        drives=tuple(_drive(dr, i, omega0) for i, dr in enumerate(drives_raw)),
        coherences=tuple(tuple(c) for c in coherences),
    )
