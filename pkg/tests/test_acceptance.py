"""Acceptance gate: one PASS/FAIL line per criterion, at the stated tolerances.

The full ``verify`` report is produced once on the shared pipeline (the same
code path as ``surfdecay verify``) and each criterion reads its rows from it.
Cheap quantities are also recomputed directly here as a second route.
"""
import contextlib
import io
import time
from types import SimpleNamespace

import numpy as np
import pytest

from surfdecay import cli
from surfdecay.physical_model import KHZ_UM3, THZ, InternalState, derive_repulsion_params
from surfdecay.rates import gamma_x, wave_number


@pytest.fixture(scope="module")
def report(pipeline):
    start = time.perf_counter()
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.cmd_verify(SimpleNamespace(pipeline=pipeline))
    lines = out.getvalue().splitlines()
    assert lines[0] == "name,expected,got,tolerance,status"
    rows = {}
    for line in lines[1:]:
        name, expected, got, tol, status = line.split(",")
        rows[name] = (expected, float(got), tol, status == "PASS")
    return SimpleNamespace(code=code, rows=rows, seconds=time.perf_counter() - start)


@pytest.fixture
def announce(capsys):
    def emit(number, title, names, rows, extra=()):
        results = [(n, rows[n]) for n in names] + list(extra)
        ok = bool(results) and all(r[3] for _, r in results)
        detail = "; ".join(f"{n}={r[1]:.6g} ({r[2]})" for n, r in results)
        with capsys.disabled():
            print(f"\ncriterion {number} {'PASS' if ok else 'FAIL'}: {title} | {detail}")
        return ok

    return emit


def direct(name, got, ok, tol):
    return name, ("", float(got), tol, bool(ok))


def test_criterion_1_repulsion_parameters(report, announce):
    g = derive_repulsion_params(1.56 * KHZ_UM3, 159.6 * THZ, 0.19)
    e = derive_repulsion_params(3.09 * KHZ_UM3, 316.0 * THZ, 0.19, InternalState.EXCITED)
    extra = [direct("alpha_g_direct", g.alpha, 52 <= g.alpha <= 55, "[52;55]"),
             direct("A_g_direct", g.A, abs(g.A / 1.6e18 - 1) <= 0.10, "rel<=0.1"),
             direct("A_e_direct", e.A, abs(e.A / 3.17e18 - 1) <= 0.10, "rel<=0.1")]
    assert announce(1, "repulsion parameters",
                    ["alpha_g_per_nm", "A_g_Hz", "alpha_e_per_nm", "A_e_Hz"], report.rows, extra)


def test_criterion_2_bound_counts(report, pipeline, announce):
    start = time.perf_counter()
    n_e, n_g = type(pipeline)(pipeline.config).counts
    elapsed = time.perf_counter() - start
    extra = [direct("count_seconds", elapsed, elapsed < 300, "<300"),
             direct("excited_recount", n_e, abs(n_e - 437) <= 3, "abs<=3"),
             direct("ground_recount", n_g, abs(n_g - 311) <= 3, "abs<=3")]
    assert announce(2, "bound-state counts", ["bound_count_excited", "bound_count_ground"],
                    report.rows, extra)


def test_criterion_3_rest_atom_curve(report, atom, quad, announce):
    k0 = wave_number(atom.omega0)
    at0 = gamma_x(atom.omega0, 0.0, 1.45, quad)["total"]
    at20 = gamma_x(atom.omega0, 20.0 / k0, 1.45, quad)["total"]
    extra = [direct("gamma_x_kx0_direct", at0, abs(at0 - 1.6) <= 0.05, "abs<=0.05"),
             direct("gamma_x_kx20_direct", at20, abs(at20 - 1.0) <= 0.05, "abs<=0.05")]
    names = ["gamma_x_kx0"] + [f"interference_negative_kx{k:g}" for k in (0.5, 2, 5, 8)]
    names += ["evanescent_positive_min", "gamma_x_kx20"]
    assert announce(3, "rest-atom curve", names, report.rows, extra)


def test_criterion_4_shallow_linewidths(report, announce):
    assert announce(4, "shallow linewidths",
                    ["gamma_a_nu429", "gamma_a_nu385", "gamma_a_monotone_max_rise"], report.rows)


def test_criterion_5_deep_suppression(report, announce):
    assert announce(5, "deep-level suppression",
                    ["gamma_a_nu0", "suppression_factor_nu0", "bound_sum_over_linewidth_nu0"],
                    report.rows)


def test_criterion_6_sum_rules(report, announce):
    assert announce(6, "sum rules",
                    ["rate_sum_over_linewidth_max_rel_error", "completeness_max_abs_error",
                     "free_space_completeness_max_abs_error",
                     "free_space_double_integral_max_abs"], report.rows)


def test_criterion_7_overlap_oracle(report, announce):
    assert announce(7, "overlap oracle", ["overlap_momentum_oracle_max_abs"], report.rows)


def test_criterion_8_dynamics(report, announce):
    assert announce(8, "dynamics",
                    ["single_level_log_slope_rel_error", "trace_drift_5_lifetimes",
                     "two_level_steady_state", "drive_off_generator_max_rel"], report.rows)


def test_criterion_9_numerical_hygiene(report, announce):
    failed = [n for n, r in report.rows.items() if not r[3]]
    extra = [direct("verify_exit_code", report.code, report.code == 0, "==0"),
             direct("verify_failed_rows", len(failed), not failed, "==0")]
    names = ["quadrature_doubling_gamma_x", "quadrature_doubling_gamma_ab",
             "quadrature_doubling_gamma_a", "grid_halving_shift_over_tolerance"]
    assert announce(9, "numerical hygiene", names, report.rows, extra), failed
    assert np.isfinite(report.seconds)
