"""Acceptance suite: one test per criterion, each printing PASS/FAIL.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they complete.  The heavy interface experiments (criteria 6-8)
dominate the runtime; the whole suite finishes well inside an hour on a
desktop.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from phaselab import geometry as geo
from phaselab import harness as H
from phaselab import mcf
from phaselab import model as m
from phaselab import pde
from phaselab import profiles as pf

SQRT2 = math.sqrt(2.0)


def report(num, ok, detail, elapsed, budget):
    line = (f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'} "
            f"{detail}  ({elapsed:.1f}s, budget {budget:.0f}s)")
    print(line)
    assert ok, line
    assert elapsed < budget, f"criterion {num} exceeded budget: {line}"


@pytest.fixture(scope="module")
def linear():
    return m.linear_cubic()


@pytest.fixture(scope="module")
def cubic():
    return m.cubic_flux()


def test_criterion_01_lambda0_linear(linear):
    t0 = time.perf_counter()
    lam, err = pf.compute_lambda0(linear)
    ok = abs(lam - 1.0) <= 1e-8
    report(1, ok, f"lambda0(linear) = {lam!r}, |Δ| = {abs(lam-1):.2e}",
           time.perf_counter() - t0, 1.0)


def test_criterion_02_factorization_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for model in m.registry_models():
        coeffs = pf.transport_coefficients(model)
        worst = max(worst, coeffs.identity_residual)
    report(2, worst <= 1e-7, f"max |λ0 − μσ| = {worst:.2e} over registry",
           time.perf_counter() - t0, 5.0)


def test_criterion_03_standing_wave(linear, cubic):
    t0 = time.perf_counter()
    wave = pf.compute_standing_wave(linear)
    mask = np.abs(wave.z_grid) <= 10.0
    tanh_err = float(np.max(np.abs(
        wave.u0[mask] - np.tanh(wave.z_grid[mask] / SQRT2))))
    cubic_wave = pf.compute_standing_wave(cubic)
    res = pf.standing_wave_residual(cubic_wave, cubic)
    fine = pf.compute_standing_wave(cubic, dz=cubic_wave.dz / 2.0)
    res_fine = pf.standing_wave_residual(fine, cubic)
    factor = res / res_fine
    ok = tanh_err <= 1e-6 and res <= 1e-5 and factor >= 3.5
    report(3, ok, f"tanh err {tanh_err:.2e}, residual {res:.2e}, "
           f"refinement ×{factor:.2f}", time.perf_counter() - t0, 5.0)


def test_criterion_04_cross_formula_and_corrector():
    t0 = time.perf_counter()
    worst_cross = 0.0
    worst_solv = 0.0
    for model in m.registry_models():
        lam, _ = pf.compute_lambda0(model)
        wave = pf.compute_standing_wave(model)
        lam_alt = pf.compute_lambda0_profile(wave, model)
        worst_cross = max(worst_cross, abs(lam - lam_alt))
        corr = pf.compute_corrector(wave, model, lam, laplacian_d=1.0)
        worst_solv = max(worst_solv, abs(corr.solvability_residual))
    ok = worst_cross <= 1e-5 and worst_solv <= 1e-6
    report(4, ok, f"cross-formula {worst_cross:.2e}, solvability "
           f"{worst_solv:.2e}", time.perf_counter() - t0, 10.0)


def test_criterion_05_energy_and_comparison(linear):
    t0 = time.perf_counter()
    grid = pde.Grid2D.square(128)
    wave = pf.compute_standing_wave(linear)
    state = pde.init_state(grid, 0.03, pde.ProfileInit(wave, (0.5, 0.5), 0.35),
                           linear)
    dt = pde.stable_dt(state, pde.SolverConfig(), linear)
    config = pde.SolverConfig(dt=dt, record_every=1)
    n_steps = 10_000
    final, records = pde.run(state, config, linear, t_end=n_steps * dt)
    assert final.step_count == n_steps
    e = np.array(records["energy"])
    increases = int(np.sum(np.diff(e) > 1e-12 * np.maximum(1.0, np.abs(e[:-1]))))
    lo = replace(state, u=state.u - 0.01, diagnostics=None)
    ordered, violation = pde.comparison_run(lo, state, config, linear,
                                            t_end=n_steps * dt)
    ok = increases == 0 and violation <= 1e-10
    report(5, ok, f"energy increases {increases}/10^4 steps, comparison "
           f"violation {violation:.2e}", time.perf_counter() - t0, 120.0)


def test_criterion_06_generation():
    t0 = time.perf_counter()
    spec = H.ExperimentSpec(kind="generation", epsilons=(0.04, 0.02, 0.01),
                            grid_n=256, eta=0.05)
    rep = H.run_generation(spec)
    in_range = all(r["violation_i"] <= 0.0 for r in rep.rows)
    m0s = [r["m0"] for r in rep.rows]
    finite = all(math.isfinite(v) for v in m0s)
    spread = (max(m0s) - min(m0s)) / min(m0s) if finite else math.inf
    ok = in_range and finite and spread < 0.5
    report(6, ok, f"all cells in range: {in_range}, M0 = {m0s}, "
           f"spread {spread:.1%}", time.perf_counter() - t0, 600.0)


def test_criterion_07_propagation():
    t0 = time.perf_counter()
    details = []
    ok = True
    for name in ("linear-cubic", "cubic-flux"):
        spec = H.ExperimentSpec(kind="propagation", model=name, eta=0.05)
        rep = H.run_propagation(spec)
        dists = [r["sup_hausdorff"] for r in rep.rows]
        ratios = [r["hausdorff_over_eps"] for r in rep.rows]
        widths = [r["width_over_eps"] for r in rep.rows]
        monotone = all(b < a for a, b in zip(dists, dists[1:]))
        ok &= monotone and max(ratios) <= 10.0 and max(widths) <= rep.width_bound
        details.append(f"{name}: dist={['%.4f' % d for d in dists]}, "
                       f"dist/ε max {max(ratios):.2f}, width/ε max "
                       f"{max(widths):.2f}")
    report(7, ok, "; ".join(details), time.perf_counter() - t0, 1800.0)


def test_criterion_08_profile_convergence():
    t0 = time.perf_counter()
    spec = H.ExperimentSpec(kind="profile", model="linear-cubic")
    rep = H.run_profile(spec)
    errs = [r["sup_profile_error"] for r in rep.rows]
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    final_ok = errs[-1] <= 0.1 * rep.span
    graphs = all(r["graph_over_all"] for r in rep.rows)
    ok = monotone and final_ok and graphs
    report(8, ok, f"sup errors {['%.4f' % e for e in errs]}, graph-over "
           f"{graphs}", time.perf_counter() - t0, 1800.0)


def test_criterion_09_barriers():
    t0 = time.perf_counter()
    spec = H.ExperimentSpec(kind="barriers")
    rep = H.check_barriers(spec)
    c2_ok = math.isfinite(rep.generation_c2)
    prop = rep.propagation
    q_needed = prop["margin_plus_q0"] < 0.0 or prop["margin_minus_q0"] > 0.0
    ok = c2_ok and q_needed
    report(9, ok, f"generation C2 = {rep.generation_c2}, σ=0 margins "
           f"({prop['margin_plus_q0']:.2f}, {prop['margin_minus_q0']:.2f})",
           time.perf_counter() - t0, 300.0)


def test_criterion_10_mcf_reference():
    t0 = time.perf_counter()
    law = mcf.CircleLaw((0.5, 0.5), 0.25, 1.0)
    traj = mcf.evolve_front(law.polyline(0.0, n=256), 1.0,
                            0.95 * law.extinction_time, record_every=20)
    worst = 0.0
    for k, t in enumerate(traj.times):
        if t >= law.extinction_time:
            break
        r_law = law.radius(float(t))
        if r_law < 5.0 * traj.spacing:
            break
        worst = max(worst, abs(traj.mean_radius(k) - r_law) / r_law)
    slope = np.polyfit(traj.area_times, traj.areas, 1)[0]
    rate_err = abs(slope + 2.0 * math.pi) / (2.0 * math.pi)
    ok = worst <= 5e-3 and rate_err <= 1e-2
    report(10, ok, f"radius err {worst:.2%}, area rate err {rate_err:.2%}",
           time.perf_counter() - t0, 30.0)
