import numpy as np
import pytest
import scipy.linalg
from conftest import fit_order

from gstrands import gstrand, liealg
from gstrands.errors import (BlowUpError, DimensionMismatchError,
                             ReconstructionRefusedError)
from gstrands.gstrand import (QuadraticLagrangian, StrandField, StrandGrid,
                              chiral_lagrangian)

SO3 = liealg.builtin("so3")
CHIRAL = chiral_lagrangian(3)


def generic_chiral_field(grid, amplitude=1.0):
    s = grid.s_nodes
    w = 2 * np.pi / grid.s_extent
    nu = amplitude * np.stack([0.8 + 0.3 * np.sin(w * s), 0.2 * np.cos(w * s),
                               0.1 * np.sin(2 * w * s)], axis=1)
    gam = amplitude * np.stack([0.1 * np.cos(w * s), 0.7 - 0.2 * np.sin(w * s),
                                0.3 * np.cos(2 * w * s)], axis=1)
    return StrandField(nu, gam)


def test_grid_validation():
    with pytest.raises(DimensionMismatchError):
        StrandGrid(4, 1.0, 1e-3, 1.0)
    with pytest.raises(DimensionMismatchError):
        StrandGrid(8, 1.0, -1e-3, 1.0)
    with pytest.raises(DimensionMismatchError):
        StrandGrid(8, 1.0, 1e-3, 1.0, bc="reflecting")
    g = StrandGrid(1, 1.0, 1e-3, 1.0)     # classical degenerate mode
    assert g.ds == 1.0


def test_ep_rhs_constant_field_vanishes():
    grid = StrandGrid(16, 2 * np.pi, 1e-3, 1.0)
    xi = np.array([0.4, -0.3, 0.8])
    f = StrandField(np.tile(xi, (16, 1)), np.tile(xi, (16, 1)))
    assert np.max(np.abs(gstrand.ep_rhs(SO3, CHIRAL, f, grid))) < 1e-14


def test_zcc_rhs_commuting_constant_fields():
    grid = StrandGrid(16, 2 * np.pi, 1e-3, 1.0)
    xi = np.array([0.4, -0.3, 0.8])
    f = StrandField(np.tile(xi, (16, 1)), np.tile(2.0 * xi, (16, 1)))
    assert np.max(np.abs(gstrand.zcc_rhs(SO3, f, grid))) < 1e-14


def test_pure_gauge_rates_vanish():
    grid = StrandGrid(32, 2 * np.pi, 1e-3, 1.0)
    xi = np.array([0.0, 0.0, 1.0])
    f = StrandField(np.tile(xi, (32, 1)), np.tile(xi, (32, 1)))
    assert np.max(np.abs(gstrand.zcc_rhs(SO3, f, grid))) < 1e-14
    assert np.max(np.abs(gstrand.ep_rhs(SO3, CHIRAL, f, grid))) < 1e-14


def traveling_wave(grid, t=0.0, width=0.4):
    s = grid.s_nodes
    f = np.exp(width * (np.cos(2 * np.pi * (s + t) / grid.s_extent) - 1.0))
    xi = np.array([0.0, 0.0, 1.0])
    prof = f[:, None] * xi
    return StrandField(prof, prof.copy())


def test_traveling_wave_rhs_matches_exact_rate():
    # U = V = f(s + t) e3 solves dU/dt = dV/ds; the discrete rhs converges
    # to the analytic rate at second order in ds
    errs = []
    for n_s in (64, 128):
        grid = StrandGrid(n_s, 20.0, 1e-3, 1.0)
        f = traveling_wave(grid, width=1.0)
        s = grid.s_nodes
        w = 2 * np.pi / grid.s_extent
        prof = np.exp(1.0 * (np.cos(w * s) - 1.0))
        dfds = -w * np.sin(w * s) * prof
        exact = dfds[:, None] * np.array([0.0, 0.0, 1.0])
        errs.append(np.max(np.abs(gstrand.ep_rhs(SO3, CHIRAL, f, grid) - exact)))
        assert np.max(np.abs(gstrand.zcc_rhs(SO3, f, grid) - exact)) == pytest.approx(
            errs[-1], abs=1e-12)
    assert np.log2(errs[0] / errs[1]) >= 1.9


def test_manufactured_rhs_second_order_in_ds():
    # smooth analytic field with the exact momentum rate inserted
    def residual(n_s):
        grid = StrandGrid(n_s, 2 * np.pi, 1e-3, 1.0)
        s = grid.s_nodes
        nu = np.stack([np.sin(s), np.cos(2 * s), 0.5 * np.sin(3 * s)], axis=1)
        gam = np.stack([np.cos(s), 0.3 * np.sin(2 * s), 0.2 * np.cos(3 * s)], axis=1)
        f = StrandField(nu, gam)
        n = gam @ CHIRAL.a_s.T
        dn_ds = np.stack([-np.sin(s), 0.6 * np.cos(2 * s), -0.6 * np.sin(3 * s)], axis=1) \
            @ CHIRAL.a_s.T
        exact = -dn_ds - liealg.ad_star(SO3, nu, nu) - liealg.ad_star(SO3, gam, n)
        return np.max(np.abs(gstrand.ep_rhs(SO3, CHIRAL, f, grid) - exact))

    errs = [residual(32), residual(64), residual(128)]
    assert fit_order(errs) >= 1.9


def test_zero_field_stays_zero():
    grid = StrandGrid(16, 2 * np.pi, 1e-2, 0.1)
    f = StrandField(np.zeros((16, 3)), np.zeros((16, 3)))
    out = gstrand.step(SO3, CHIRAL, f, grid)
    assert np.all(out.nu == 0.0) and np.all(out.gamma == 0.0)


def test_energy_conservation_against_reference_run():
    # semidiscrete energy is exactly conserved; RK4 leaves only O(dt^4) drift,
    # cross-checked against a dt/10 reference trajectory
    grid = StrandGrid(64, 2 * np.pi, 2e-3, 0.5, store_every=50)
    f0 = generic_chiral_field(grid)
    hist = gstrand.simulate(SO3, CHIRAL, f0, grid)
    e0 = gstrand.hamiltonian_energy(SO3, CHIRAL, f0, grid)
    drift = max(abs(gstrand.hamiltonian_energy(
        SO3, CHIRAL, StrandField(hist.nu[k], hist.gamma[k]), grid) - e0)
        for k in range(len(hist.times))) / abs(e0)
    assert drift < 1e-6

    fine = StrandGrid(64, 2 * np.pi, 2e-4, 0.5, store_every=500)
    ref = gstrand.simulate(SO3, CHIRAL, f0, fine)
    assert np.max(np.abs(ref.nu[-1] - hist.nu[-1])) < 1e-9


def test_rk4_step_matches_richardson_order():
    grid = StrandGrid(32, 2 * np.pi, 0.02, 1.0)
    f0 = generic_chiral_field(grid)

    def advance(dt, steps):
        g = StrandGrid(32, 2 * np.pi, dt, 1.0)
        f = f0
        for _ in range(steps):
            f = gstrand.step(SO3, CHIRAL, f, g)
        return np.concatenate([f.nu.ravel(), f.gamma.ravel()])

    y1 = advance(0.02, 1)
    y2 = advance(0.01, 2)
    y4 = advance(0.005, 4)
    ratio = np.max(np.abs(y1 - y2)) / np.max(np.abs(y2 - y4))
    # successive halved-step differences shrink by 2^4 for a 4th-order method
    assert 3.8 <= np.log2(ratio) <= 4.3


def test_blow_up_detected():
    grid = StrandGrid(16, 2 * np.pi, 1e-2, 0.1)
    f = StrandField(np.full((16, 3), 1e200), np.full((16, 3), 1e200))
    with pytest.raises(BlowUpError):
        gstrand.step(SO3, CHIRAL, f, grid, step_index=7)


def test_residual_report_orders():
    def level(i):
        grid = StrandGrid(32 * 2**i, 2 * np.pi, 0.02 / 2**i, 0.4, store_every=1)
        hist = gstrand.simulate(SO3, CHIRAL, generic_chiral_field(grid), grid)
        return gstrand.residual_report(SO3, CHIRAL, hist, grid), grid, hist

    reports = [level(i)[0] for i in range(3)]
    assert fit_order([r["ep_residual"] for r in reports]) >= 1.9
    assert fit_order([r["zcc_residual"] for r in reports]) >= 1.9


def test_residual_report_flags_corruption():
    grid = StrandGrid(32, 2 * np.pi, 5e-3, 0.2, store_every=1)
    hist = gstrand.simulate(SO3, CHIRAL, generic_chiral_field(grid), grid)
    bad = gstrand.StrandHistory(hist.times, hist.nu, hist.gamma * 1.1)
    assert gstrand.zcc_residual(SO3, bad, grid) > 1e-2


def test_residual_report_pure_gauge_constant():
    grid = StrandGrid(16, 2 * np.pi, 1e-2, 0.1, store_every=1)
    xi = np.array([0.0, 0.0, 1.0])
    f = StrandField(np.tile(xi, (16, 1)), np.tile(xi, (16, 1)))
    hist = gstrand.simulate(SO3, CHIRAL, f, grid)
    rep = gstrand.residual_report(SO3, CHIRAL, hist, grid)
    assert rep["ep_residual"] < 1e-10 and rep["zcc_residual"] < 1e-10


def test_bi_invariance_identity_per_gridpoint():
    grid = StrandGrid(16, 2 * np.pi, 1e-3, 1.0)
    f = generic_chiral_field(grid)
    rng = np.random.default_rng(9)
    eta = rng.standard_normal(3)
    m = f.nu @ CHIRAL.a_t.T
    lhs = liealg.pair(SO3, liealg.ad_star(SO3, f.nu, m), np.tile(eta, (16, 1)))
    rhs = liealg.pair(SO3, m, liealg.bracket(SO3, f.nu, np.tile(eta, (16, 1))))
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_reconstruct_constant_generator():
    xi = np.array([0.3, -0.2, 0.9])
    grid = StrandGrid(8, 2 * np.pi, 1e-2, 0.5, store_every=1)
    f = StrandField(np.tile(xi, (8, 1)), np.zeros((8, 3)))
    hist = gstrand.StrandHistory(
        np.arange(51) * 1e-2,
        np.tile(xi, (51, 8, 1)),
        np.zeros((51, 8, 3)))
    rec = gstrand.reconstruct(SO3, np.eye(3), hist, grid)
    expected = scipy.linalg.expm(0.5 * liealg.to_matrix(SO3, xi))
    assert np.max(np.abs(rec.g[-1] - expected)) < 1e-12


def test_reconstruct_zero_generator_stays_put():
    grid = StrandGrid(8, 2 * np.pi, 1e-2, 0.2, store_every=1)
    f = StrandField(np.zeros((8, 3)), np.zeros((8, 3)))
    hist = gstrand.simulate(SO3, CHIRAL, f, grid)
    g0 = scipy.linalg.expm(liealg.to_matrix(SO3, np.array([0.1, 0.2, 0.3])))
    rec = gstrand.reconstruct(SO3, g0, hist, grid)
    assert np.max(np.abs(rec.g[-1] - g0)) < 1e-14


def test_reconstruct_pure_gauge_closed_form():
    # unit generator: one full turn across the periodic strand, so the gauge
    # g = exp((t + s) xi_hat) is single valued
    xi = np.array([0.3, -0.2, 0.9])
    xi /= np.linalg.norm(xi)
    grid = StrandGrid(32, 2 * np.pi, 1e-3, 1.0, store_every=1)
    f = StrandField(np.tile(xi, (32, 1)), np.tile(xi, (32, 1)))
    hist = gstrand.simulate(SO3, CHIRAL, f, grid)
    xihat = liealg.to_matrix(SO3, xi)
    g0 = np.array([scipy.linalg.expm(s * xihat) for s in grid.s_nodes])
    rec = gstrand.reconstruct(SO3, g0, hist, grid)
    g_end = np.array([scipy.linalg.expm((1.0 + s) * xihat) for s in grid.s_nodes])
    assert np.max(np.abs(rec.g[-1] - g_end)) < 1e-8
    assert rec.gamma_mismatch < 0.05 * np.max(np.abs(hist.gamma))


def test_reconstruct_refuses_broken_curvature():
    grid = StrandGrid(32, 2 * np.pi, 5e-3, 0.2, store_every=1)
    hist = gstrand.simulate(SO3, CHIRAL, generic_chiral_field(grid), grid)
    bad = gstrand.StrandHistory(hist.times, hist.nu, hist.gamma * 1.1)
    with pytest.raises(ReconstructionRefusedError):
        gstrand.reconstruct(SO3, np.eye(3), bad, grid)


def test_se3_strand_residual_orders():
    alg = liealg.builtin("se3")
    lag = QuadraticLagrangian(np.diag([1.0, 2, 3, 1, 1, 1]),
                              np.diag([-1.0, -1, -2, -1, -1, -2]))

    def level(i):
        grid = StrandGrid(32 * 2**i, 2 * np.pi, 0.02 / 2**i, 0.4, store_every=1)
        s = grid.s_nodes
        a = 0.2
        nu = a * np.stack([np.sin(s), 0.5 * np.cos(s), 0.2 + 0.1 * np.sin(2 * s),
                           0.3 * np.cos(s), 0.2 * np.sin(s), 0.1 * np.cos(2 * s)], axis=1)
        gam = a * np.stack([0.2 * np.cos(s), 0.3 * np.sin(s), 0.1 * np.cos(2 * s),
                            0.5 + 0.2 * np.sin(s), 0.1 * np.cos(s), 0.2 * np.sin(2 * s)], axis=1)
        hist = gstrand.simulate(alg, lag, StrandField(nu, gam), grid)
        return gstrand.ep_residual(alg, lag, hist, grid)

    errs = [level(i) for i in range(3)]
    assert fit_order(errs) >= 1.9


def test_fixed_bc_freezes_endpoints():
    grid = StrandGrid(16, 2 * np.pi, 1e-2, 0.1, bc="fixed")
    f0 = generic_chiral_field(grid)
    hist = gstrand.simulate(SO3, CHIRAL, f0, grid)
    assert np.allclose(hist.nu[-1][0], f0.nu[0])
    assert np.allclose(hist.nu[-1][-1], f0.nu[-1])
