"""Mode decomposition, self-consistent ground parameter, energy, residuals."""

import math

import numpy as np
import pytest

from stefanlab import bessel, modulation, reduced, solver, spectrum
from stefanlab.errors import InsufficientHistory, NonConvergence, SingularGram
from stefanlab.weighted import (GridFunction, WeightParam, inner_b,
                                norm_b)

W0 = WeightParam(0.0)


class TestDecompose:
    def test_pure_mode_recovered(self, grid512):
        w = WeightParam(0.01)
        basis = modulation.Basis.solve(grid512, 0.01, 1)
        v = GridFunction(grid512, basis.psis[:, 0].copy())
        ms = modulation.decompose(v, 0.0, 1, w, basis=basis)
        assert abs(ms.coeffs[0] - 1.0) < 1e-12
        assert norm_b(ms.eps, w) < 1e-12

    def test_two_mode_combination(self, grid512):
        w = WeightParam(0.01)
        basis = modulation.Basis.solve(grid512, 0.01, 2)
        v = GridFunction(grid512, basis.psis @ np.array([2.0, 3.0]))
        ms = modulation.decompose(v, 0.0, 2, w, basis=basis)
        assert np.allclose(ms.coeffs, [2.0, 3.0], atol=1e-10)
        assert norm_b(ms.eps, w) < 1e-10

    def test_orthogonal_mode_goes_to_remainder(self, grid512, zeros12):
        e3 = bessel.eta(3, grid512, zeros12)
        v = e3.gridfunction
        ms = modulation.decompose(v, 0.0, 2, W0)
        assert np.max(np.abs(ms.coeffs)) < 1e-6
        assert abs(norm_b(ms.eps, W0) - 1.0) < 1e-4

    def test_orthogonality_invariant(self, grid512, rng):
        w = WeightParam(0.015)
        for _ in range(4):
            f = spectrum.random_dirichlet(grid512, rng, modes=10)
            ms = modulation.decompose(f, 0.0, 2, w)
            assert ms.ortho_defect <= 1e-10 * (1.0 + norm_b(ms.eps, w))

    def test_singular_gram_detected(self, grid512):
        basis = modulation.Basis.solve(grid512, 0.01, 1)
        dup = modulation.Basis(
            b=0.01,
            psis=np.column_stack([basis.psis[:, 0], basis.psis[:, 0]]),
            lams=np.array([basis.lams[0], basis.lams[0]]),
            grid=grid512,
        )
        v = GridFunction(grid512, basis.psis[:, 0].copy())
        with pytest.raises(SingularGram):
            modulation.decompose(v, 0.0, 2, WeightParam(0.01), basis=dup)


class TestSelfConsistentB1:
    def test_zero_input(self, grid512):
        v = GridFunction(grid512, np.zeros(513))
        assert modulation.self_consistent_b1(v) == 0.0

    def test_constructed_fixed_point(self, grid512):
        target = 0.01
        basis = modulation.Basis.solve(grid512, target, 1)
        v = GridFunction(grid512, target * basis.psis[:, 0])
        got = modulation.self_consistent_b1(v)
        assert abs(got - target) < 1e-10

    def test_contraction_of_increments(self, grid512, zeros12):
        # replicate the iteration and watch |increment| decrease
        amp = 0.03
        vals = amp * bessel.eta(1, grid512, zeros12).values
        vals[-1] = 0.0
        v = GridFunction(grid512, vals)
        b = 0.0
        increments = []
        for _ in range(6):
            basis = modulation.Basis.solve(grid512, b, 1)
            w = WeightParam(b)
            psi = GridFunction(grid512, basis.psis[:, 0])
            b_new = inner_b(v, psi, w) / inner_b(psi, psi, w)
            increments.append(abs(b_new - b))
            b = b_new
        nontrivial = [x for x in increments if x > 1e-14]
        assert all(x2 < x1 for x1, x2 in zip(nontrivial, nontrivial[1:]))

    def test_nonconvergence_cap(self, grid512, zeros12):
        vals = 0.02 * bessel.eta(1, grid512, zeros12).values
        vals[-1] = 0.0
        v = GridFunction(grid512, vals)
        with pytest.raises(NonConvergence):
            modulation.self_consistent_b1(v, max_iter=1)


class TestEnergy:
    def test_zero_remainder(self, grid512):
        z = GridFunction(grid512, np.zeros(513))
        assert modulation.energy_of(z, W0) == 0.0

    def test_eigenmode_energy(self, grid1024, zeros12):
        # H_0 eta_2 = lam_2 eta_2, so E = delta^2 lam_2^2 (normalized mode)
        delta = 1e-3
        vals = delta * bessel.eta(2, grid1024, zeros12).values
        vals[-1] = 0.0
        e = GridFunction(grid1024, vals)
        got = modulation.energy_of(e, W0)
        expect = delta ** 2 * zeros12[1].lam ** 2
        assert abs(got - expect) / expect < 1e-3


class TestAdiabaticSchedule:
    def test_initial_value_and_decay(self, zeros12):
        b0 = modulation.adiabatic_b(0.0, 2, 0.02, zeros12)
        assert b0 == 0.02
        b1 = modulation.adiabatic_b(0.1, 2, 0.02, zeros12)
        assert b1 == pytest.approx(
            0.02 * math.exp(-zeros12[1].lam * 0.1) / 1.1)

    def test_derivative_matches_fd(self, zeros12):
        s, h = 0.05, 1e-6
        fd = (modulation.adiabatic_b(s + h, 2, 0.02, zeros12)
              - modulation.adiabatic_b(s - h, 2, 0.02, zeros12)) / (2 * h)
        an = modulation.adiabatic_b_deriv(s, 2, 0.02, zeros12)
        assert abs(fd - an) < 1e-6 * abs(an) + 1e-12

    def test_gap_exponent_in_open_interval(self, zeros12):
        for k in (2, 3, 4):
            g = modulation.gap_exponent(k, zeros12)
            half_gap = 0.5 * (zeros12[k - 1].lam - zeros12[k - 2].lam)
            assert 0.0 < g < half_gap


class TestModulationResidual:
    def _riccati_states(self, grid, dt_s, n, b0=0.01):
        params = reduced.RiccatiParams.for_mode(1, b0)
        zeros = bessel.j0_zeros(2)
        c = math.sqrt(2.0 * zeros[0].lam)
        zero_eps = GridFunction(grid, np.zeros(grid.n + 1))
        states = []
        for i in range(n):
            s = i * dt_s
            b = reduced.riccati_exact(params, s)
            states.append(modulation.ModulationState(
                s=s, k=1, b=b, coeffs=np.array([b]), eps=zero_eps,
                energy=0.0, V=np.zeros(0), a=-c * b, ortho_defect=0.0))
        return states

    def test_synthetic_riccati_input(self, grid512):
        # pure ODE input at a fine cadence: residual is FD error only
        states = self._riccati_states(grid512, 1e-4, 41)
        diag = modulation.modulation_residual(states, 1e-4)
        assert np.max(diag.residuals) <= 1e-8

    def test_zero_history(self, grid512):
        zero_eps = GridFunction(grid512, np.zeros(513))
        states = [modulation.ModulationState(
            s=i * 1e-3, k=1, b=0.0, coeffs=np.zeros(1), eps=zero_eps,
            energy=0.0, V=np.zeros(0), a=0.0, ortho_defect=0.0)
            for i in range(5)]
        diag = modulation.modulation_residual(states, 1e-3)
        assert np.max(diag.residuals) == 0.0
        assert np.max(np.abs(diag.phi)) == 0.0

    def test_insufficient_history(self, grid512):
        states = self._riccati_states(grid512, 1e-4, 2)
        with pytest.raises(InsufficientHistory):
            modulation.modulation_residual(states, 1e-4)

    def test_pde_ratio_bounded(self, ctx):
        # the tracked-law residual over |b1|^{5/2} stays below a fixed
        # ceiling while b1 is resolved (the tail is FD-limited)
        track = ctx.k1_track(+1)
        diag = track.diagnostics
        b1 = np.array([st.coeffs[0] for st in track.states])[1:-1]
        sel = np.abs(b1) > 1e-4
        assert np.max(diag.ratios[sel]) < 200.0


class TestBoundaryLaw:
    def test_zero_state(self, grid512):
        v = GridFunction(grid512, np.zeros(513))
        ms = modulation.decompose(v, 0.0, 1, W0)
        assert modulation.boundary_law_defect(0.0, ms) == 0.0

    def test_k1_defect_scaling(self, ctx):
        track = ctx.k1_track(+1)
        worst = 0.0
        for st in track.states:
            if abs(st.coeffs[0]) < 1e-6:
                continue
            d = modulation.boundary_law_defect(st.a, st)
            worst = max(worst, d / abs(st.coeffs[0]) ** 1.5)
        assert worst < 1.0

    def test_k1_sign_relation(self, ctx):
        track = ctx.k1_track(+1)
        for st in track.states:
            if abs(st.coeffs[0]) > 1e-8:
                assert np.sign(st.a) == -np.sign(st.coeffs[0])


class TestTrackRun:
    def test_mode_decay_rate_k1(self, ctx, zeros12):
        track = ctx.k1_track(-1)
        s = np.array([st.s for st in track.states])
        b1 = np.abs(track.coeff_array()[:, 0])
        sel = (b1 > 1e-8) & (b1 < 1e-4)
        rate = -np.polyfit(s[sel], np.log(b1[sel]), 1)[0]
        assert abs(rate - zeros12[0].lam) / zeros12[0].lam < 0.02

    def test_mode_decay_rate_k2_trapped(self, ctx, zeros12):
        track = ctx.k2_family(+1)["trapped_eval"].track
        s = np.array([st.s for st in track.states])
        b2 = np.abs(track.coeff_array()[:, 1])
        sel = (b2 > 1e-8) & (b2 < 1e-4)
        rate = -np.polyfit(s[sel], np.log(b2[sel]), 1)[0]
        assert abs(rate - zeros12[1].lam) / zeros12[1].lam < 0.02

    def test_trap_variables_stay_below_ceiling(self, ctx):
        track = ctx.k2_family(+1)["trapped_eval"].track
        v2 = np.array([float(np.sum(st.V ** 2)) for st in track.states])
        assert np.max(v2) <= 1.0

    def test_energy_positive_and_finite(self, ctx):
        track = ctx.k1_track(+1)
        E = np.array([st.energy for st in track.states])
        assert np.all(np.isfinite(E))
        assert np.all(E >= 0.0)

    def test_csv_output(self, ctx, tmp_path):
        track = ctx.k1_track(+1)
        path = tmp_path / "mod.csv"
        track.to_csv(path)
        head = path.read_text().splitlines()[0]
        assert head.split(",")[:4] == ["s", "b", "b_1", "E"]

    def test_requires_snapshots(self, grid512, zeros12):
        vals = 0.01 * bessel.eta(1, grid512, zeros12).values
        vals[-1] = 0.0
        ts = solver.run(GridFunction(grid512, vals), ds=4e-4, s_max=0.05,
                        keep_snapshots=False)
        with pytest.raises(ValueError):
            modulation.track_run(ts, 1)


class TestProfileBuilder:
    def test_profile_matches_coefficients(self, grid512):
        w = WeightParam(0.02)
        v = modulation.build_profile(grid512, w, [0.003, 0.01])
        ms = modulation.decompose(v, 0.0, 2, w)
        assert np.allclose(ms.coeffs, [0.003, 0.01], atol=1e-12)
        assert v.values[-1] == 0.0
