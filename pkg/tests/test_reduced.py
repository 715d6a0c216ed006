"""Closed-form mode law, RK4 system, and trapped-data shooting."""

import json
import math

import numpy as np
import pytest

from stefanlab import reduced
from stefanlab.errors import NoTrappedData, PoleCrossing
from stefanlab.weighted import RadialGrid


class TestRiccatiExact:
    def test_zero_initial(self):
        p = reduced.RiccatiParams.for_mode(1, 0.0)
        assert reduced.riccati_exact(p, 3.0) == 0.0

    def test_amplitude_cap(self):
        with pytest.raises(ValueError):
            reduced.RiccatiParams.for_mode(1, 0.06)

    def test_matches_rk4_small_step(self, zeros12):
        p = reduced.RiccatiParams.for_mode(1, 0.01, zeros12)
        s_grid = np.linspace(0.0, 1.0, 11)
        _, traj = reduced.integrate_system(1, [0.01], 1.0, ds=1e-4)
        sampled = traj[::1000, 0]
        exact = reduced.riccati_exact(p, s_grid)
        assert np.max(np.abs(sampled - exact)) < 1e-10

    def test_normalized_limit_constant(self, zeros12):
        # e^{lam s} b(s) approaches 1 / (1/b0 + sigma c / lam)
        p = reduced.RiccatiParams.for_mode(2, 0.01, zeros12)
        c = math.sqrt(2 * p.lam_k)
        expect = 1.0 / (1.0 / p.b0 + p.sigma * c / p.lam_k)
        for s in (8.0, 10.0):
            val = math.exp(p.lam_k * s) * reduced.riccati_exact(p, s)
            assert abs(val - expect) < 1e-6 * abs(expect)

    def test_monotone_melting_branch(self, zeros12):
        p = reduced.RiccatiParams.for_mode(1, 0.03, zeros12)
        s = np.linspace(0.0, 4.0, 200)
        b = reduced.riccati_exact(p, s)
        assert np.all(b > 0)
        assert np.all(np.diff(b) < 0)

    def test_pole_crossing_outside_small_data(self, zeros12):
        # |b0| past -sqrt(lam/2) flips the reciprocal's sign in finite time
        p = reduced.RiccatiParams(k=1, lam_k=zeros12[0].lam, sigma=1.0,
                                  b0=-2.0)
        with pytest.raises(PoleCrossing):
            reduced.riccati_exact(p, 2.0)


class TestIntegrateSystem:
    def test_zero_stays_zero(self):
        _, traj = reduced.integrate_system(2, [0.0, 0.0], 0.5)
        assert np.max(np.abs(traj)) == 0.0

    def test_driven_mode_matches_closed_form(self, zeros12):
        s_grid, traj = reduced.integrate_system(2, [0.0, 0.01], 1.0, ds=1e-3)
        p = reduced.RiccatiParams.for_mode(2, 0.01, zeros12)
        exact = reduced.riccati_exact(p, s_grid)
        assert np.max(np.abs(traj[:, 1] - exact)) < 1e-8

    def test_linearized_modes_decouple(self, zeros12):
        b0 = [0.002, 0.01]
        s_grid, traj = reduced.integrate_system(2, b0, 0.5, ds=1e-3,
                                                quadratic=False)
        for j in (0, 1):
            expect = b0[j] * np.exp(-zeros12[j].lam * s_grid)
            assert np.max(np.abs(traj[:, j] - expect)) < 1e-9

    def test_lower_mode_forced_at_quadratic_order(self, zeros12):
        _, traj = reduced.integrate_system(2, [0.0, 0.01], 0.3, ds=1e-3)
        peak = np.max(np.abs(traj[:, 0]))
        assert 0.0 < peak < 5.0 * 0.01 ** 2

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            reduced.integrate_system(2, [0.01], 1.0)


class TestCouplings:
    def test_closed_form_oracle(self, grid1024, zeros12):
        g = reduced.coupling_coefficients(3, grid1024, zeros12)
        for j in (1, 2):
            lam_k, lam_j = zeros12[2].lam, zeros12[j - 1].lam
            closed = ((-1.0) ** (3 + j) * 2.0 * math.sqrt(lam_k * lam_j)
                      / (lam_k - lam_j))
            assert abs(g[j - 1] - closed) < 1e-8


@pytest.fixture(scope="module")
def k2_shot(ctx):
    return ctx.k2_family(+1)


class TestShootingK2:
    def test_trapped_found_and_small(self, k2_shot):
        res = k2_shot["result"]
        assert res.trapped
        assert abs(res.initials[0]) < 50.0 * reduced.TRAP_CEILING * 0.01 ** 2
        assert res.max_v2 <= res.ceiling ** 2

    def test_trap_certificate(self, k2_shot):
        ev = k2_shot["trapped_eval"]
        assert ev.exit_s is None
        assert ev.max_v2 <= 1.0

    def test_codimension_one_witness(self, k2_shot):
        res = k2_shot["result"]
        ev = k2_shot["evaluator"]
        for sgn in (+1, -1):
            pert = np.array(res.initials)
            pert[0] += sgn * 100.0 * res.tol
            out = ev.evaluate(pert)
            assert out.exit_s is not None

    def test_json_record(self, k2_shot, tmp_path):
        res = k2_shot["result"]
        path = tmp_path / "shoot.json"
        res.to_json(path)
        payload = json.loads(path.read_text())
        assert payload["k"] == 2
        assert payload["exit_s"] is None
        assert payload["found_initials"] == list(res.initials)
        # identical serialization on repeat: fixed-step, no randomness
        assert res.to_json() == res.to_json()


class TestShootingK3:
    def test_two_unstable_modes_trapped(self):
        # the default horizon keeps the fastest trap variable's trapped
        # window wider than the bisection tolerance (~0.33 for k = 3)
        grid = RadialGrid(512)
        ev = reduced.TrapEvaluator(3, 0.02, grid, ds=6e-5)
        assert ev.s_max == pytest.approx(reduced.default_shoot_horizon(3))
        res = reduced.shoot_trapped(3, 0.02, grid=grid, evaluator=ev,
                                    tol=1e-12)
        assert res.trapped
        assert res.max_v2 <= res.ceiling ** 2
        # both lower coefficients sit at the quadratically forced scale
        assert all(abs(x) < 1e-2 for x in res.initials)

    def test_zero_driving_mode_trivially_trapped(self):
        # with b_k(0) = 0 and no lower-mode data the profile vanishes and
        # every trap variable stays at zero
        grid = RadialGrid(512)
        ev = reduced.TrapEvaluator(3, 0.0, grid)
        out = ev.evaluate([0.0, 0.0])
        assert out.exit_s is None
        assert out.max_v2 == 0.0

    def test_k_bounds(self):
        grid = RadialGrid(512)
        with pytest.raises(ValueError):
            reduced.TrapEvaluator(4, 0.01, grid)
        with pytest.raises(ValueError):
            reduced.TrapEvaluator(1, 0.01, grid)


class TestShootingFailure:
    def test_no_trapped_data_with_tiny_ceiling(self):
        # an absurd ceiling makes every trajectory exit, so the bracket
        # narrows to the tolerance without ever trapping
        grid = RadialGrid(512)
        ev = reduced.TrapEvaluator(2, 0.02, grid, s_max=0.2, ceiling=1e-8)
        with pytest.raises(NoTrappedData):
            reduced.shoot_trapped(2, 0.02, grid=grid, evaluator=ev,
                                  ceiling=1e-8, tol=1e-6)
