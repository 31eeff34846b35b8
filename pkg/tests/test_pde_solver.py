import numpy as np
import pytest

from colonykit import (
    AsymptoticMode,
    BlowUpError,
    ExplicitField,
    Field,
    LogisticDecay,
    ModelParams,
    PositivityLossError,
    SimConfig,
    UniformPerturbed,
    count_peaks,
    dispersion_roots,
    eigenvalue_lambda,
    modal_spectrum,
    simulate,
    stable_dt,
    stationary_residual,
    step,
)
from colonykit.pde_solver import _imex_step, initial_field

REF = LogisticDecay(steepness=8.0, center=1.0)


def params(sigma=0.3):
    return ModelParams(D=1.0, sigma=sigma, l=20.0)


def uniform_field(value=1.0, n=64):
    return Field(u=np.full(n + 1, value), v=np.full(n + 1, value), l=20.0)


def cosine_field(j, amplitude, n=256, l=20.0):
    x = np.linspace(0.0, l, n + 1)
    pattern = amplitude * np.cos(np.pi * j * x / l)
    return Field(u=1.0 + pattern, v=1.0 + pattern, l=l)


class TestField:
    def test_grid_properties(self):
        f = uniform_field(n=64)
        assert f.n == 64
        assert f.h == pytest.approx(20.0 / 64)
        assert f.x[0] == 0.0 and f.x[-1] == 20.0

    def test_rejects_nonfinite(self):
        u = np.ones(65)
        u[3] = np.nan
        with pytest.raises(ValueError):
            Field(u=u, v=np.ones(65), l=20.0)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            Field(u=np.ones(65), v=np.ones(64), l=20.0)


class TestStep:
    def test_uniform_state_is_fixed_point(self):
        f = uniform_field(1.0)
        g = step(f, params(), REF, dt=1e-3)
        np.testing.assert_array_equal(g.u, f.u)
        np.testing.assert_array_equal(g.v, f.v)

    def test_extinct_state_is_fixed_point(self):
        f = uniform_field(0.0)
        g = step(f, params(), REF, dt=1e-3)
        np.testing.assert_array_equal(g.u, f.u)
        assert g.is_extinct

    def test_mass_conserved_without_growth(self):
        # with sigma = 0 the density equation is in divergence form, so the
        # trapezoidal mass is preserved to rounding over many steps
        p = params(sigma=0.0)
        n = 128
        rng = np.random.default_rng(1)
        u = 1.0 + 0.1 * rng.uniform(-1, 1, n + 1)
        v = 1.0 + 0.1 * rng.uniform(-1, 1, n + 1)
        h = 20.0 / n
        wts = np.full(n + 1, h)
        wts[0] *= 0.5
        wts[-1] *= 0.5
        mass0 = wts @ u
        lap = np.empty(n + 1)
        ab = np.empty((3, n + 1))
        for _ in range(10_000):
            rv = REF.evaluate(v, 0)
            dt = stable_dt(v, REF, h)
            u, v = _imex_step(u, v, rv, dt, h, p.D, p.sigma, lap, ab)
        assert abs(wts @ u - mass0) < 1e-12 * abs(mass0) * 100

    def test_positivity_loss_detected(self):
        # a huge explicit step drives the density negative
        f = cosine_field(6, 0.5, n=64)
        with pytest.raises((PositivityLossError, BlowUpError)):
            g = f
            for _ in range(50):
                g = step(g, params(sigma=0.3), REF, dt=0.5)

    def test_blow_up_detected(self):
        f = uniform_field(50.0)
        with pytest.raises(BlowUpError):
            g = f
            for _ in range(100):
                g = step(g, params(sigma=1.0), REF, dt=0.9)

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            step(uniform_field(), params(), REF, dt=0.0)


class TestModalSpectrum:
    def test_pure_mode(self):
        f = cosine_field(6, 0.01)
        spec = modal_spectrum(f)
        assert spec.dominant == 6
        assert spec.amplitude(6) == pytest.approx(0.01, rel=1e-6)
        others = [abs(spec.amplitude(j)) for j in range(1, 20) if j != 6]
        assert max(others) < 1e-12

    def test_uniform_field(self):
        spec = modal_spectrum(uniform_field())
        assert spec.dominant == 0
        assert np.max(np.abs(spec.coefficients)) < 1e-13

    def test_mixture_argmax(self):
        x = np.linspace(0.0, 20.0, 257)
        u = 1.0 + 0.01 * np.cos(4 * np.pi * x / 20) + 0.03 * np.cos(8 * np.pi * x / 20)
        f = Field(u=u, v=np.ones_like(u), l=20.0)
        assert modal_spectrum(f).dominant == 8


class TestCountPeaks:
    def test_mode6_pattern(self):
        assert count_peaks(cosine_field(6, 0.02)) == 3.0

    def test_mode4_pattern(self):
        assert count_peaks(cosine_field(4, 0.02)) == 2.0

    def test_phase_flip_keeps_count(self):
        assert count_peaks(cosine_field(6, -0.02)) == 3.0

    def test_uniform_is_flat(self):
        assert count_peaks(uniform_field()) == 0.0

    def test_prominence_filters_ripples(self):
        x = np.linspace(0.0, 20.0, 513)
        u = 1.0 + 0.1 * np.cos(4 * np.pi * x / 20) + 0.002 * np.cos(16 * np.pi * x / 20)
        f = Field(u=u, v=np.ones_like(u), l=20.0)
        assert count_peaks(f) == 2.0

    def test_rejects_bad_prominence(self):
        with pytest.raises(ValueError):
            count_peaks(cosine_field(6, 0.02), prominence=-1.0)


class TestStationaryResidual:
    def test_uniform_state(self):
        ru, rv = stationary_residual(uniform_field(), params(), REF)
        assert ru == 0.0 and rv == 0.0

    def test_asymptotic_field_is_nearly_steady(self):
        from colonykit import expansion_coefficients, evaluate_approximate_steady_state

        e = expansion_coefficients(6, params(), REF)
        f = evaluate_approximate_steady_state(e, 0.01, np.linspace(0.0, 20.0, 4097))
        p_eps = ModelParams(D=1.0, sigma=e.sigma0 + 1e-4 * e.sigma2, l=20.0)
        ru, rv = stationary_residual(f, p_eps, REF)
        assert max(ru, rv) < 1e-3  # third-order small


class TestInitialConditions:
    def test_uniform_perturbed_determinism(self):
        f1 = initial_field(UniformPerturbed(0.01, seed=3), params(), REF, 64)
        f2 = initial_field(UniformPerturbed(0.01, seed=3), params(), REF, 64)
        np.testing.assert_array_equal(f1.u, f2.u)
        f3 = initial_field(UniformPerturbed(0.01, seed=4), params(), REF, 64)
        assert not np.array_equal(f1.u, f3.u)

    def test_asymptotic_mode_scaling(self):
        f1 = initial_field(AsymptoticMode(j=4, epsilon=0.01, u1_scale=1.0), params(), REF, 128)
        f2 = initial_field(AsymptoticMode(j=4, epsilon=0.01, u1_scale=1.2), params(), REF, 128)
        from colonykit import expansion_coefficients

        e = expansion_coefficients(4, params(), REF)
        # scaling acts on the leading u-term only
        diff = f2.u - f1.u
        x = np.linspace(0.0, 20.0, 129)
        np.testing.assert_allclose(
            diff, 0.2 * 0.01 * e.a * np.cos(4 * np.pi * x / 20.0), atol=1e-14
        )
        np.testing.assert_array_equal(f1.v, f2.v)

    def test_explicit_field_resolution_check(self):
        f = uniform_field(n=32)
        with pytest.raises(ValueError):
            initial_field(ExplicitField(f), params(), REF, 64)


class TestSimulate:
    def test_stable_regime_returns_to_uniform(self):
        cfg = SimConfig(
            params=params(sigma=0.6), motility=REF,
            init=UniformPerturbed(amplitude=0.01, seed=0),
            n=128, t_end=500.0, steady_tol=1e-8, snapshot_every=1.0,
        )
        traj = simulate(cfg)
        assert traj.steady
        assert not traj.t_end_reached
        assert np.max(np.abs(traj.final.u - 1)) < 1e-6
        assert np.max(np.abs(traj.final.v - 1)) < 1e-6
        # the seeded noise decays: the run ends with no established pattern
        assert traj.dominant_modes[-1] is None
        mode_events = [ev for ev in traj.events if ev.kind == "dominant_mode"]
        assert mode_events and mode_events[-1].new is None

    def test_snapshot_times_strictly_increasing(self):
        cfg = SimConfig(
            params=params(sigma=0.6), motility=REF,
            init=UniformPerturbed(amplitude=0.01, seed=0),
            n=64, t_end=5.0, steady_tol=1e-12, snapshot_every=0.5,
        )
        traj = simulate(cfg)
        assert np.all(np.diff(traj.times) > 0)
        assert traj.times[0] == 0.0
        assert traj.t_end_reached

    def test_mode6_seed_stays_mode6(self):
        cfg = SimConfig(
            params=params(sigma=0.32), motility=REF,
            init=AsymptoticMode(j=6, epsilon=0.01), n=128,
            t_end=400.0, steady_tol=1e-8, snapshot_every=1.0,
        )
        traj = simulate(cfg)
        assert traj.steady
        assert modal_spectrum(traj.final).dominant == 6
        assert count_peaks(traj.final) == 3.0
        # steady detection implies a small stationary residual
        ru, rv = stationary_residual(traj.final, params(sigma=0.32), REF)
        assert max(ru, rv) <= 10 * cfg.steady_tol

    def test_growth_rate_matches_dispersion_root(self):
        # linear-regime fidelity on the growing eigenvector of mode 6
        p = params(sigma=0.3)
        lam = eigenvalue_lambda(6, p.l)
        rho = dispersion_roots(lam, p, REF)[0].real
        n = 512
        x = np.linspace(0.0, p.l, n + 1)
        evec = 1.0 + p.D * lam + rho
        f = Field(
            u=1.0 + 1e-4 * evec * np.cos(6 * np.pi * x / p.l),
            v=1.0 + 1e-4 * np.cos(6 * np.pi * x / p.l),
            l=p.l,
        )
        cfg = SimConfig(params=p, motility=REF, init=ExplicitField(f), n=n,
                        t_end=1.0, steady_tol=1e-14, snapshot_every=0.1)
        traj = simulate(cfg)
        coef = [modal_spectrum(traj.field(i)).amplitude(6) for i in range(len(traj.times))]
        fitted = np.polyfit(traj.times, np.log(np.abs(coef)), 1)[0]
        assert fitted == pytest.approx(rho, rel=0.02)

    def test_positivity_never_lost_in_normal_run(self):
        cfg = SimConfig(
            params=params(sigma=0.3), motility=REF,
            init=AsymptoticMode(j=6, epsilon=0.02), n=64,
            t_end=50.0, steady_tol=1e-10, snapshot_every=1.0,
        )
        traj = simulate(cfg)
        assert np.min(traj.u_history) > 0
        assert np.min(traj.v_history) > 0

    @pytest.mark.slow
    def test_grid_convergence_of_steady_pattern(self):
        # doubling the resolution moves the converged pattern by O(h^2)
        finals = {}
        for n in (256, 512):
            cfg = SimConfig(
                params=params(sigma=0.32), motility=REF,
                init=AsymptoticMode(j=6, epsilon=0.01), n=n,
                t_end=400.0, steady_tol=1e-8, snapshot_every=1.0,
            )
            finals[n] = simulate(cfg).final
        coarse = finals[256].u
        fine = finals[512].u[::2]
        assert np.max(np.abs(coarse - fine)) <= 1e-3
