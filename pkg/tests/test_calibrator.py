import numpy as np
import pytest

from conftest import single_point_apparatus
from footcal import presets
from footcal.apparatus import CalibrationSession, CalibrationTrial, trial_plan
from footcal.calibration import (
    CalibrationConfig,
    calibrate,
    cost,
    cost_gradient,
    refine_gauss_newton,
    solve_linearized,
)
from footcal.errors import DegenerateTrial, SingularSystem
from footcal.experiments import observable_offsets
from footcal.measurement import SensorLayout
from footcal.sensors import AffineParams, IDENTITY_ZETA, ParamVector, RawSample
from footcal.simulate import SimScenario, distribute_forces, simulate_session

FOOT = presets.FOOT_LAYOUT
SHOE = presets.SHOE_LAYOUT


def fd_gradient(zeta, session, cfg, h_scale=1e-6):
    """Central finite differences of the cost; the independent gradient oracle."""
    z = np.asarray(zeta, dtype=float)
    g = np.zeros(8)
    for j in range(8):
        h = h_scale * max(1.0, abs(z[j]))
        zp = z.copy()
        zp[j] += h
        zm = z.copy()
        zm[j] -= h
        g[j] = (cost(zp, session, cfg).total - cost(zm, session, cfg).total) / (2.0 * h)
    return g


def shoe_session(seed=0, noise=0.0, true_params=None, samples=1):
    rng = np.random.default_rng(seed)
    if true_params is None:
        offsets = observable_offsets(SHOE, rng)
        true_params = tuple(
            AffineParams(c=1.0 + rng.uniform(-0.2, 0.2), d=float(offsets[k])) for k in range(4)
        )
    scenario = SimScenario(layout=SHOE, true_params=true_params, noise_sigma=noise, rng_seed=seed)
    apparatus = presets.shoe_apparatus()
    plan = trial_plan(apparatus, presets.SHOE_MASSES)
    session = simulate_session(scenario, apparatus, plan, samples_per_trial=samples)
    return session, true_params


def fsr_session(seed=0, noise=0.0, samples=1):
    """Factory-calibrated module: counts are in force units."""
    rng = np.random.default_rng(seed)
    true_params = tuple(
        AffineParams(c=1.0 + rng.uniform(-0.2, 0.2), d=rng.uniform(-0.5, 0.5)) for _ in range(4)
    )
    scenario = SimScenario(layout=FOOT, true_params=true_params, noise_sigma=noise, rng_seed=seed)
    apparatus = presets.foot_apparatus()
    plan = trial_plan(apparatus, presets.FOOT_MASSES)
    return simulate_session(scenario, apparatus, plan, samples_per_trial=samples), true_params


def random_instance(rng):
    """Arbitrary (session, zeta, cfg) triple; references need not be consistent."""
    x = rng.uniform(30, 70)
    y = rng.uniform(15, 45)
    layout = SensorLayout("random-rect", ((x, y), (x, -y), (-x, y), (-x, -y)), 4 * x * y, 100.0)
    protrusions = tuple(
        ((1, i + 1), (rng.uniform(-x * 0.8, x * 0.8), rng.uniform(-y * 0.8, y * 0.8)))
        for i in range(3)
    )
    apparatus = single_point_apparatus()
    apparatus = apparatus.__class__(
        name="random-apparatus",
        protrusions=protrusions,
        sole_mass_kg=rng.uniform(0.0, 0.3),
        sole_com_mm=(rng.uniform(-10, 10), rng.uniform(-10, 10)),
        cap_mass_kg=rng.uniform(0.0, 0.2),
    )
    trials = tuple(
        CalibrationTrial(
            protrusion=(1, int(rng.integers(1, 4))),
            mass_kg=rng.uniform(0.5, 4.0),
            mean_raw=RawSample(values=tuple(rng.uniform(50, 1000, 4))),
        )
        for _ in range(int(rng.integers(4, 10)))
    )
    session = CalibrationSession(layout=layout, apparatus=apparatus, trials=trials)
    zeta = np.concatenate([rng.uniform(0.5, 2.0, 4), rng.uniform(-2.0, 2.0, 4)])
    zeta0 = ParamVector.from_array(np.concatenate([rng.uniform(0.5, 2.0, 4), rng.uniform(-2.0, 2.0, 4)]))
    cfg = CalibrationConfig(
        w_cop=rng.uniform(0.1, 2.0),
        w_grf=rng.uniform(0.0, 2.0),
        w_zeta=tuple(rng.uniform(0.0, 1.0, 8)) if rng.random() < 0.5 else None,
        reg_weight=10.0 ** rng.uniform(-6, -2),
        zeta0=zeta0,
        regularizer="force_output" if rng.random() < 0.3 else "params",
    )
    return session, zeta, cfg


class TestCost:
    def test_zero_at_truth_on_noiseless_data(self):
        session, true = shoe_session(seed=3)
        cfg = CalibrationConfig(w_zeta=(0.0,) * 8)
        zeta = ParamVector.from_sensor_params(true)
        breakdown = cost(zeta, session, cfg)
        assert breakdown.total < 1e-18
        assert breakdown.cop < 1e-18
        assert breakdown.grf < 1e-18
        assert breakdown.regularizer == 0.0

    def test_regularizer_alone_at_anchor(self):
        session, _ = shoe_session(seed=4)
        cfg = CalibrationConfig(w_cop=0.0, w_grf=0.0, w_zeta=(1.0,) * 8)
        assert cost(cfg.zeta0, session, cfg).total == 0.0

    def test_hand_evaluated_single_trial(self):
        # Reference at the origin with 20 N; measured at (3, 4) with 19 N.
        apparatus = single_point_apparatus(position=(0.0, 0.0), include_sole_weight=False)
        forces = distribute_forces(FOOT, (3.0, 4.0), 19.0)
        session = CalibrationSession(
            layout=FOOT,
            apparatus=apparatus,
            trials=(
                CalibrationTrial(
                    protrusion=(1, 1), mass_kg=20.0 / 9.81, mean_raw=RawSample(values=tuple(forces))
                ),
            ),
        )
        cfg = CalibrationConfig(w_cop=1.0, w_grf=1.0, w_zeta=(0.0,) * 8)
        breakdown = cost(IDENTITY_ZETA, session, cfg)
        assert breakdown.cop == pytest.approx(25.0, rel=1e-9)
        assert breakdown.grf == pytest.approx(1.0, rel=1e-9)
        assert breakdown.total == pytest.approx(26.0, rel=1e-9)

    def test_gated_trial_raises(self):
        apparatus = single_point_apparatus()
        session = CalibrationSession(
            layout=FOOT,
            apparatus=apparatus,
            trials=(
                CalibrationTrial(
                    protrusion=(1, 1), mass_kg=1.0, mean_raw=RawSample(values=(0.01,) * 4)
                ),
            ),
        )
        with pytest.raises(DegenerateTrial):
            cost(IDENTITY_ZETA, session, CalibrationConfig())

    def test_force_output_regularizer_matches_manual_sum(self):
        session, _ = shoe_session(seed=5, noise=2.0)
        cfg = CalibrationConfig(regularizer="force_output", reg_weight=0.01)
        zeta = np.concatenate([np.full(4, 1.1), np.full(4, -0.2)])
        breakdown = cost(zeta, session, cfg)
        raw = np.array([t.mean_raw.values for t in session.trials])
        f = raw * zeta[:4] + zeta[4:]
        f0 = raw * 1.0 + 0.0
        assert breakdown.regularizer == pytest.approx(0.01 * np.sum((f - f0) ** 2), rel=1e-12)


class TestGradient:
    def test_zero_at_noiseless_minimum(self):
        session, true = shoe_session(seed=6)
        cfg = CalibrationConfig(w_zeta=(0.0,) * 8)
        g = cost_gradient(ParamVector.from_sensor_params(true), session, cfg)
        assert np.linalg.norm(g) < 1e-9

    def test_pure_regularizer_gradient(self):
        session, _ = shoe_session(seed=7)
        w = tuple(float(v) for v in np.linspace(0.5, 4.0, 8))
        cfg = CalibrationConfig(w_cop=0.0, w_grf=0.0, w_zeta=w)
        zeta = np.concatenate([np.full(4, 1.2), np.full(4, 0.3)])
        expected = 2.0 * np.array(w) * (zeta - cfg.zeta0.as_array())
        assert np.allclose(cost_gradient(zeta, session, cfg), expected, rtol=1e-12, atol=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            session, zeta, cfg = random_instance(rng)
            g = cost_gradient(zeta, session, cfg)
            g_fd = fd_gradient(zeta, session, cfg)
            err = np.linalg.norm(g - g_fd) / max(np.linalg.norm(g_fd), 1e-12)
            assert err < 1e-5


class TestSolveLinearized:
    def test_exact_recovery_zero_noise(self):
        session, true = shoe_session(seed=8)
        cfg = CalibrationConfig(w_zeta=(1e-8,) * 8)
        zeta = solve_linearized(session, cfg)
        z_true = ParamVector.from_sensor_params(true).as_array()
        assert np.max(np.abs(zeta.as_array() - z_true) / np.abs(z_true)) < 1e-6

    def test_anchor_limit(self):
        session, _ = fsr_session(seed=9, noise=0.2)
        zeta0 = ParamVector.from_array(np.concatenate([np.full(4, 0.9), np.full(4, 0.5)]))
        cfg = CalibrationConfig(w_zeta=(1e12,) * 8, zeta0=zeta0)
        zeta = solve_linearized(session, cfg)
        assert np.max(np.abs(zeta.as_array() - zeta0.as_array())) < 1e-6

    def test_single_repeated_trial_is_singular(self):
        apparatus = single_point_apparatus(position=(10.0, 5.0))
        trial = CalibrationTrial(
            protrusion=(1, 1), mass_kg=2.0, mean_raw=RawSample(values=(100.0, 90.0, 80.0, 70.0))
        )
        session = CalibrationSession(layout=FOOT, apparatus=apparatus, trials=(trial,) * 6)
        cfg = CalibrationConfig(w_zeta=(0.0,) * 8)
        with pytest.raises(SingularSystem):
            solve_linearized(session, cfg)

    def test_inverted_response_rejected(self):
        # Counts that fall as the load grows imply a negative scale.
        apparatus = single_point_apparatus(position=(0.0, 0.0), include_sole_weight=False)
        trials = []
        for mass in (1.0, 2.0, 3.0, 4.0):
            force = mass * 9.81 / 4.0
            raw = tuple(1000.0 - 10.0 * force + 5.0 * k for k in range(4))
            trials.append(
                CalibrationTrial(protrusion=(1, 1), mass_kg=mass, mean_raw=RawSample(values=raw))
            )
        session = CalibrationSession(layout=FOOT, apparatus=apparatus, trials=tuple(trials))
        cfg = CalibrationConfig(w_zeta=(1e-8,) * 8)
        with pytest.raises(SingularSystem):
            solve_linearized(session, cfg)

    def test_needs_a_data_term(self):
        session, _ = shoe_session(seed=10)
        with pytest.raises(ValueError):
            solve_linearized(session, CalibrationConfig(w_cop=0.0, w_grf=0.0, w_zeta=(1.0,) * 8))


class TestGaussNewton:
    def test_converges_immediately_at_truth(self):
        session, true = shoe_session(seed=12)
        cfg = CalibrationConfig(w_zeta=(0.0,) * 8)
        result = refine_gauss_newton(ParamVector.from_sensor_params(true), session, cfg)
        assert result.status == "converged"
        assert result.iterations <= 1
        assert result.final_cost.total < 1e-15

    def test_descends_from_linearized_on_noisy_data(self):
        session, _ = shoe_session(seed=13, noise=2.0, samples=5)
        cfg = CalibrationConfig()
        z_lin = solve_linearized(session, cfg)
        lin_cost = cost(z_lin, session, cfg).total
        result = refine_gauss_newton(z_lin, session, cfg)
        assert result.final_cost.total <= lin_cost + 1e-12

    def test_matches_linearized_when_problem_is_linear(self):
        session, _ = shoe_session(seed=14, noise=1.0, samples=5)
        cfg = CalibrationConfig(w_cop=0.0, w_grf=1.0, w_zeta=(1e-4,) * 8)
        z_lin = solve_linearized(session, cfg)
        result = refine_gauss_newton(z_lin, session, cfg)
        assert np.max(np.abs(result.params.as_array() - z_lin.as_array())) < 1e-9

    def test_stall_returns_best_point(self):
        session, true = shoe_session(seed=15)
        cfg = CalibrationConfig(w_zeta=(0.0,) * 8, convergence_tol=1e-300, max_iterations=5)
        result = refine_gauss_newton(ParamVector.from_sensor_params(true), session, cfg)
        assert result.status in ("no_progress", "max_iterations")
        assert result.final_cost.total <= result.initial_cost.total


class TestCalibrate:
    def test_shoe_mode_zero_noise_cop_exact(self):
        session, true = shoe_session(seed=16)
        tare_anchor = ParamVector.from_sensor_params(
            tuple(AffineParams(p.c * 1.02, p.d + 0.1) for p in true)
        )
        cfg = CalibrationConfig.for_shoe(zeta0=tare_anchor)
        result = calibrate(session, cfg)
        assert result.grf_params == tare_anchor
        after = result.residuals_after
        assert max(r.cop_error_mm for r in after) < 1e-6

    def test_fsr_mode_updates_both_paths(self):
        session, _ = shoe_session(seed=17, noise=1.0)
        result = calibrate(session, CalibrationConfig.for_fsr(w_zeta=(1e-6,) * 8))
        assert result.grf_params == result.params

    def test_never_worse_than_anchor(self):
        rng = np.random.default_rng(18)
        for i in range(10):
            noise = rng.uniform(0.0, 1.5)
            if rng.random() < 0.5:
                session, _ = shoe_session(seed=1000 + i, noise=noise, samples=5)
            else:
                session, _ = fsr_session(seed=1000 + i, noise=noise, samples=5)
            cfg = CalibrationConfig(
                w_cop=rng.uniform(0.5, 2.0),
                w_grf=float(rng.choice([0.0, 1.0])),
                reg_weight=10.0 ** rng.uniform(-6, -3),
                regularizer="force_output" if rng.random() < 0.3 else "params",
            )
            result = calibrate(session, cfg)
            assert result.final_cost.total <= result.initial_cost.total

    @pytest.mark.parametrize(
        "session_builder",
        [
            lambda: shoe_session(seed=19, noise=0.0)[0],
            lambda: fsr_session(seed=19, noise=0.3, samples=5)[0],
        ],
        ids=["noiseless-shoe", "noisy-fsr"],
    )
    def test_order_independence(self, session_builder):
        session = session_builder()
        cfg = CalibrationConfig()
        base = calibrate(session, cfg).params.as_array()
        rng = np.random.default_rng(0)
        for _ in range(3):
            order = rng.permutation(len(session.trials))
            shuffled = CalibrationSession(
                layout=session.layout,
                apparatus=session.apparatus,
                trials=tuple(session.trials[i] for i in order),
            )
            other = calibrate(shuffled, cfg).params.as_array()
            assert np.max(np.abs(other - base)) < 1e-10

    def test_linearized_only_solver(self):
        session, true = shoe_session(seed=20)
        cfg = CalibrationConfig(solver="linearized", w_zeta=(1e-8,) * 8)
        result = calibrate(session, cfg)
        assert result.status == "linearized"
        z_true = ParamVector.from_sensor_params(true).as_array()
        assert np.max(np.abs(result.params.as_array() - z_true)) < 1e-6

    def test_force_output_regularizer_full_run(self):
        session, _ = shoe_session(seed=21, noise=2.0)
        cfg = CalibrationConfig(regularizer="force_output", reg_weight=1e-6)
        result = calibrate(session, cfg)
        assert result.final_cost.total <= result.initial_cost.total

    def test_residual_records_cover_all_trials(self):
        session, _ = shoe_session(seed=22, noise=1.0)
        result = calibrate(session, CalibrationConfig())
        assert len(result.residuals_before) == len(session.trials)
        assert len(result.residuals_after) == len(session.trials)
        assert result.residuals_before[0].protrusion == session.trials[0].protrusion


class TestConfigValidation:
    def test_weight_vector_length(self):
        with pytest.raises(ValueError):
            CalibrationConfig(w_zeta=(1.0,) * 7)

    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError):
            CalibrationConfig(w_cop=-1.0)
        with pytest.raises(ValueError):
            CalibrationConfig(w_zeta=(-1.0,) * 8)

    def test_solver_and_regularizer_names(self):
        with pytest.raises(ValueError):
            CalibrationConfig(solver="newton")
        with pytest.raises(ValueError):
            CalibrationConfig(regularizer="ridge")

    def test_shoe_constructor(self):
        cfg = CalibrationConfig.for_shoe(zeta0=IDENTITY_ZETA)
        assert cfg.w_grf == 0.0
        assert cfg.grf_from_anchor
