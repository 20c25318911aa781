import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from footcal import presets
from footcal.errors import InsufficientLoad
from footcal.measurement import (
    EPS_TOTAL_FORCE,
    EstimationChannel,
    LoadEstimate,
    ModulePose,
    SensorLayout,
    combine_double_support,
    compute_load,
    estimate_double_support,
    estimate_load,
    sensor_forces,
)
from footcal.sensors import AffineParams, IDENTITY_PARAMS, RawSample

FOOT = presets.FOOT_LAYOUT

force_arrays = st.lists(st.floats(0.0, 100.0), min_size=4, max_size=4).filter(
    lambda f: sum(f) > EPS_TOTAL_FORCE
)


class TestSensorForces:
    def test_identity(self):
        f = sensor_forces([IDENTITY_PARAMS] * 4, RawSample(values=(1, 2, 3, 4)))
        assert np.allclose(f, [1, 2, 3, 4])

    def test_uniform_affine(self):
        params = [AffineParams(0.5, 1.0)] * 4
        f = sensor_forces(params, RawSample(values=(2, 2, 2, 2)))
        assert np.allclose(f, [2, 2, 2, 2])

    def test_load_cell_style(self):
        params = [AffineParams(0.1, -1.2)] * 4
        f = sensor_forces(params, RawSample(values=(512, 512, 512, 512)))
        assert np.allclose(f, [50, 50, 50, 50])


class TestComputeLoad:
    def test_symmetric(self):
        load = compute_load(FOOT, [5, 5, 5, 5])
        assert load.cop == pytest.approx((0.0, 0.0), abs=1e-12)
        assert load.grf == pytest.approx(20.0)

    def test_single_support_point(self):
        load = compute_load(FOOT, [10, 0, 0, 0])
        assert load.cop == pytest.approx((50.0, 26.5))
        assert load.grf == pytest.approx(10.0)

    def test_hand_evaluation(self):
        load = compute_load(FOOT, [3, 1, 1, 1])
        assert load.cop[0] == pytest.approx(100.0 / 6.0, rel=1e-12)
        assert load.cop[1] == pytest.approx(53.0 / 6.0, rel=1e-12)
        assert load.grf == pytest.approx(6.0)

    def test_unloaded_module_rejected(self):
        with pytest.raises(InsufficientLoad):
            compute_load(FOOT, [0.02, 0.02, 0.02, 0.02])
        with pytest.raises(InsufficientLoad):
            compute_load(FOOT, [0.1, 0.0, 0.0, 0.0])  # exactly at the gate

    def test_negative_individual_forces_allowed(self):
        load = compute_load(FOOT, [5.0, -0.2, 5.0, 5.0])
        assert load.grf == pytest.approx(14.8)

    @given(force_arrays)
    def test_cop_inside_hull_for_nonnegative_forces(self, forces):
        load = compute_load(FOOT, forces)
        assert -50.0 - 1e-9 <= load.cop[0] <= 50.0 + 1e-9
        assert -26.5 - 1e-9 <= load.cop[1] <= 26.5 + 1e-9

    @given(force_arrays, st.floats(0.1, 50.0))
    def test_scale_invariance(self, forces, lam):
        base = compute_load(FOOT, forces)
        scaled = compute_load(FOOT, [lam * f for f in forces])
        assert scaled.cop[0] == pytest.approx(base.cop[0], rel=1e-9, abs=1e-9)
        assert scaled.cop[1] == pytest.approx(base.cop[1], rel=1e-9, abs=1e-9)
        assert scaled.grf == pytest.approx(lam * base.grf, rel=1e-12)


class TestModulePose:
    def test_world_local_round_trip(self):
        pose = ModulePose(translation_mm=(12.0, -7.0), yaw_rad=0.7)
        p = (31.0, -4.5)
        back = pose.to_local(pose.to_world(p))
        assert back == pytest.approx(p, abs=1e-12)

    def test_pure_translation(self):
        pose = ModulePose(translation_mm=(10.0, 20.0))
        assert pose.to_world((1.0, 2.0)) == pytest.approx((11.0, 22.0))


class TestCombineDoubleSupport:
    def test_symmetric_stance(self):
        left = (LoadEstimate(cop=(0, 0), grf=10.0), ModulePose(translation_mm=(-60, 0)))
        right = (LoadEstimate(cop=(0, 0), grf=10.0), ModulePose(translation_mm=(60, 0)))
        load = combine_double_support([left, right])
        assert load.cop == pytest.approx((0.0, 0.0), abs=1e-12)
        assert load.grf == pytest.approx(20.0)

    def test_single_support(self):
        left = (LoadEstimate(cop=(0, 0), grf=20.0), ModulePose(translation_mm=(-60, 0)))
        right = (LoadEstimate(cop=(0, 0), grf=0.0), ModulePose(translation_mm=(60, 0)))
        load = combine_double_support([left, right])
        assert load.cop == pytest.approx((-60.0, 0.0))
        assert load.grf == pytest.approx(20.0)

    def test_weighted_mean(self):
        left = (LoadEstimate(cop=(0, 0), grf=10.0), ModulePose(translation_mm=(-60, 0)))
        right = (LoadEstimate(cop=(0, 0), grf=30.0), ModulePose(translation_mm=(60, 0)))
        load = combine_double_support([left, right])
        assert load.cop == pytest.approx((30.0, 0.0))
        assert load.grf == pytest.approx(40.0)

    def test_both_unloaded_rejected(self):
        left = (LoadEstimate(cop=(0, 0), grf=0.0), ModulePose())
        right = (LoadEstimate(cop=(0, 0), grf=0.05), ModulePose())
        with pytest.raises(InsufficientLoad):
            combine_double_support([left, right])

    def _random_stance(self, rng):
        poses = [
            ModulePose(translation_mm=tuple(rng.uniform(-100, 100, 2)), yaw_rad=rng.uniform(-math.pi, math.pi))
            for _ in range(2)
        ]
        forces = [rng.uniform(0.5, 30.0, 4) for _ in range(2)]
        return poses, forces

    def test_eight_sensor_equivalence(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            poses, forces = self._random_stance(rng)
            combined = combine_double_support(
                [(compute_load(FOOT, f), pose) for f, pose in zip(forces, poses)]
            )
            world_pos = np.array(
                [pose.to_world(p) for pose in poses for p in FOOT.positions]
            )
            all_forces = np.concatenate(forces)
            grf = all_forces.sum()
            cop = all_forces @ world_pos / grf
            assert combined.grf == pytest.approx(grf, rel=1e-12)
            assert combined.cop[0] == pytest.approx(cop[0], rel=1e-12, abs=1e-12)
            assert combined.cop[1] == pytest.approx(cop[1], rel=1e-12, abs=1e-12)

    @given(
        st.floats(-200, 200), st.floats(-200, 200),
        force_arrays, force_arrays,
    )
    def test_translation_equivariance(self, vx, vy, f_left, f_right):
        poses = (ModulePose(translation_mm=(-60, 5), yaw_rad=0.3),
                 ModulePose(translation_mm=(55, -10), yaw_rad=-0.2))
        base = combine_double_support(
            [(compute_load(FOOT, f), p) for f, p in zip((f_left, f_right), poses)]
        )
        moved = [
            ModulePose(translation_mm=(p.translation_mm[0] + vx, p.translation_mm[1] + vy), yaw_rad=p.yaw_rad)
            for p in poses
        ]
        shifted = combine_double_support(
            [(compute_load(FOOT, f), p) for f, p in zip((f_left, f_right), moved)]
        )
        assert shifted.cop[0] == pytest.approx(base.cop[0] + vx, rel=1e-9, abs=1e-6)
        assert shifted.cop[1] == pytest.approx(base.cop[1] + vy, rel=1e-9, abs=1e-6)
        assert shifted.grf == pytest.approx(base.grf, rel=1e-12)


class TestEstimate:
    def test_separate_grf_path(self):
        cop_params = [AffineParams(1.0, 0.0)] * 4
        grf_params = [AffineParams(2.0, 1.0)] * 4
        sample = RawSample(values=(5, 5, 5, 5))
        load = estimate_load(FOOT, cop_params, grf_params, sample)
        assert load.cop == pytest.approx((0.0, 0.0), abs=1e-12)
        assert load.grf == pytest.approx(4 * (2 * 5 + 1))

    def test_same_params_both_paths(self):
        params = [AffineParams(0.5, 0.25)] * 4
        sample = RawSample(values=(4, 4, 4, 4))
        load = estimate_load(FOOT, params, params, sample)
        direct = compute_load(FOOT, sensor_forces(params, sample))
        assert load == direct

    def test_double_support_gates_unloaded_module(self):
        identity = (IDENTITY_PARAMS,) * 4
        channels = (
            EstimationChannel(layout=FOOT, cop_params=identity, grf_params=identity,
                              pose=ModulePose(translation_mm=(0, 50))),
            EstimationChannel(layout=FOOT, cop_params=identity, grf_params=identity,
                              pose=ModulePose(translation_mm=(0, -50))),
        )
        samples = (RawSample(values=(5, 5, 5, 5)), RawSample(values=(0.01, 0.01, 0.01, 0.01)))
        load = estimate_double_support(channels, samples)
        assert load.cop == pytest.approx((0.0, 50.0))
        assert load.grf == pytest.approx(20.0)
        with pytest.raises(InsufficientLoad):
            estimate_double_support(channels, (samples[1], samples[1]))


class TestLayoutValidation:
    def test_coincident_positions_rejected(self):
        with pytest.raises(ValueError):
            SensorLayout("bad", ((0, 0), (0, 0), (1, 0), (0, 1)), 100.0, 10.0)

    def test_positive_area_and_range(self):
        with pytest.raises(ValueError):
            SensorLayout("bad", FOOT.positions, 0.0, 10.0)
        with pytest.raises(ValueError):
            SensorLayout("bad", FOOT.positions, 100.0, -1.0)
