"""Static-equilibrium sensor simulator: the ground-truth oracle for tests.

Four supports under a rigid plate leave the force distribution statically
indeterminate (four unknowns, three equilibrium equations), so a
distribution rule closes the system: bilinear interpolation on axis-aligned
rectangular layouts (non-negative, exact, unique), minimum-norm otherwise.
Synthetic raw readings invert each sensor's true affine map and then apply
deadband, Gaussian count noise, and quantization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull

from .apparatus import (
    ApparatusConfig,
    CalibrationSession,
    CalibrationTrial,
    ProtrusionId,
    STANDARD_GRAVITY,
    reference_load,
)
from .errors import CopOutsideSupport, UnstableStance
from .measurement import LoadEstimate, ModulePose, SensorLayout
from .sensors import SENSORS_PER_MODULE, AffineParams, RawSample, invert_affine

_BILINEAR_SLACK = 1e-12


@dataclass
class SimScenario:
    """One simulated module: layout, true sensor maps, and noise model.

    The scenario owns its random stream; results are reproducible for a
    fixed seed and call order.  deadband_force models sensors whose output
    stays at the no-load level until the applied force reaches a threshold.
    """

    layout: SensorLayout
    true_params: tuple[AffineParams, ...]
    noise_sigma: float = 0.0
    quantization_step: float = 0.0
    deadband_force: float = 0.0
    rng_seed: int = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.true_params = tuple(self.true_params)
        if len(self.true_params) != SENSORS_PER_MODULE:
            raise ValueError(f"expected {SENSORS_PER_MODULE} true parameter sets")
        if self.noise_sigma < 0.0 or self.quantization_step < 0.0 or self.deadband_force < 0.0:
            raise ValueError("noise, quantization, and deadband must be non-negative")
        self.reset_rng()

    def reset_rng(self):
        """Rewind the random stream to the seeded start."""
        self.rng = np.random.default_rng(self.rng_seed)


@dataclass(frozen=True)
class Payload:
    """Extra mass carried by the robot, acting at a known world point."""

    mass_kg: float
    com_mm: tuple[float, float]


@dataclass(frozen=True)
class StanceDescription:
    """A static double-support posture with its ground-truth load.

    com_projection_mm is the system CoM projected onto the ground plane;
    total_weight_n its gravitational force.  An optional payload shifts the
    reference by the mass-weighted mean.
    """

    left_pose: ModulePose
    right_pose: ModulePose
    com_projection_mm: tuple[float, float]
    total_weight_n: float
    payload: Payload | None = None
    gravity: float = STANDARD_GRAVITY

    def __post_init__(self):
        if not (self.total_weight_n > 0.0):
            raise ValueError("total weight must be positive")

    def reference(self) -> LoadEstimate:
        """Reference CoP/GRF including any payload."""
        if self.payload is None:
            return LoadEstimate(cop=self.com_projection_mm, grf=self.total_weight_n)
        g_payload = self.payload.mass_kg * self.gravity
        total = self.total_weight_n + g_payload
        cop = (
            (self.total_weight_n * self.com_projection_mm[0] + g_payload * self.payload.com_mm[0]) / total,
            (self.total_weight_n * self.com_projection_mm[1] + g_payload * self.payload.com_mm[1]) / total,
        )
        return LoadEstimate(cop=cop, grf=total)


@dataclass(frozen=True)
class StanceReading:
    """Averaged raw sample per module plus the stance's reference load."""

    left_raw: RawSample
    right_raw: RawSample
    reference: LoadEstimate


def _rectangle_axes(positions: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Return (xs, ys) spanning an axis-aligned rectangle, or None."""
    xs = np.unique(positions[:, 0])
    ys = np.unique(positions[:, 1])
    if len(xs) != 2 or len(ys) != 2:
        return None
    corners = {(x, y) for x in xs for y in ys}
    actual = {(p[0], p[1]) for p in positions}
    if corners != actual:
        return None
    return xs, ys


def distribute_forces(layout: SensorLayout, cop: Sequence[float], grf: float) -> np.ndarray:
    """Split a total force at a CoP into four non-negative sensor forces.

    Axis-aligned rectangular layouts use bilinear plate weights, which
    satisfy force and moment balance exactly and stay non-negative for any
    CoP inside the rectangle.  Other layouts fall back to the minimum-norm
    solution of the 3x4 equilibrium system, which can turn negative near
    the support boundary.

    Raises:
        CopOutsideSupport: the rule has no non-negative solution at this CoP.
    """
    if not (grf > 0.0):
        raise ValueError(f"grf must be positive, got {grf}")
    pos = layout.position_array()
    cx, cy = float(cop[0]), float(cop[1])
    rect = _rectangle_axes(pos)
    if rect is not None:
        xs, ys = rect
        u = (cx - xs[0]) / (xs[1] - xs[0])
        v = (cy - ys[0]) / (ys[1] - ys[0])
        if u < -_BILINEAR_SLACK or u > 1.0 + _BILINEAR_SLACK or v < -_BILINEAR_SLACK or v > 1.0 + _BILINEAR_SLACK:
            raise CopOutsideSupport(
                f"cop ({cx:g}, {cy:g}) outside the sensor rectangle "
                f"x[{xs[0]:g},{xs[1]:g}] y[{ys[0]:g},{ys[1]:g}]"
            )
        u = min(max(u, 0.0), 1.0)
        v = min(max(v, 0.0), 1.0)
        forces = np.empty(SENSORS_PER_MODULE)
        for k, (px, py) in enumerate(pos):
            wu = u if px == xs[1] else 1.0 - u
            wv = v if py == ys[1] else 1.0 - v
            forces[k] = grf * wu * wv
        return forces
    # General layout: minimum-norm equilibrium solution.
    a = np.vstack([np.ones(SENSORS_PER_MODULE), pos[:, 0], pos[:, 1]])
    b = np.array([grf, grf * cx, grf * cy])
    forces, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.min(forces) < -1e-9 * max(grf, 1.0):
        raise CopOutsideSupport(
            f"minimum-norm distribution for cop ({cx:g}, {cy:g}) "
            f"requires a negative force ({np.min(forces):.3g} N)"
        )
    return np.maximum(forces, 0.0)


def synthesize_reading(scenario: SimScenario, forces: Sequence[float]) -> RawSample:
    """Raw counts a module would report for the given true sensor forces.

    Per sensor: forces under the deadband pin the clean reading at the
    no-load level, otherwise the true affine map is inverted; Gaussian
    count noise and quantization are then applied in that order.
    """
    f = np.asarray(forces, dtype=float)
    if f.shape != (SENSORS_PER_MODULE,):
        raise ValueError(f"expected {SENSORS_PER_MODULE} forces, got shape {f.shape}")
    raw = np.empty(SENSORS_PER_MODULE)
    for k, params in enumerate(scenario.true_params):
        if scenario.deadband_force > 0.0 and f[k] < scenario.deadband_force:
            raw[k] = params.noload_counts
        else:
            raw[k] = invert_affine(params, float(f[k]))
    if scenario.noise_sigma > 0.0:
        raw = raw + scenario.rng.normal(0.0, scenario.noise_sigma, SENSORS_PER_MODULE)
    if scenario.quantization_step > 0.0:
        raw = np.round(raw / scenario.quantization_step) * scenario.quantization_step
    return RawSample(values=tuple(raw))


def _mean_reading(scenario: SimScenario, forces: np.ndarray, samples: int) -> tuple[RawSample, list[RawSample]]:
    if samples < 1:
        raise ValueError("need at least one sample per hold")
    readings = [synthesize_reading(scenario, forces) for _ in range(samples)]
    mean = np.mean([r.as_array() for r in readings], axis=0)
    return RawSample(values=tuple(mean)), readings


def simulate_session(
    scenario: SimScenario,
    apparatus: ApparatusConfig,
    plan: Sequence[tuple[ProtrusionId, float]],
    samples_per_trial: int = 1,
    sample_sink: list | None = None,
) -> CalibrationSession:
    """Run a full calibration protocol against the simulated module.

    Each plan entry places a known weight on a protrusion, distributes the
    reference load over the sensors, and records the mean of
    ``samples_per_trial`` synthesized readings.  When ``sample_sink`` is a
    list, the individual readings of each trial are appended to it (one
    list per trial), for stream-log emission.

    Raises:
        CopOutsideSupport: a plan entry's reference CoP falls outside the
            sensor support.
    """
    trials = []
    for pid, mass in plan:
        ref = reference_load(apparatus, pid, mass)
        try:
            forces = distribute_forces(scenario.layout, ref.cop, ref.grf)
        except CopOutsideSupport as exc:
            raise CopOutsideSupport(f"protrusion {pid}, mass {mass:g} kg: {exc}") from exc
        mean, readings = _mean_reading(scenario, forces, samples_per_trial)
        if sample_sink is not None:
            sample_sink.append(readings)
        trials.append(
            CalibrationTrial(
                protrusion=pid, mass_kg=mass, mean_raw=mean, sample_count=samples_per_trial
            )
        )
    return CalibrationSession(layout=scenario.layout, apparatus=apparatus, trials=tuple(trials))


def _support_hull_contains(points: np.ndarray, p: np.ndarray, tol: float = 1e-9) -> bool:
    hull = ConvexHull(points)
    return bool(np.all(hull.equations[:, :2] @ p + hull.equations[:, 2] <= tol))


def split_stance_load(
    stance: StanceDescription, reference: LoadEstimate
) -> tuple[tuple[float, tuple[float, float]], tuple[float, tuple[float, float]]]:
    """Lever-rule split of the stance load between the two modules.

    The reference CoP projects onto the line joining the module reference
    points; the projection parameter (clamped to the segment) sets the force
    share, and the off-line offset is carried by both module CoPs so the
    combined force and moment match the reference exactly.  Returns
    ((grf, world cop) left, (grf, world cop) right).
    """
    p_l = np.array(stance.left_pose.translation_mm)
    p_r = np.array(stance.right_pose.translation_mm)
    cop = np.array(reference.cop)
    axis = p_r - p_l
    norm2 = float(axis @ axis)
    if norm2 < 1e-12:
        s = 0.5
    else:
        s = float((cop - p_l) @ axis / norm2)
    s = min(max(s, 0.0), 1.0)
    mix = (1.0 - s) * p_l + s * p_r
    offset = cop - mix
    left = ((1.0 - s) * reference.grf, tuple(p_l + offset))
    right = (s * reference.grf, tuple(p_r + offset))
    return left, right


def simulate_stance(
    scenarios: tuple[SimScenario, SimScenario],
    stance: StanceDescription,
    samples: int = 1,
) -> StanceReading:
    """Synthesize raw readings for a static double-support posture.

    The total load splits between the modules by the lever rule along the
    line joining the module reference points, then distributes within each
    module; each module's mean raw sample is averaged over ``samples``
    readings.  An unloaded module reads its no-load levels.

    Raises:
        UnstableStance: reference CoP outside the eight-sensor support hull.
        CopOutsideSupport: a module's share lands outside its own support.
    """
    left_scn, right_scn = scenarios
    reference = stance.reference()
    poses = (stance.left_pose, stance.right_pose)
    world_points = np.array(
        [
            pose.to_world(p)
            for scn, pose in zip(scenarios, poses)
            for p in scn.layout.positions
        ]
    )
    cop = np.array(reference.cop)
    if not _support_hull_contains(world_points, cop):
        raise UnstableStance(
            f"reference cop ({cop[0]:g}, {cop[1]:g}) lies outside the support polygon"
        )
    shares = split_stance_load(stance, reference)
    raws = []
    for scn, pose, (grf, world_cop) in zip(scenarios, poses, shares):
        if grf <= 1e-12:
            forces = np.zeros(SENSORS_PER_MODULE)
        else:
            forces = distribute_forces(scn.layout, pose.to_local(world_cop), grf)
        mean, _ = _mean_reading(scn, forces, samples)
        raws.append(mean)
    return StanceReading(left_raw=raws[0], right_raw=raws[1], reference=reference)
