"""Center of pressure and ground reaction force from calibrated sensor readings.

Single-module estimates are force-weighted means over the four sensor
positions; double support combines two modules in a shared world frame
(right-handed, x forward, y left, millimeters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InsufficientLoad
from .sensors import SENSORS_PER_MODULE, AffineParams, RawSample

# Minimum total force in N for a defined CoP; below this the module counts
# as unloaded.
EPS_TOTAL_FORCE = 0.1


@dataclass(frozen=True)
class SensorLayout:
    """Measuring-point geometry of one module, in its local frame.

    positions: the four sensor measuring points in mm.
    sensing_area_mm2: area of the support rectangle spanned by the sensors.
    full_scale_n: sum of the per-sensor force ranges.
    """

    name: str
    positions: tuple[tuple[float, float], ...]
    sensing_area_mm2: float
    full_scale_n: float

    def __post_init__(self):
        pos = tuple((float(x), float(y)) for x, y in self.positions)
        if len(pos) != SENSORS_PER_MODULE:
            raise ValueError(f"layout needs {SENSORS_PER_MODULE} sensor positions, got {len(pos)}")
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                if pos[i] == pos[j]:
                    raise ValueError(f"sensor positions {i + 1} and {j + 1} coincide at {pos[i]}")
        if not (self.sensing_area_mm2 > 0.0):
            raise ValueError("sensing area must be positive")
        if not (self.full_scale_n > 0.0):
            raise ValueError("full-scale force must be positive")
        object.__setattr__(self, "positions", pos)

    def position_array(self) -> np.ndarray:
        return np.array(self.positions, dtype=float)


@dataclass(frozen=True)
class LoadEstimate:
    """A (CoP, GRF) pair; used for measured values and references alike."""

    cop: tuple[float, float]
    grf: float

    def __post_init__(self):
        cop = (float(self.cop[0]), float(self.cop[1]))
        if not all(math.isfinite(v) for v in cop) or not math.isfinite(self.grf):
            raise ValueError(f"load estimate must be finite, got cop={cop}, grf={self.grf}")
        object.__setattr__(self, "cop", cop)
        object.__setattr__(self, "grf", float(self.grf))


@dataclass(frozen=True)
class ModulePose:
    """Planar placement of a module's local frame in the world ground frame."""

    translation_mm: tuple[float, float] = (0.0, 0.0)
    yaw_rad: float = 0.0

    def __post_init__(self):
        t = (float(self.translation_mm[0]), float(self.translation_mm[1]))
        if not all(math.isfinite(v) for v in t) or not math.isfinite(self.yaw_rad):
            raise ValueError("pose must be finite")
        object.__setattr__(self, "translation_mm", t)
        object.__setattr__(self, "yaw_rad", float(self.yaw_rad))

    def to_world(self, point: Sequence[float]) -> tuple[float, float]:
        c, s = math.cos(self.yaw_rad), math.sin(self.yaw_rad)
        x, y = float(point[0]), float(point[1])
        return (
            self.translation_mm[0] + c * x - s * y,
            self.translation_mm[1] + s * x + c * y,
        )

    def to_local(self, point: Sequence[float]) -> tuple[float, float]:
        c, s = math.cos(self.yaw_rad), math.sin(self.yaw_rad)
        x = float(point[0]) - self.translation_mm[0]
        y = float(point[1]) - self.translation_mm[1]
        return (c * x + s * y, -s * x + c * y)


def sensor_forces(params: Sequence[AffineParams], sample: RawSample) -> np.ndarray:
    """Apply each sensor's affine map to its raw value; returns 4 forces in N."""
    if len(params) != SENSORS_PER_MODULE:
        raise ValueError(f"expected {SENSORS_PER_MODULE} parameter sets, got {len(params)}")
    raw = sample.as_array()
    c = np.array([p.c for p in params])
    d = np.array([p.d for p in params])
    return c * raw + d


def compute_load(layout: SensorLayout, forces: Sequence[float]) -> LoadEstimate:
    """CoP and GRF of one module from its four sensor forces.

    GRF is the plain force sum; CoP is the force-weighted mean of the sensor
    positions.  Individual forces may be slightly negative (calibrated
    outputs near tare); only the total is gated.

    Raises:
        InsufficientLoad: total force at or below EPS_TOTAL_FORCE.
    """
    f = np.asarray(forces, dtype=float)
    if f.shape != (SENSORS_PER_MODULE,):
        raise ValueError(f"expected {SENSORS_PER_MODULE} forces, got shape {f.shape}")
    total = float(f.sum())
    if total <= EPS_TOTAL_FORCE:
        raise InsufficientLoad(
            f"total force {total:.6g} N is at or below the {EPS_TOTAL_FORCE} N gate"
        )
    cop = f @ layout.position_array() / total
    return LoadEstimate(cop=(cop[0], cop[1]), grf=total)


def combine_double_support(
    modules: Sequence[tuple[LoadEstimate, ModulePose]],
) -> LoadEstimate:
    """World-frame CoP/GRF of a two-module stance.

    Equals the direct eight-sensor computation exactly: GRF adds, CoP is the
    GRF-weighted mean of the per-module world CoPs.  Unloaded modules are
    passed with grf = 0 and contribute nothing.

    Raises:
        InsufficientLoad: combined force at or below EPS_TOTAL_FORCE.
    """
    if len(modules) != 2:
        raise ValueError(f"double support needs exactly 2 modules, got {len(modules)}")
    total = sum(load.grf for load, _ in modules)
    if total <= EPS_TOTAL_FORCE:
        raise InsufficientLoad(
            f"combined force {total:.6g} N is at or below the {EPS_TOTAL_FORCE} N gate"
        )
    wx = wy = 0.0
    for load, pose in modules:
        cx, cy = pose.to_world(load.cop)
        wx += load.grf * cx
        wy += load.grf * cy
    return LoadEstimate(cop=(wx / total, wy / total), grf=total)


def estimate_load(
    layout: SensorLayout,
    cop_params: Sequence[AffineParams],
    grf_params: Sequence[AffineParams],
    sample: RawSample,
) -> LoadEstimate:
    """Module load estimate with separate parameter sets for CoP and GRF.

    CoP comes from ``cop_params``; GRF from ``grf_params``.  Passing the same
    set twice gives the ordinary single-calibration estimate.  Keeping the
    paths separate supports modules whose force totals are read through the
    anchor parameters while only the CoP uses the updated ones.
    """
    cop = compute_load(layout, sensor_forces(cop_params, sample)).cop
    grf = float(sensor_forces(grf_params, sample).sum())
    return LoadEstimate(cop=cop, grf=grf)


@dataclass(frozen=True)
class EstimationChannel:
    """Everything needed to turn one module's raw sample into a world-frame load."""

    layout: SensorLayout
    cop_params: tuple[AffineParams, ...]
    grf_params: tuple[AffineParams, ...]
    pose: ModulePose = field(default_factory=ModulePose)


def estimate_double_support(
    channels: Sequence[EstimationChannel],
    samples: Sequence[RawSample],
) -> LoadEstimate:
    """Combined estimate over two modules, gating out unloaded ones.

    A module whose CoP-path total force is at or below EPS_TOTAL_FORCE is
    treated as unloaded (zero contribution).

    Raises:
        InsufficientLoad: both modules are unloaded.
    """
    if len(channels) != 2 or len(samples) != 2:
        raise ValueError("expected exactly 2 channels and 2 samples")
    loads = []
    for ch, sample in zip(channels, samples):
        try:
            load = estimate_load(ch.layout, ch.cop_params, ch.grf_params, sample)
        except InsufficientLoad:
            load = LoadEstimate(cop=(0.0, 0.0), grf=0.0)
        loads.append((load, ch.pose))
    return combine_double_support(loads)
