"""Per-sensor affine force models and single-sensor tare/scale calibration.

A sensor maps raw counts S to force via ``force = c * S + d``.  The
equivalent raw form uses the no-load mean ``a`` (counts) and the scaling
factor ``b`` (counts per newton): ``force = (S - a) / b``, so
``c = 1/b`` and ``d = -a/b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateCalibration

SENSORS_PER_MODULE = 4
MODULE_SIDES = ("left", "right")


@dataclass(frozen=True)
class AffineParams:
    """Raw-count to force map ``force = c * counts + d``.

    c: scale in N per raw count, strictly positive.
    d: offset in N.
    """

    c: float
    d: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and math.isfinite(self.d)):
            raise ValueError(f"affine parameters must be finite, got c={self.c}, d={self.d}")
        if self.c <= 0.0:
            raise ValueError(f"sensor scale must be positive, got c={self.c}")

    @property
    def noload_counts(self) -> float:
        """Raw reading at zero force (tare level a = -d/c)."""
        return -self.d / self.c

    @property
    def counts_per_newton(self) -> float:
        """Raw-form scaling factor b = 1/c."""
        return 1.0 / self.c

    @classmethod
    def from_tare(cls, noload_counts: float, counts_per_newton: float) -> "AffineParams":
        """Build from the raw-form pair (a, b) where ``force = (counts - a)/b``."""
        return cls(c=1.0 / counts_per_newton, d=-noload_counts / counts_per_newton)


IDENTITY_PARAMS = AffineParams(1.0, 0.0)


@dataclass(frozen=True)
class SensorId:
    """One of the four sensors of a module, on the left or right side."""

    index: int
    side: str = "left"

    def __post_init__(self):
        if self.index not in (1, 2, 3, 4):
            raise ValueError(f"sensor index must be 1..4, got {self.index}")
        if self.side not in MODULE_SIDES:
            raise ValueError(f"side must be one of {MODULE_SIDES}, got {self.side!r}")


@dataclass(frozen=True)
class RawSample:
    """One averaged or instantaneous reading of all four sensors, in raw counts."""

    values: tuple[float, float, float, float]
    t_ms: int | None = None

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != SENSORS_PER_MODULE:
            raise ValueError(f"expected {SENSORS_PER_MODULE} raw values, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"raw values must be finite, got {vals}")
        object.__setattr__(self, "values", vals)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)


@dataclass(frozen=True)
class ParamVector:
    """Module-wide parameter vector [c1..c4, d1..d4], the calibration variable."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != 2 * SENSORS_PER_MODULE:
            raise ValueError(f"parameter vector must have 8 entries, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("parameter vector entries must be finite")
        if any(c <= 0.0 for c in vals[:SENSORS_PER_MODULE]):
            raise ValueError(f"scale entries must be positive, got {vals[:SENSORS_PER_MODULE]}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_sensor_params(cls, params: Sequence[AffineParams]) -> "ParamVector":
        if len(params) != SENSORS_PER_MODULE:
            raise ValueError(f"expected {SENSORS_PER_MODULE} sensors, got {len(params)}")
        return cls(tuple(p.c for p in params) + tuple(p.d for p in params))

    @classmethod
    def from_array(cls, arr: Iterable[float]) -> "ParamVector":
        return cls(tuple(float(v) for v in arr))

    def sensor_params(self) -> tuple[AffineParams, ...]:
        cs, ds = self.values[:4], self.values[4:]
        return tuple(AffineParams(c, d) for c, d in zip(cs, ds))

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)


IDENTITY_ZETA = ParamVector.from_sensor_params([IDENTITY_PARAMS] * SENSORS_PER_MODULE)


def apply_affine(params: AffineParams, counts: float) -> float:
    """Force in N produced by a raw reading."""
    return params.c * counts + params.d


def invert_affine(params: AffineParams, force: float) -> float:
    """Raw reading that produces the given force (exact inverse of apply_affine)."""
    return (force - params.d) / params.c


def tare_and_scale(
    noload_samples: Sequence[float],
    loaded_samples: Sequence[float],
    known_force: float,
) -> AffineParams:
    """Single-sensor calibration from a no-load hold and a known-force hold.

    The tare level a is the mean no-load reading; the scaling factor b is
    the change in mean output divided by the known force.

    Args:
        noload_samples: raw counts recorded with the sensor unloaded.
        loaded_samples: raw counts recorded under ``known_force``.
        known_force: applied force in N, > 0.

    Raises:
        DegenerateCalibration: loaded mean does not exceed the no-load mean.
    """
    if len(noload_samples) == 0 or len(loaded_samples) == 0:
        raise ValueError("sample lists must be non-empty")
    if not (known_force > 0.0):
        raise ValueError(f"known force must be positive, got {known_force}")
    a = float(np.mean(np.asarray(noload_samples, dtype=float)))
    loaded = float(np.mean(np.asarray(loaded_samples, dtype=float)))
    if loaded <= a:
        raise DegenerateCalibration(
            f"loaded mean {loaded} does not exceed no-load mean {a}; "
            "sensor not responding or wired inverted"
        )
    b = (loaded - a) / known_force
    return AffineParams.from_tare(a, b)
