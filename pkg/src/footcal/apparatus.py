"""Calibration apparatus model: protrusion grid, reference loads, trial plans.

The apparatus is a plate attached to the module, carrying a grid of
cylindrical protrusions that support a known weight through a cap.  The
reference CoP for a trial is the projection of the combined center of mass
(weight + cap at the protrusion, plate at its own CoM) onto the module
plane; the reference GRF is the total gravitational force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import UnknownProtrusion
from .measurement import LoadEstimate, SensorLayout
from .sensors import RawSample

ProtrusionId = tuple[int, int]

STANDARD_GRAVITY = 9.81  # m/s^2


@dataclass(frozen=True)
class ProtrusionGrid:
    """Regular rows x cols grid of protrusion centers.

    Row index advances along the first pitch component, column index along
    the second; position(r, c) = origin + ((r-1)*pitch[0], (c-1)*pitch[1]).
    By convention row 1 sits at the toe end of the module, which a negative
    row pitch expresses with an origin at the toe.
    """

    rows: int
    cols: int
    origin_mm: tuple[float, float]
    pitch_mm: tuple[float, float]

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and one column")
        object.__setattr__(self, "origin_mm", (float(self.origin_mm[0]), float(self.origin_mm[1])))
        object.__setattr__(self, "pitch_mm", (float(self.pitch_mm[0]), float(self.pitch_mm[1])))

    def position(self, row: int, col: int) -> tuple[float, float]:
        return (
            self.origin_mm[0] + (row - 1) * self.pitch_mm[0],
            self.origin_mm[1] + (col - 1) * self.pitch_mm[1],
        )

    def ids_row_major(self) -> tuple[ProtrusionId, ...]:
        return tuple((r, c) for r in range(1, self.rows + 1) for c in range(1, self.cols + 1))


@dataclass(frozen=True)
class ApparatusConfig:
    """Geometry and masses of the calibration apparatus.

    protrusions: ordered ((row, col), (x, y)) pairs, row-major for grids.
    include_sole_weight: when False the plate's own weight is dropped from
    both the reference GRF and the reference CoP (modules whose sensors do
    not see the plate's weight).
    """

    name: str
    protrusions: tuple[tuple[ProtrusionId, tuple[float, float]], ...]
    sole_mass_kg: float
    sole_com_mm: tuple[float, float]
    cap_mass_kg: float
    gravity: float = STANDARD_GRAVITY
    include_sole_weight: bool = True
    grid: ProtrusionGrid | None = None

    def __post_init__(self):
        pro = tuple(
            ((int(r), int(c)), (float(x), float(y))) for (r, c), (x, y) in self.protrusions
        )
        if len(pro) == 0:
            raise ValueError("apparatus needs at least one protrusion")
        ids = [pid for pid, _ in pro]
        if len(set(ids)) != len(ids):
            raise ValueError("protrusion ids must be unique")
        if self.sole_mass_kg < 0.0 or self.cap_mass_kg < 0.0:
            raise ValueError("masses must be non-negative")
        if not (self.gravity > 0.0):
            raise ValueError("gravity must be positive")
        object.__setattr__(self, "protrusions", pro)
        object.__setattr__(self, "sole_com_mm", (float(self.sole_com_mm[0]), float(self.sole_com_mm[1])))

    @classmethod
    def from_grid(
        cls,
        name: str,
        grid: ProtrusionGrid,
        sole_mass_kg: float,
        sole_com_mm: tuple[float, float],
        cap_mass_kg: float,
        gravity: float = STANDARD_GRAVITY,
        include_sole_weight: bool = True,
    ) -> "ApparatusConfig":
        pro = tuple((pid, grid.position(*pid)) for pid in grid.ids_row_major())
        return cls(
            name=name,
            protrusions=pro,
            sole_mass_kg=sole_mass_kg,
            sole_com_mm=sole_com_mm,
            cap_mass_kg=cap_mass_kg,
            gravity=gravity,
            include_sole_weight=include_sole_weight,
            grid=grid,
        )

    def protrusion_ids(self) -> tuple[ProtrusionId, ...]:
        return tuple(pid for pid, _ in self.protrusions)

    def position(self, protrusion: ProtrusionId) -> tuple[float, float]:
        key = (int(protrusion[0]), int(protrusion[1]))
        for pid, pos in self.protrusions:
            if pid == key:
                return pos
        raise UnknownProtrusion(f"protrusion {key} not in apparatus {self.name!r}")


@dataclass(frozen=True)
class CalibrationTrial:
    """One weight placement: protrusion, mass, and the averaged raw reading."""

    protrusion: ProtrusionId
    mass_kg: float
    mean_raw: RawSample
    sample_count: int = 1

    def __post_init__(self):
        object.__setattr__(self, "protrusion", (int(self.protrusion[0]), int(self.protrusion[1])))
        if not (self.mass_kg > 0.0) or not math.isfinite(self.mass_kg):
            raise ValueError(f"trial mass must be positive, got {self.mass_kg}")
        if self.sample_count < 1:
            raise ValueError("sample count must be at least 1")


@dataclass(frozen=True)
class CalibrationSession:
    """Ordered trials recorded against one layout and one apparatus."""

    layout: SensorLayout
    apparatus: ApparatusConfig
    trials: tuple[CalibrationTrial, ...]

    def __post_init__(self):
        trials = tuple(self.trials)
        if len(trials) == 0:
            raise ValueError("session must contain at least one trial")
        known = set(self.apparatus.protrusion_ids())
        for t in trials:
            if t.protrusion not in known:
                raise UnknownProtrusion(
                    f"trial references protrusion {t.protrusion} "
                    f"not in apparatus {self.apparatus.name!r}"
                )
        object.__setattr__(self, "trials", trials)


def reference_load(
    config: ApparatusConfig,
    protrusion: ProtrusionId,
    weight_mass_kg: float,
) -> LoadEstimate:
    """Reference CoP and GRF for a known weight on one protrusion.

    The weight and cap act at the protrusion center; the plate acts at its
    own CoM unless include_sole_weight is False, in which case the plate
    drops out of both the total and the weighted mean.

    Raises:
        UnknownProtrusion: protrusion id not in the configuration.
    """
    if not (weight_mass_kg > 0.0):
        raise ValueError(f"weight mass must be positive, got {weight_mass_kg}")
    px, py = config.position(protrusion)
    g_wc = (weight_mass_kg + config.cap_mass_kg) * config.gravity
    g_sole = config.sole_mass_kg * config.gravity if config.include_sole_weight else 0.0
    total = g_wc + g_sole
    sx, sy = config.sole_com_mm
    cop = (
        (g_wc * px + g_sole * sx) / total,
        (g_wc * py + g_sole * sy) / total,
    )
    return LoadEstimate(cop=cop, grf=total)


def trial_plan(
    config: ApparatusConfig,
    masses_kg: Sequence[float],
    protrusion_subset: Sequence[ProtrusionId] | None = None,
) -> list[tuple[ProtrusionId, float]]:
    """Cartesian product of protrusions and masses, protrusion-major.

    Protrusions iterate in the configuration's stored (row-major) order, or
    in the order of ``protrusion_subset`` when given; masses iterate in the
    order given.
    """
    if len(masses_kg) == 0:
        raise ValueError("mass list must be non-empty")
    if protrusion_subset is None:
        subset = config.protrusion_ids()
    else:
        if len(protrusion_subset) == 0:
            raise ValueError("protrusion subset must be non-empty")
        subset = tuple((int(r), int(c)) for r, c in protrusion_subset)
        known = set(config.protrusion_ids())
        for pid in subset:
            if pid not in known:
                raise UnknownProtrusion(f"protrusion {pid} not in apparatus {config.name!r}")
    return [(pid, float(m)) for pid in subset for m in masses_kg]
