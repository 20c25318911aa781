"""Shipped example configurations for a resistive foot module and a load-cell shoe.

The foot module is a 100 x 53 mm rectangle of four resistive sensors, each
with a 25 N range.  The shoe geometry is a stand-in: exact load-cell
positions are a per-build configuration input.
"""

from __future__ import annotations

from .apparatus import ApparatusConfig, ProtrusionGrid
from .measurement import ModulePose, SensorLayout

FOOT_LAYOUT = SensorLayout(
    name="resistive-foot",
    positions=((50.0, 26.5), (50.0, -26.5), (-50.0, 26.5), (-50.0, -26.5)),
    sensing_area_mm2=5300.0,
    full_scale_n=100.0,
)

SHOE_LAYOUT = SensorLayout(
    name="load-cell-shoe",
    positions=((70.0, 40.0), (70.0, -40.0), (-70.0, 40.0), (-70.0, -40.0)),
    sensing_area_mm2=11200.0,
    full_scale_n=200.0,
)

# Weights used on the two module types, in kg.
SHOE_MASSES = (1.0, 2.0, 4.0)
FOOT_MASSES = (2.0, 3.0, 4.0)


def shoe_apparatus() -> ApparatusConfig:
    """Calibration plate for the shoe: a 6 x 3 protrusion grid, row 1 at the toe.

    The plate is strapped to the shoe, so its own weight loads the sensors.
    """
    grid = ProtrusionGrid(rows=6, cols=3, origin_mm=(60.0, -30.0), pitch_mm=(-24.0, 30.0))
    return ApparatusConfig.from_grid(
        name="shoe-calibration-plate",
        grid=grid,
        sole_mass_kg=0.10,
        sole_com_mm=(0.0, 0.0),
        cap_mass_kg=0.05,
        include_sole_weight=True,
    )


def foot_apparatus() -> ApparatusConfig:
    """Calibration plate for the foot: a 4 x 3 grid inside the sensing rectangle.

    The plate's own weight does not reach the sensors on this module, so it
    is excluded from the reference load.
    """
    grid = ProtrusionGrid(rows=4, cols=3, origin_mm=(37.5, -20.0), pitch_mm=(-25.0, 20.0))
    return ApparatusConfig.from_grid(
        name="foot-calibration-plate",
        grid=grid,
        sole_mass_kg=0.12,
        sole_com_mm=(0.0, 0.0),
        cap_mass_kg=0.05,
        include_sole_weight=False,
    )


def side_by_side_poses(spacing_mm: float = 100.0) -> tuple[ModulePose, ModulePose]:
    """Left and right module poses for a parallel stance, feet spacing apart."""
    half = spacing_mm / 2.0
    return (
        ModulePose(translation_mm=(0.0, half), yaw_rad=0.0),
        ModulePose(translation_mm=(0.0, -half), yaw_rad=0.0),
    )
