import numpy as np
import pytest

from footcal import presets
from footcal.apparatus import ApparatusConfig
from footcal.sensors import AffineParams


@pytest.fixture
def foot_layout():
    return presets.FOOT_LAYOUT


@pytest.fixture
def shoe_layout():
    return presets.SHOE_LAYOUT


@pytest.fixture
def shoe_apparatus():
    return presets.shoe_apparatus()


@pytest.fixture
def foot_apparatus():
    return presets.foot_apparatus()


def single_point_apparatus(position=(0.0, 0.0), cap_mass_kg=0.0, gravity=9.81,
                           sole_mass_kg=0.0, sole_com_mm=(0.0, 0.0), include_sole_weight=True):
    """Minimal apparatus with one protrusion, for hand-crafted trials."""
    return ApparatusConfig(
        name="single-point",
        protrusions=(((1, 1), (float(position[0]), float(position[1]))),),
        sole_mass_kg=sole_mass_kg,
        sole_com_mm=sole_com_mm,
        cap_mass_kg=cap_mass_kg,
        gravity=gravity,
        include_sole_weight=include_sole_weight,
    )


def random_affine(rng: np.random.Generator, scale_lo=0.5, scale_hi=2.0, offset=2.0):
    return AffineParams(c=rng.uniform(scale_lo, scale_hi), d=rng.uniform(-offset, offset))
