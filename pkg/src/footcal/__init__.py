"""Calibration and CoP/GRF estimation toolkit for four-sensor foot force modules."""

from .apparatus import (
    ApparatusConfig,
    CalibrationSession,
    CalibrationTrial,
    ProtrusionGrid,
    reference_load,
    trial_plan,
)
from .calibration import (
    CalibrationConfig,
    CalibrationResult,
    CostBreakdown,
    calibrate,
    cost,
    cost_gradient,
    refine_gauss_newton,
    solve_linearized,
)
from .measurement import (
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
from .metrics import ErrorReport, EvalRecord, e_cop, e_grf, mae, report
from .sensors import (
    AffineParams,
    IDENTITY_PARAMS,
    IDENTITY_ZETA,
    ParamVector,
    RawSample,
    SensorId,
    apply_affine,
    invert_affine,
    tare_and_scale,
)
from .simulate import (
    Payload,
    SimScenario,
    StanceDescription,
    StanceReading,
    distribute_forces,
    simulate_session,
    simulate_stance,
    synthesize_reading,
)

__version__ = "0.1.0"

__all__ = [
    "ApparatusConfig",
    "AffineParams",
    "CalibrationConfig",
    "CalibrationResult",
    "CalibrationSession",
    "CalibrationTrial",
    "CostBreakdown",
    "EPS_TOTAL_FORCE",
    "ErrorReport",
    "EstimationChannel",
    "EvalRecord",
    "IDENTITY_PARAMS",
    "IDENTITY_ZETA",
    "LoadEstimate",
    "ModulePose",
    "ParamVector",
    "Payload",
    "ProtrusionGrid",
    "RawSample",
    "SensorId",
    "SensorLayout",
    "SimScenario",
    "StanceDescription",
    "StanceReading",
    "apply_affine",
    "calibrate",
    "combine_double_support",
    "compute_load",
    "cost",
    "cost_gradient",
    "distribute_forces",
    "e_cop",
    "e_grf",
    "estimate_double_support",
    "estimate_load",
    "invert_affine",
    "mae",
    "reference_load",
    "refine_gauss_newton",
    "report",
    "sensor_forces",
    "simulate_session",
    "simulate_stance",
    "solve_linearized",
    "synthesize_reading",
    "tare_and_scale",
    "trial_plan",
]
