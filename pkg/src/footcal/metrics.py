"""Relative error metrics, mean absolute errors, and grouped error reports.

e_cop scales the squared CoP miss by the area of a circle of equal area to
the sensing region, so sqrt(e_cop) reads as the miss distance over the
equivalent-circle radius.  e_grf is the absolute GRF error over the total
sensing range.  For comparison runs across module types, pass the same
denominator layout to every report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .apparatus import CalibrationSession, reference_load
from .errors import EmptyInput
from .measurement import LoadEstimate, SensorLayout, estimate_load
from .sensors import AffineParams


def e_cop(reference_mm: Sequence[float], measured_mm: Sequence[float], area_mm2: float) -> float:
    """Relative CoP error: pi * squared miss distance / sensing area."""
    if not (area_mm2 > 0.0):
        raise ValueError("area must be positive")
    dx = float(reference_mm[0]) - float(measured_mm[0])
    dy = float(reference_mm[1]) - float(measured_mm[1])
    return math.pi * (dx * dx + dy * dy) / area_mm2


def e_grf(reference_n: float, measured_n: float, full_scale_n: float) -> float:
    """Relative GRF error: absolute error over the total sensing range."""
    if not (full_scale_n > 0.0):
        raise ValueError("full-scale force must be positive")
    return abs(float(reference_n) - float(measured_n)) / full_scale_n


def mae(pairs: Sequence[tuple[LoadEstimate, LoadEstimate]]) -> tuple[float, float]:
    """Mean absolute errors over (reference, measured) pairs.

    Returns (mean Euclidean CoP distance in mm, mean absolute GRF error in N).

    Raises:
        EmptyInput: no pairs given.
    """
    if len(pairs) == 0:
        raise EmptyInput("mae over an empty pair list")
    cop_sum = 0.0
    grf_sum = 0.0
    for ref, meas in pairs:
        cop_sum += math.hypot(ref.cop[0] - meas.cop[0], ref.cop[1] - meas.cop[1])
        grf_sum += abs(ref.grf - meas.grf)
    n = len(pairs)
    return cop_sum / n, grf_sum / n


@dataclass(frozen=True)
class EvalRecord:
    """One evaluated trial: a grouping label plus reference and measured loads."""

    label: str
    reference: LoadEstimate
    measured: LoadEstimate


@dataclass(frozen=True)
class TrialError:
    """Per-trial error row of a report."""

    label: str
    reference: LoadEstimate
    measured: LoadEstimate
    cop_error_mm: float
    grf_error_n: float
    e_cop: float
    e_grf: float


@dataclass(frozen=True)
class GroupStats:
    """Aggregates over one label group (or over everything, for the overall row)."""

    label: str
    count: int
    mean_e_cop: float
    mean_e_grf: float
    mean_sqrt_e_cop: float
    max_e_cop: float
    max_e_grf: float
    cop_mae_mm: float
    grf_mae_n: float


@dataclass(frozen=True)
class ErrorReport:
    """All per-trial errors plus per-label and overall aggregates.

    mean_sqrt_e_cop is reported alongside mean_e_cop because the squared
    relative form and its square root (a distance ratio against the
    equivalent-circle radius) are both in common use.
    """

    area_mm2: float
    full_scale_n: float
    trials: tuple[TrialError, ...]
    by_label: tuple[GroupStats, ...]
    overall: GroupStats


def _group_stats(label: str, rows: Sequence[TrialError]) -> GroupStats:
    n = len(rows)
    return GroupStats(
        label=label,
        count=n,
        mean_e_cop=sum(r.e_cop for r in rows) / n,
        mean_e_grf=sum(r.e_grf for r in rows) / n,
        mean_sqrt_e_cop=sum(math.sqrt(r.e_cop) for r in rows) / n,
        max_e_cop=max(r.e_cop for r in rows),
        max_e_grf=max(r.e_grf for r in rows),
        cop_mae_mm=sum(r.cop_error_mm for r in rows) / n,
        grf_mae_n=sum(abs(r.grf_error_n) for r in rows) / n,
    )


def report(records: Sequence[EvalRecord], layout: SensorLayout) -> ErrorReport:
    """Build an error report; the layout supplies both metric denominators.

    Labels group trials (typically the weight mass); groups appear in first
    occurrence order.

    Raises:
        EmptyInput: no records given.
    """
    if len(records) == 0:
        raise EmptyInput("report over an empty record list")
    rows = []
    for rec in records:
        dx = rec.reference.cop[0] - rec.measured.cop[0]
        dy = rec.reference.cop[1] - rec.measured.cop[1]
        rows.append(
            TrialError(
                label=rec.label,
                reference=rec.reference,
                measured=rec.measured,
                cop_error_mm=math.hypot(dx, dy),
                grf_error_n=rec.measured.grf - rec.reference.grf,
                e_cop=e_cop(rec.reference.cop, rec.measured.cop, layout.sensing_area_mm2),
                e_grf=e_grf(rec.reference.grf, rec.measured.grf, layout.full_scale_n),
            )
        )
    labels: list[str] = []
    for r in rows:
        if r.label not in labels:
            labels.append(r.label)
    by_label = tuple(
        _group_stats(lbl, [r for r in rows if r.label == lbl]) for lbl in labels
    )
    return ErrorReport(
        area_mm2=layout.sensing_area_mm2,
        full_scale_n=layout.full_scale_n,
        trials=tuple(rows),
        by_label=by_label,
        overall=_group_stats("overall", rows),
    )


def mass_label(mass_kg: float) -> str:
    """Canonical grouping label for a trial mass."""
    return f"{mass_kg:g} kg"


def session_records(
    session: CalibrationSession,
    cop_params: Sequence[AffineParams],
    grf_params: Sequence[AffineParams],
) -> list[EvalRecord]:
    """Evaluate every session trial against its apparatus reference."""
    records = []
    for t in session.trials:
        ref = reference_load(session.apparatus, t.protrusion, t.mass_kg)
        meas = estimate_load(session.layout, cop_params, grf_params, t.mean_raw)
        records.append(EvalRecord(label=mass_label(t.mass_kg), reference=ref, measured=meas))
    return records
