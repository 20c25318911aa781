"""File formats: JSON documents for every structured object, CSV stream logs.

All structured files are JSON trees with a ``schema_version`` field and a
fixed key order, so a write -> read -> write cycle is byte identical.
Floats are serialized with Python's shortest exact representation, which
preserves full precision.  Units are fixed package-wide: mm, N, kg, ms.

Stream logs are plain text, one ``t_ms,s1,...,s8`` record per line with
``#`` comment lines, matching a serial capture of an eight-sensor pair
(left module sensors 1-4, then right module sensors 1-4).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .apparatus import ApparatusConfig, CalibrationSession, CalibrationTrial, ProtrusionGrid
from .errors import EmptyLog, FileFormatError
from .measurement import LoadEstimate, ModulePose, SensorLayout
from .metrics import ErrorReport, GroupStats, TrialError
from .sensors import SENSORS_PER_MODULE, AffineParams, RawSample
from .simulate import SimScenario

SCHEMA_VERSION = 1

STREAM_WIDTH = 2 * SENSORS_PER_MODULE


# ---------------------------------------------------------------------------
# Atomic JSON plumbing


def write_text_atomic(path: str | Path, text: str):
    """Write via a temp file in the target directory plus rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_document(doc: dict) -> str:
    """Canonical text form; writing the same document always gives these bytes."""
    return json.dumps(doc, indent=2) + "\n"


def dump_document(doc: dict, path: str | Path):
    write_text_atomic(path, render_document(doc))


def load_document(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise FileFormatError(f"{path}: top level must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise FileFormatError(f"{path}: unsupported schema_version {version!r}")
    return doc


def _need(doc: dict, key: str, context: str):
    if key not in doc:
        raise FileFormatError(f"{context}: missing field {key!r}")
    return doc[key]


def _point(value, context: str) -> tuple[float, float]:
    try:
        x, y = value
        return (float(x), float(y))
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{context}: expected an [x, y] pair, got {value!r}") from exc


def _finite(value, context: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{context}: expected a number, got {value!r}") from exc
    if not math.isfinite(v):
        raise FileFormatError(f"{context}: value must be finite, got {v}")
    return v


# ---------------------------------------------------------------------------
# Sensor parameter blocks


def _sensors_to_doc(params: Sequence[AffineParams]) -> list[dict]:
    return [{"id": i + 1, "c": p.c, "d": p.d} for i, p in enumerate(params)]


def _sensors_from_doc(block, context: str) -> tuple[AffineParams, ...]:
    if not isinstance(block, list) or len(block) != SENSORS_PER_MODULE:
        raise FileFormatError(f"{context}: expected {SENSORS_PER_MODULE} sensor entries")
    by_id = {}
    for entry in block:
        sid = _need(entry, "id", context)
        if sid in by_id:
            raise FileFormatError(f"{context}: duplicate sensor id {sid}")
        try:
            by_id[sid] = AffineParams(c=_finite(_need(entry, "c", context), context),
                                      d=_finite(_need(entry, "d", context), context))
        except ValueError as exc:
            raise FileFormatError(f"{context}: {exc}") from exc
    if set(by_id) != {1, 2, 3, 4}:
        raise FileFormatError(f"{context}: sensor ids must be 1..4, got {sorted(by_id)}")
    return tuple(by_id[i] for i in (1, 2, 3, 4))


# ---------------------------------------------------------------------------
# Layout


def layout_to_doc(layout: SensorLayout) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": layout.name,
        "sensors": [
            {"id": i + 1, "position_mm": [p[0], p[1]]} for i, p in enumerate(layout.positions)
        ],
        "sensing_area_mm2": layout.sensing_area_mm2,
        "full_scale_n": layout.full_scale_n,
    }


def layout_from_doc(doc: dict, context: str = "layout") -> SensorLayout:
    sensors = _need(doc, "sensors", context)
    if not isinstance(sensors, list) or len(sensors) != SENSORS_PER_MODULE:
        raise FileFormatError(f"{context}: expected {SENSORS_PER_MODULE} sensors")
    positions = {}
    for entry in sensors:
        sid = _need(entry, "id", context)
        positions[sid] = _point(_need(entry, "position_mm", context), context)
    if set(positions) != {1, 2, 3, 4}:
        raise FileFormatError(f"{context}: sensor ids must be 1..4")
    try:
        return SensorLayout(
            name=str(_need(doc, "name", context)),
            positions=tuple(positions[i] for i in (1, 2, 3, 4)),
            sensing_area_mm2=_finite(_need(doc, "sensing_area_mm2", context), context),
            full_scale_n=_finite(_need(doc, "full_scale_n", context), context),
        )
    except ValueError as exc:
        raise FileFormatError(f"{context}: {exc}") from exc


def save_layout(layout: SensorLayout, path: str | Path):
    dump_document(layout_to_doc(layout), path)


def load_layout(path: str | Path) -> SensorLayout:
    return layout_from_doc(load_document(path), str(path))


# ---------------------------------------------------------------------------
# Apparatus


def apparatus_to_doc(config: ApparatusConfig) -> dict:
    doc: dict = {"schema_version": SCHEMA_VERSION, "name": config.name}
    if config.grid is not None:
        doc["grid"] = {
            "rows": config.grid.rows,
            "cols": config.grid.cols,
            "origin_mm": list(config.grid.origin_mm),
            "pitch_mm": list(config.grid.pitch_mm),
        }
    else:
        doc["protrusions"] = [
            {"id": [pid[0], pid[1]], "position_mm": [pos[0], pos[1]]}
            for pid, pos in config.protrusions
        ]
    doc.update(
        {
            "sole_mass_kg": config.sole_mass_kg,
            "sole_com_mm": list(config.sole_com_mm),
            "cap_mass_kg": config.cap_mass_kg,
            "gravity_m_s2": config.gravity,
            "include_sole_weight": config.include_sole_weight,
        }
    )
    return doc


def apparatus_from_doc(doc: dict, context: str = "apparatus") -> ApparatusConfig:
    common = dict(
        name=str(doc.get("name", "apparatus")),
        sole_mass_kg=_finite(_need(doc, "sole_mass_kg", context), context),
        sole_com_mm=_point(_need(doc, "sole_com_mm", context), context),
        cap_mass_kg=_finite(_need(doc, "cap_mass_kg", context), context),
        gravity=_finite(_need(doc, "gravity_m_s2", context), context),
        include_sole_weight=bool(_need(doc, "include_sole_weight", context)),
    )
    try:
        if "grid" in doc:
            grid_doc = doc["grid"]
            grid = ProtrusionGrid(
                rows=int(_need(grid_doc, "rows", context)),
                cols=int(_need(grid_doc, "cols", context)),
                origin_mm=_point(_need(grid_doc, "origin_mm", context), context),
                pitch_mm=_point(_need(grid_doc, "pitch_mm", context), context),
            )
            return ApparatusConfig.from_grid(grid=grid, **common)
        if "protrusions" in doc:
            pro = tuple(
                (
                    (int(entry["id"][0]), int(entry["id"][1])),
                    _point(_need(entry, "position_mm", context), context),
                )
                for entry in doc["protrusions"]
            )
            return ApparatusConfig(protrusions=pro, **common)
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise FileFormatError(f"{context}: {exc}") from exc
    raise FileFormatError(f"{context}: needs either a 'grid' or a 'protrusions' field")


def save_apparatus(config: ApparatusConfig, path: str | Path):
    dump_document(apparatus_to_doc(config), path)


def load_apparatus(path: str | Path) -> ApparatusConfig:
    return apparatus_from_doc(load_document(path), str(path))


# ---------------------------------------------------------------------------
# Parameter files


@dataclass(frozen=True)
class ParamsDoc:
    """Updated per-sensor parameters plus the anchor they were solved around."""

    sensors: tuple[AffineParams, ...]
    zeta0: tuple[AffineParams, ...]


def params_to_doc(sensors: Sequence[AffineParams], zeta0: Sequence[AffineParams]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "sensors": _sensors_to_doc(sensors),
        "zeta0": {"sensors": _sensors_to_doc(zeta0)},
    }


def params_from_doc(doc: dict, context: str = "params") -> ParamsDoc:
    sensors = _sensors_from_doc(_need(doc, "sensors", context), context)
    zeta0 = _sensors_from_doc(_need(_need(doc, "zeta0", context), "sensors", context), context)
    return ParamsDoc(sensors=sensors, zeta0=zeta0)


def save_params(sensors: Sequence[AffineParams], zeta0: Sequence[AffineParams], path: str | Path):
    dump_document(params_to_doc(sensors, zeta0), path)


def load_params(path: str | Path) -> ParamsDoc:
    return params_from_doc(load_document(path), str(path))


# ---------------------------------------------------------------------------
# Session


def session_to_doc(session: CalibrationSession) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "layout_ref": session.layout.name,
        "apparatus_ref": session.apparatus.name,
        "trials": [
            {
                "protrusion": [t.protrusion[0], t.protrusion[1]],
                "mass_kg": t.mass_kg,
                "mean_raw": list(t.mean_raw.values),
                "sample_count": t.sample_count,
            }
            for t in session.trials
        ],
    }


def session_from_doc(
    doc: dict, layout: SensorLayout, apparatus: ApparatusConfig, context: str = "session"
) -> CalibrationSession:
    layout_ref = _need(doc, "layout_ref", context)
    if layout_ref != layout.name:
        raise FileFormatError(
            f"{context}: session references layout {layout_ref!r} but {layout.name!r} was loaded"
        )
    apparatus_ref = _need(doc, "apparatus_ref", context)
    if apparatus_ref != apparatus.name:
        raise FileFormatError(
            f"{context}: session references apparatus {apparatus_ref!r} "
            f"but {apparatus.name!r} was loaded"
        )
    trials_doc = _need(doc, "trials", context)
    if not isinstance(trials_doc, list) or len(trials_doc) == 0:
        raise FileFormatError(f"{context}: trials must be a non-empty list")
    trials = []
    for i, entry in enumerate(trials_doc):
        where = f"{context}: trial {i}"
        raw = _need(entry, "mean_raw", where)
        if not isinstance(raw, list) or len(raw) != SENSORS_PER_MODULE:
            raise FileFormatError(f"{where}: mean_raw must have {SENSORS_PER_MODULE} values")
        pid = _need(entry, "protrusion", where)
        try:
            trials.append(
                CalibrationTrial(
                    protrusion=(int(pid[0]), int(pid[1])),
                    mass_kg=_finite(_need(entry, "mass_kg", where), where),
                    mean_raw=RawSample(values=tuple(_finite(v, where) for v in raw)),
                    sample_count=int(entry.get("sample_count", 1)),
                )
            )
        except (ValueError, TypeError, IndexError) as exc:
            raise FileFormatError(f"{where}: {exc}") from exc
    try:
        return CalibrationSession(layout=layout, apparatus=apparatus, trials=tuple(trials))
    except Exception as exc:
        raise FileFormatError(f"{context}: {exc}") from exc


def save_session(session: CalibrationSession, path: str | Path):
    dump_document(session_to_doc(session), path)


def load_session(path: str | Path, layout: SensorLayout, apparatus: ApparatusConfig) -> CalibrationSession:
    return session_from_doc(load_document(path), layout, apparatus, str(path))


# ---------------------------------------------------------------------------
# Scenario


def scenario_to_doc(scenario: SimScenario) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "layout_ref": scenario.layout.name,
        "true_params": {"sensors": _sensors_to_doc(scenario.true_params)},
        "noise_sigma": scenario.noise_sigma,
        "quantization_step": scenario.quantization_step,
        "deadband_n": scenario.deadband_force,
        "seed": scenario.rng_seed,
    }


def scenario_from_doc(doc: dict, layout: SensorLayout, context: str = "scenario") -> SimScenario:
    layout_ref = _need(doc, "layout_ref", context)
    if layout_ref != layout.name:
        raise FileFormatError(
            f"{context}: scenario references layout {layout_ref!r} but {layout.name!r} was loaded"
        )
    true_params = _sensors_from_doc(
        _need(_need(doc, "true_params", context), "sensors", context), context
    )
    try:
        return SimScenario(
            layout=layout,
            true_params=true_params,
            noise_sigma=_finite(_need(doc, "noise_sigma", context), context),
            quantization_step=_finite(_need(doc, "quantization_step", context), context),
            deadband_force=_finite(_need(doc, "deadband_n", context), context),
            rng_seed=int(_need(doc, "seed", context)),
        )
    except ValueError as exc:
        raise FileFormatError(f"{context}: {exc}") from exc


def save_scenario(scenario: SimScenario, path: str | Path):
    dump_document(scenario_to_doc(scenario), path)


def load_scenario(path: str | Path, layout: SensorLayout) -> SimScenario:
    return scenario_from_doc(load_document(path), layout, str(path))


# ---------------------------------------------------------------------------
# Calibration config overrides

_CONFIG_FIELDS = (
    "w_cop",
    "w_grf",
    "w_zeta",
    "reg_weight",
    "solver",
    "max_iterations",
    "convergence_tol",
    "regularizer",
)


def save_calibration_config(overrides: dict, path: str | Path):
    doc = {"schema_version": SCHEMA_VERSION}
    for key in _CONFIG_FIELDS:
        if key in overrides:
            value = overrides[key]
            doc[key] = list(value) if key == "w_zeta" and value is not None else value
    dump_document(doc, path)


def load_calibration_config(path: str | Path) -> dict:
    """Config file as keyword overrides for CalibrationConfig."""
    doc = load_document(path)
    context = str(path)
    overrides = {}
    for key, value in doc.items():
        if key == "schema_version":
            continue
        if key not in _CONFIG_FIELDS:
            raise FileFormatError(f"{context}: unknown config field {key!r}")
        if key == "w_zeta" and value is not None:
            if not isinstance(value, list) or len(value) != 8:
                raise FileFormatError(f"{context}: w_zeta must be a list of 8 weights")
            value = tuple(_finite(v, context) for v in value)
        overrides[key] = value
    return overrides


# ---------------------------------------------------------------------------
# Error reports


def _load_to_doc(load: LoadEstimate) -> dict:
    return {"cop_mm": [load.cop[0], load.cop[1]], "grf_n": load.grf}


def _load_from_doc(doc: dict, context: str) -> LoadEstimate:
    return LoadEstimate(
        cop=_point(_need(doc, "cop_mm", context), context),
        grf=_finite(_need(doc, "grf_n", context), context),
    )


def _group_to_doc(g: GroupStats) -> dict:
    return {
        "label": g.label,
        "count": g.count,
        "mean_e_cop": g.mean_e_cop,
        "mean_e_grf": g.mean_e_grf,
        "mean_sqrt_e_cop": g.mean_sqrt_e_cop,
        "max_e_cop": g.max_e_cop,
        "max_e_grf": g.max_e_grf,
        "cop_mae_mm": g.cop_mae_mm,
        "grf_mae_n": g.grf_mae_n,
    }


def _group_from_doc(doc: dict, context: str) -> GroupStats:
    return GroupStats(
        label=str(_need(doc, "label", context)),
        count=int(_need(doc, "count", context)),
        mean_e_cop=_finite(_need(doc, "mean_e_cop", context), context),
        mean_e_grf=_finite(_need(doc, "mean_e_grf", context), context),
        mean_sqrt_e_cop=_finite(_need(doc, "mean_sqrt_e_cop", context), context),
        max_e_cop=_finite(_need(doc, "max_e_cop", context), context),
        max_e_grf=_finite(_need(doc, "max_e_grf", context), context),
        cop_mae_mm=_finite(_need(doc, "cop_mae_mm", context), context),
        grf_mae_n=_finite(_need(doc, "grf_mae_n", context), context),
    )


def report_to_doc(rep: ErrorReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "area_mm2": rep.area_mm2,
        "full_scale_n": rep.full_scale_n,
        "trials": [
            {
                "label": t.label,
                "reference": _load_to_doc(t.reference),
                "measured": _load_to_doc(t.measured),
                "cop_error_mm": t.cop_error_mm,
                "grf_error_n": t.grf_error_n,
                "e_cop": t.e_cop,
                "e_grf": t.e_grf,
            }
            for t in rep.trials
        ],
        "by_label": [_group_to_doc(g) for g in rep.by_label],
        "overall": _group_to_doc(rep.overall),
    }


def report_from_doc(doc: dict, context: str = "report") -> ErrorReport:
    trials = tuple(
        TrialError(
            label=str(_need(entry, "label", context)),
            reference=_load_from_doc(_need(entry, "reference", context), context),
            measured=_load_from_doc(_need(entry, "measured", context), context),
            cop_error_mm=_finite(_need(entry, "cop_error_mm", context), context),
            grf_error_n=_finite(_need(entry, "grf_error_n", context), context),
            e_cop=_finite(_need(entry, "e_cop", context), context),
            e_grf=_finite(_need(entry, "e_grf", context), context),
        )
        for entry in _need(doc, "trials", context)
    )
    return ErrorReport(
        area_mm2=_finite(_need(doc, "area_mm2", context), context),
        full_scale_n=_finite(_need(doc, "full_scale_n", context), context),
        trials=trials,
        by_label=tuple(_group_from_doc(g, context) for g in _need(doc, "by_label", context)),
        overall=_group_from_doc(_need(doc, "overall", context), context),
    )


def save_report(rep: ErrorReport, path: str | Path):
    dump_document(report_to_doc(rep), path)


def load_report(path: str | Path) -> ErrorReport:
    return report_from_doc(load_document(path), str(path))


REPORT_CSV_COLUMNS = (
    "label,ref_cop_x_mm,ref_cop_y_mm,ref_grf_n,meas_cop_x_mm,meas_cop_y_mm,"
    "meas_grf_n,cop_error_mm,grf_error_n,e_cop,e_grf"
)


def render_report_csv(rep: ErrorReport) -> str:
    """Tabular view of the per-trial rows (write-only companion to the JSON)."""
    lines = [f"# {REPORT_CSV_COLUMNS}"]
    for t in rep.trials:
        lines.append(
            ",".join(
                [
                    t.label,
                    repr(t.reference.cop[0]),
                    repr(t.reference.cop[1]),
                    repr(t.reference.grf),
                    repr(t.measured.cop[0]),
                    repr(t.measured.cop[1]),
                    repr(t.measured.grf),
                    repr(t.cop_error_mm),
                    repr(t.grf_error_n),
                    repr(t.e_cop),
                    repr(t.e_grf),
                ]
            )
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Module poses and stance references


def poses_to_doc(left: ModulePose, right: ModulePose) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "left": {"translation_mm": list(left.translation_mm), "yaw_rad": left.yaw_rad},
        "right": {"translation_mm": list(right.translation_mm), "yaw_rad": right.yaw_rad},
    }


def poses_from_doc(doc: dict, context: str = "poses") -> tuple[ModulePose, ModulePose]:
    out = []
    for side in ("left", "right"):
        block = _need(doc, side, context)
        out.append(
            ModulePose(
                translation_mm=_point(_need(block, "translation_mm", context), context),
                yaw_rad=_finite(_need(block, "yaw_rad", context), context),
            )
        )
    return out[0], out[1]


def save_poses(left: ModulePose, right: ModulePose, path: str | Path):
    dump_document(poses_to_doc(left, right), path)


def load_poses(path: str | Path) -> tuple[ModulePose, ModulePose]:
    return poses_from_doc(load_document(path), str(path))


def reference_to_doc(label: str, load: LoadEstimate) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "label": label,
        "cop_mm": [load.cop[0], load.cop[1]],
        "grf_n": load.grf,
    }


def reference_from_doc(doc: dict, context: str = "reference") -> tuple[str, LoadEstimate]:
    return (
        str(_need(doc, "label", context)),
        LoadEstimate(
            cop=_point(_need(doc, "cop_mm", context), context),
            grf=_finite(_need(doc, "grf_n", context), context),
        ),
    )


def save_reference(label: str, load: LoadEstimate, path: str | Path):
    dump_document(reference_to_doc(label, load), path)


def load_reference(path: str | Path) -> tuple[str, LoadEstimate]:
    return reference_from_doc(load_document(path), str(path))


# ---------------------------------------------------------------------------
# Stream logs


@dataclass(frozen=True)
class StreamRecord:
    """One wire record: timestamp in ms plus eight raw counts."""

    t_ms: int
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != STREAM_WIDTH:
            raise ValueError(f"stream record needs {STREAM_WIDTH} values, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("stream values must be finite")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "t_ms", int(self.t_ms))

    def side_sample(self, side: str) -> RawSample:
        if side == "left":
            return RawSample(values=self.values[:4], t_ms=self.t_ms)
        if side == "right":
            return RawSample(values=self.values[4:], t_ms=self.t_ms)
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")


@dataclass(frozen=True)
class RejectedLine:
    line_no: int
    reason: str


@dataclass(frozen=True)
class ParseResult:
    records: tuple[StreamRecord, ...]
    rejected: tuple[RejectedLine, ...]


def parse_stream(text: str) -> ParseResult:
    """Parse a stream log; malformed lines are collected, not fatal.

    A line is rejected for wrong field count, non-numeric or non-finite
    values, or a timestamp that runs backwards.

    Raises:
        EmptyLog: no valid record in the whole text.
    """
    records: list[StreamRecord] = []
    rejected: list[RejectedLine] = []
    last_t: int | None = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split(",")
        if len(fields) != 1 + STREAM_WIDTH:
            rejected.append(
                RejectedLine(line_no, f"expected {1 + STREAM_WIDTH} fields, got {len(fields)}")
            )
            continue
        try:
            t_ms = int(fields[0])
            values = tuple(float(f) for f in fields[1:])
        except ValueError:
            rejected.append(RejectedLine(line_no, "non-numeric field"))
            continue
        if not all(math.isfinite(v) for v in values):
            rejected.append(RejectedLine(line_no, "non-finite value"))
            continue
        if last_t is not None and t_ms < last_t:
            rejected.append(RejectedLine(line_no, f"timestamp {t_ms} runs backwards"))
            continue
        last_t = t_ms
        records.append(StreamRecord(t_ms=t_ms, values=values))
    if not records:
        raise EmptyLog(f"no valid records ({len(rejected)} rejected lines)")
    return ParseResult(records=tuple(records), rejected=tuple(rejected))


def render_stream(records: Sequence[StreamRecord]) -> str:
    lines = [f"{r.t_ms}," + ",".join(repr(v) for v in r.values) for r in records]
    return "\n".join(lines) + ("\n" if lines else "")


def load_stream(path: str | Path) -> ParseResult:
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"file not found: {path}")
    return parse_stream(path.read_text())


def save_stream(records: Sequence[StreamRecord], path: str | Path):
    write_text_atomic(path, render_stream(records))
