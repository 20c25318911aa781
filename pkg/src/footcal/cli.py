"""Command-line surface tying the pipeline together.

Subcommands: tare, simulate, calibrate, evaluate, estimate.  Outputs are
written atomically; data errors exit 1 with a machine-readable JSON line on
stderr, usage errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import fileio
from .apparatus import trial_plan
from .calibration import CalibrationConfig, calibrate
from .errors import FootcalError, InsufficientLoad
from .measurement import EstimationChannel, ModulePose, estimate_double_support
from .metrics import EvalRecord, report, session_records
from .sensors import ParamVector, RawSample, tare_and_scale
from .simulate import simulate_session

_STREAM_PERIOD_MS = 10


def _fail(kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return 1


def _parse_masses(text: str) -> list[float]:
    try:
        masses = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise FootcalError(f"bad --masses value {text!r}: {exc}") from exc
    if not masses:
        raise FootcalError("--masses must list at least one mass")
    return masses


def _parse_protrusions(text: str):
    if text.strip().lower() == "all":
        return None
    subset = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            r, c = tok.split(":")
            subset.append((int(r), int(c)))
        except ValueError as exc:
            raise FootcalError(f"bad protrusion id {tok!r}, expected row:col") from exc
    if not subset:
        raise FootcalError("--protrusions must list at least one id or 'all'")
    return subset


def _load_channel_params(path: str, mode: str):
    doc = fileio.load_params(path)
    cop = doc.sensors
    grf = doc.zeta0 if mode == "shoe" else doc.sensors
    return cop, grf


def _config_from_args(args) -> CalibrationConfig:
    kwargs = {}
    if args.config:
        kwargs.update(fileio.load_calibration_config(args.config))
    if args.params:
        doc = fileio.load_params(args.params)
        kwargs["zeta0"] = ParamVector.from_sensor_params(doc.sensors)
    if args.mode == "shoe":
        if "zeta0" not in kwargs:
            raise FootcalError(
                "shoe mode needs an anchor parameter file (--params), "
                "normally the per-cell tare output"
            )
        zeta0 = kwargs.pop("zeta0")
        return CalibrationConfig.for_shoe(zeta0=zeta0, **kwargs)
    return CalibrationConfig.for_fsr(**kwargs)


def cmd_tare(args) -> int:
    noload = fileio.load_stream(args.noload)
    loaded = fileio.load_stream(args.loaded)
    params = []
    for k in range(4):
        noload_col = [rec.side_sample(args.side).values[k] for rec in noload.records]
        loaded_col = [rec.side_sample(args.side).values[k] for rec in loaded.records]
        params.append(tare_and_scale(noload_col, loaded_col, args.force))
    fileio.save_params(params, params, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_simulate(args) -> int:
    layout = fileio.load_layout(args.layout)
    apparatus = fileio.load_apparatus(args.apparatus)
    scenario = fileio.load_scenario(args.scenario, layout)
    if args.seed is not None:
        scenario.rng_seed = args.seed
        scenario.reset_rng()
    plan = trial_plan(apparatus, _parse_masses(args.masses), _parse_protrusions(args.protrusions))
    sink = [] if args.stream else None
    session = simulate_session(
        scenario, apparatus, plan, samples_per_trial=args.samples, sample_sink=sink
    )
    fileio.save_session(session, args.out)
    print(f"wrote {args.out} ({len(session.trials)} trials)")
    if args.stream:
        records = []
        t = 0
        # The unused side reads as an unloaded copy of the same module.
        idle = tuple(p.noload_counts for p in scenario.true_params)
        for trial_samples in sink:
            for sample in trial_samples:
                values = sample.values + idle if args.side == "left" else idle + sample.values
                records.append(fileio.StreamRecord(t_ms=t, values=values))
                t += _STREAM_PERIOD_MS
        fileio.save_stream(records, args.stream)
        print(f"wrote {args.stream} ({len(records)} records)")
    return 0


def cmd_calibrate(args) -> int:
    layout = fileio.load_layout(args.layout)
    apparatus = fileio.load_apparatus(args.apparatus)
    session = fileio.load_session(args.session, layout, apparatus)
    cfg = _config_from_args(args)
    result = calibrate(session, cfg)
    fileio.save_params(result.params.sensor_params(), result.zeta0.sensor_params(), args.out)
    print(f"wrote {args.out}")
    print(
        f"status={result.status} iterations={result.iterations} "
        f"cost {result.initial_cost.total:.6g} -> {result.final_cost.total:.6g}"
    )
    if args.report:
        records = session_records(
            session, result.params.sensor_params(), result.grf_params.sensor_params()
        )
        fileio.save_report(report(records, layout), args.report)
        print(f"wrote {args.report}")
    return 0


def _mean_stream_samples(parse: fileio.ParseResult) -> tuple[RawSample, RawSample]:
    values = np.mean([rec.values for rec in parse.records], axis=0)
    return RawSample(values=tuple(values[:4])), RawSample(values=tuple(values[4:]))


def cmd_evaluate(args) -> int:
    layout = fileio.load_layout(args.layout)
    metrics_layout = fileio.load_layout(args.metrics_layout) if args.metrics_layout else layout
    if args.session and args.stream:
        raise FootcalError("give either --session or --stream/--reference pairs, not both")
    if args.session:
        if not args.apparatus:
            raise FootcalError("evaluating a session needs --apparatus")
        apparatus = fileio.load_apparatus(args.apparatus)
        session = fileio.load_session(args.session, layout, apparatus)
        cop, grf = _load_channel_params(args.params, args.mode)
        records = session_records(session, cop, grf)
    else:
        if not args.stream or not args.reference:
            raise FootcalError("evaluate needs either --session or --stream/--reference pairs")
        if len(args.stream) != len(args.reference):
            raise FootcalError("--stream and --reference must be given the same number of times")
        channels = _build_channels(args, layout)
        records = []
        for log_path, ref_path in zip(args.stream, args.reference):
            label, reference = fileio.load_reference(ref_path)
            left, right = _mean_stream_samples(fileio.load_stream(log_path))
            measured = estimate_double_support(channels, (left, right))
            records.append(EvalRecord(label=label, reference=reference, measured=measured))
    rep = report(records, metrics_layout)
    fileio.save_report(rep, args.out)
    print(f"wrote {args.out}")
    if args.csv:
        fileio.write_text_atomic(args.csv, fileio.render_report_csv(rep))
        print(f"wrote {args.csv}")
    print(
        f"cop_mae_mm={rep.overall.cop_mae_mm:.6g} grf_mae_n={rep.overall.grf_mae_n:.6g} "
        f"mean_e_cop={rep.overall.mean_e_cop:.6g} mean_e_grf={rep.overall.mean_e_grf:.6g}"
    )
    return 0


def _build_channels(args, layout) -> tuple[EstimationChannel, EstimationChannel]:
    right_layout = fileio.load_layout(args.layout_right) if args.layout_right else layout
    if args.poses:
        left_pose, right_pose = fileio.load_poses(args.poses)
    else:
        left_pose = right_pose = ModulePose()
    left_cop, left_grf = _load_channel_params(args.params, args.mode)
    if args.params_right:
        right_cop, right_grf = _load_channel_params(args.params_right, args.mode)
    else:
        right_cop, right_grf = left_cop, left_grf
    return (
        EstimationChannel(layout=layout, cop_params=left_cop, grf_params=left_grf, pose=left_pose),
        EstimationChannel(
            layout=right_layout, cop_params=right_cop, grf_params=right_grf, pose=right_pose
        ),
    )


def cmd_estimate(args) -> int:
    layout = fileio.load_layout(args.layout)
    channels = _build_channels(args, layout)
    parse = fileio.load_stream(args.stream)
    lines = ["# t_ms,cop_x_mm,cop_y_mm,grf_n"]
    for rec in parse.records:
        try:
            load = estimate_double_support(
                channels, (rec.side_sample("left"), rec.side_sample("right"))
            )
            lines.append(f"{rec.t_ms},{load.cop[0]!r},{load.cop[1]!r},{load.grf!r}")
        except InsufficientLoad:
            lines.append(f"{rec.t_ms},nan,nan,nan")
    fileio.write_text_atomic(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.out} ({len(parse.records)} rows)")
    if parse.rejected:
        print(f"rejected {len(parse.rejected)} malformed lines", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="footcal",
        description="Calibration and CoP/GRF estimation for four-sensor foot force modules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tare", help="per-sensor tare/scale from no-load and loaded stream logs")
    p.add_argument("--noload", required=True, help="stream log recorded unloaded")
    p.add_argument("--loaded", required=True, help="stream log recorded under --force on each sensor")
    p.add_argument("--force", type=float, required=True, help="applied force in N")
    p.add_argument("--side", choices=("left", "right"), default="left")
    p.add_argument("--out", required=True, help="parameter file to write")
    p.set_defaults(func=cmd_tare)

    p = sub.add_parser("simulate", help="synthesize a calibration session from a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--layout", required=True)
    p.add_argument("--apparatus", required=True)
    p.add_argument("--masses", required=True, help="comma-separated weight masses in kg")
    p.add_argument("--protrusions", default="all", help="'all' or row:col ids, comma separated")
    p.add_argument("--samples", type=int, default=100, help="readings averaged per trial")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--side", choices=("left", "right"), default="left")
    p.add_argument("--out", required=True, help="session file to write")
    p.add_argument("--stream", default=None, help="also write the raw readings as a stream log")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="solve for updated sensor parameters")
    p.add_argument("--session", required=True)
    p.add_argument("--layout", required=True)
    p.add_argument("--apparatus", required=True)
    p.add_argument("--params", default=None, help="anchor parameter file (tare output)")
    p.add_argument("--config", default=None, help="calibration config file")
    p.add_argument("--mode", choices=("fsr", "shoe"), default="fsr")
    p.add_argument("--out", required=True, help="parameter file to write")
    p.add_argument("--report", default=None, help="also write a post-calibration error report")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="error report for a session or recorded stance holds")
    p.add_argument("--session", default=None)
    p.add_argument("--apparatus", default=None)
    p.add_argument("--stream", action="append", default=None, help="stance hold log (repeatable)")
    p.add_argument("--reference", action="append", default=None, help="reference file per --stream")
    p.add_argument("--layout", required=True)
    p.add_argument("--layout-right", dest="layout_right", default=None)
    p.add_argument("--metrics-layout", dest="metrics_layout", default=None,
                   help="layout supplying the metric denominators (default: --layout)")
    p.add_argument("--params", required=True)
    p.add_argument("--params-right", dest="params_right", default=None)
    p.add_argument("--poses", default=None)
    p.add_argument("--mode", choices=("fsr", "shoe"), default="fsr")
    p.add_argument("--out", required=True, help="report JSON to write")
    p.add_argument("--csv", default=None, help="also write the per-trial table as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("estimate", help="CoP/GRF time series from a stream log")
    p.add_argument("--stream", required=True)
    p.add_argument("--layout", required=True)
    p.add_argument("--layout-right", dest="layout_right", default=None)
    p.add_argument("--params", required=True)
    p.add_argument("--params-right", dest="params_right", default=None)
    p.add_argument("--poses", default=None)
    p.add_argument("--mode", choices=("fsr", "shoe"), default="fsr")
    p.add_argument("--out", required=True, help="CSV time series to write")
    p.set_defaults(func=cmd_estimate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except FootcalError as exc:
        return _fail(type(exc).__name__, str(exc))
    except FileNotFoundError as exc:
        return _fail("FileNotFound", str(exc))
    except (OSError, ValueError) as exc:
        return _fail(type(exc).__name__, str(exc))


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
