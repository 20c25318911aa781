"""Regularized least-squares calibration of the eight affine sensor parameters.

The cost over a calibration session is

    J(z) = w_cop * sum_t [(Cx_t - cx_t(z))^2 + (Cy_t - cy_t(z))^2]
         + w_grf * sum_t (N_t - n_t(z))^2
         + sum_j w_zeta_j * (z_j - z0_j)^2

where (cx, cy, n) are the measured CoP/GRF at parameters z and (Cx, Cy, N)
the apparatus references.  The CoP residuals are ratios of affine functions
of z, so the problem is solved in two stages: a denominator-cleared linear
least-squares pass (each CoP residual multiplied by the measured total
force, which makes it exactly linear in z), then damped Gauss-Newton on the
true residuals.

An optional alternative regularizer penalizes the change in predicted
per-sensor force outputs across the session instead of the parameter
deviation itself; it is also linear in z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .apparatus import CalibrationSession, ProtrusionId, reference_load
from .errors import DegenerateTrial, SingularSystem
from .measurement import EPS_TOTAL_FORCE
from .sensors import IDENTITY_ZETA, ParamVector

DAMPING_INIT = 1e-3
DAMPING_CEILING = 1e8
DAMPING_FLOOR = 1e-12

_SOLVERS = ("gauss_newton", "linearized")
_REGULARIZERS = ("params", "force_output")


@dataclass(frozen=True)
class CalibrationConfig:
    """Weights, anchor, and solver knobs for one calibration run.

    w_zeta is the per-parameter regularization weight vector [on c1..c4,
    d1..d4].  When None it is derived from reg_weight so that deviations in
    scale and offset are penalized in comparable force units: weight
    reg_weight * sbar^2 on each scale, reg_weight on each offset, with sbar
    the session-mean absolute raw count.

    grf_from_anchor keeps the returned GRF path on the anchor parameters;
    the updated parameters then serve only the CoP.
    """

    w_cop: float = 1.0
    w_grf: float = 1.0
    w_zeta: tuple[float, ...] | None = None
    reg_weight: float = 1e-4
    zeta0: ParamVector = IDENTITY_ZETA
    solver: str = "gauss_newton"
    max_iterations: int = 50
    convergence_tol: float = 1e-9
    regularizer: str = "params"
    grf_from_anchor: bool = False

    def __post_init__(self):
        if self.w_cop < 0.0 or self.w_grf < 0.0:
            raise ValueError("term weights must be non-negative")
        if self.w_zeta is not None:
            wz = tuple(float(w) for w in self.w_zeta)
            if len(wz) != 8:
                raise ValueError(f"w_zeta must have 8 entries, got {len(wz)}")
            if any(w < 0.0 for w in wz):
                raise ValueError("w_zeta entries must be non-negative")
            object.__setattr__(self, "w_zeta", wz)
        if self.reg_weight < 0.0:
            raise ValueError("reg_weight must be non-negative")
        if self.solver not in _SOLVERS:
            raise ValueError(f"solver must be one of {_SOLVERS}, got {self.solver!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not (self.convergence_tol > 0.0):
            raise ValueError("convergence_tol must be positive")
        if self.regularizer not in _REGULARIZERS:
            raise ValueError(f"regularizer must be one of {_REGULARIZERS}, got {self.regularizer!r}")

    @classmethod
    def for_fsr(cls, **overrides) -> "CalibrationConfig":
        """Defaults for factory-calibrated resistive sensors: both data terms
        active, identity anchor."""
        overrides.setdefault("w_cop", 1.0)
        overrides.setdefault("w_grf", 1.0)
        overrides.setdefault("zeta0", IDENTITY_ZETA)
        overrides.setdefault("grf_from_anchor", False)
        return cls(**overrides)

    @classmethod
    def for_shoe(cls, zeta0: ParamVector, **overrides) -> "CalibrationConfig":
        """Defaults for load-cell modules: the GRF term is disabled and the
        anchor (per-cell tare/scale output) keeps serving force totals."""
        overrides.setdefault("w_cop", 1.0)
        overrides.setdefault("w_grf", 0.0)
        overrides.setdefault("grf_from_anchor", True)
        return cls(zeta0=zeta0, **overrides)


@dataclass(frozen=True)
class CostBreakdown:
    """Total cost and its three components at one parameter vector."""

    total: float
    cop: float
    grf: float
    regularizer: float


@dataclass(frozen=True)
class TrialResidual:
    """Per-trial measurement error: CoP distance in mm, signed GRF error in N."""

    protrusion: ProtrusionId
    mass_kg: float
    cop_error_mm: float
    grf_error_n: float


@dataclass(frozen=True)
class CalibrationResult:
    """Solution of one calibration run.

    params carries the updated parameter vector; grf_params the vector used
    for force totals (the anchor when grf_from_anchor was set).  The final
    cost never exceeds the cost at the anchor.
    """

    params: ParamVector
    grf_params: ParamVector
    zeta0: ParamVector
    final_cost: CostBreakdown
    initial_cost: CostBreakdown
    iterations: int
    status: str
    residuals_before: tuple[TrialResidual, ...]
    residuals_after: tuple[TrialResidual, ...]


@dataclass
class _SessionArrays:
    """Session unpacked into dense arrays plus resolved weights."""

    raw: np.ndarray      # (T, 4) mean raw counts
    tx: np.ndarray       # (4,) sensor x positions, mm
    ty: np.ndarray       # (4,)
    ref_x: np.ndarray    # (T,) reference CoP x, mm
    ref_y: np.ndarray    # (T,)
    ref_n: np.ndarray    # (T,) reference GRF, N
    zeta0: np.ndarray    # (8,)
    w_cop: float
    w_grf: float
    w_zeta: np.ndarray   # (8,)
    force_reg: bool
    force_reg_weight: float
    f0: np.ndarray       # (T, 4) anchor force outputs (used by the force regularizer)
    protrusions: tuple[ProtrusionId, ...] = field(default=())
    masses: tuple[float, ...] = field(default=())


def _session_arrays(session: CalibrationSession, cfg: CalibrationConfig) -> _SessionArrays:
    raw = np.array([t.mean_raw.values for t in session.trials], dtype=float)
    pos = session.layout.position_array()
    refs = [reference_load(session.apparatus, t.protrusion, t.mass_kg) for t in session.trials]
    zeta0 = cfg.zeta0.as_array()
    if cfg.w_zeta is not None:
        w_zeta = np.array(cfg.w_zeta, dtype=float)
    else:
        sbar = float(np.mean(np.abs(raw)))
        if sbar == 0.0:
            sbar = 1.0
        w_zeta = np.concatenate([np.full(4, cfg.reg_weight * sbar**2), np.full(4, cfg.reg_weight)])
    f0 = raw * zeta0[:4] + zeta0[4:]
    return _SessionArrays(
        raw=raw,
        tx=pos[:, 0].copy(),
        ty=pos[:, 1].copy(),
        ref_x=np.array([r.cop[0] for r in refs]),
        ref_y=np.array([r.cop[1] for r in refs]),
        ref_n=np.array([r.grf for r in refs]),
        zeta0=zeta0,
        w_cop=float(cfg.w_cop),
        w_grf=float(cfg.w_grf),
        w_zeta=w_zeta,
        force_reg=(cfg.regularizer == "force_output"),
        force_reg_weight=float(cfg.reg_weight),
        f0=f0,
        protrusions=tuple(t.protrusion for t in session.trials),
        masses=tuple(t.mass_kg for t in session.trials),
    )


def _as_zeta_array(zeta) -> np.ndarray:
    if isinstance(zeta, ParamVector):
        return zeta.as_array()
    arr = np.asarray(zeta, dtype=float).reshape(-1)
    if arr.shape != (8,):
        raise ValueError(f"parameter vector must have 8 entries, got shape {arr.shape}")
    return arr.copy()


def _forces(z: np.ndarray, data: _SessionArrays) -> tuple[np.ndarray, np.ndarray]:
    """Per-sensor forces (T, 4) and totals (T,); raises on a gated trial."""
    f = data.raw * z[:4] + z[4:]
    n = f.sum(axis=1)
    if np.any(n <= EPS_TOTAL_FORCE):
        idx = int(np.argmax(n <= EPS_TOTAL_FORCE))
        raise DegenerateTrial(
            f"trial {idx} total force {n[idx]:.6g} N is at or below the "
            f"{EPS_TOTAL_FORCE} N gate at the evaluated parameters"
        )
    return f, n


def _cost_terms(z: np.ndarray, data: _SessionArrays) -> CostBreakdown:
    f, n = _forces(z, data)
    cx = f @ data.tx / n
    cy = f @ data.ty / n
    cop_term = float(np.sum((data.ref_x - cx) ** 2 + (data.ref_y - cy) ** 2))
    grf_term = float(np.sum((data.ref_n - n) ** 2))
    if data.force_reg:
        reg = data.force_reg_weight * float(np.sum((f - data.f0) ** 2))
    else:
        reg = float(np.sum(data.w_zeta * (z - data.zeta0) ** 2))
    total = data.w_cop * cop_term + data.w_grf * grf_term + reg
    return CostBreakdown(total=total, cop=data.w_cop * cop_term, grf=data.w_grf * grf_term, regularizer=reg)


def _try_cost(z: np.ndarray, data: _SessionArrays) -> float:
    """Cost as a float, +inf when the point is inadmissible (gated trial or
    non-positive scale)."""
    if np.any(z[:4] <= 0.0):
        return math.inf
    try:
        return _cost_terms(z, data).total
    except DegenerateTrial:
        return math.inf


def _residuals(z: np.ndarray, data: _SessionArrays) -> np.ndarray:
    """Stacked weighted residual vector r with cost = r . r."""
    f, n = _forces(z, data)
    parts = []
    if data.w_cop > 0.0:
        s = math.sqrt(data.w_cop)
        parts.append(s * (data.ref_x - f @ data.tx / n))
        parts.append(s * (data.ref_y - f @ data.ty / n))
    if data.w_grf > 0.0:
        parts.append(math.sqrt(data.w_grf) * (data.ref_n - n))
    if data.force_reg:
        parts.append(math.sqrt(data.force_reg_weight) * (f - data.f0).ravel())
    else:
        parts.append(np.sqrt(data.w_zeta) * (z - data.zeta0))
    return np.concatenate(parts)


def _jacobian(z: np.ndarray, data: _SessionArrays) -> np.ndarray:
    f, n = _forces(z, data)
    blocks = []
    if data.w_cop > 0.0:
        s = math.sqrt(data.w_cop)
        cx = f @ data.tx / n
        cy = f @ data.ty / n
        inv_n = 1.0 / n[:, None]
        dx = (data.tx[None, :] - cx[:, None]) * inv_n
        dy = (data.ty[None, :] - cy[:, None]) * inv_n
        blocks.append(-s * np.hstack([data.raw * dx, dx]))
        blocks.append(-s * np.hstack([data.raw * dy, dy]))
    if data.w_grf > 0.0:
        s = math.sqrt(data.w_grf)
        ones = np.ones_like(data.raw)
        blocks.append(-s * np.hstack([data.raw, ones]))
    if data.force_reg:
        t_count = data.raw.shape[0]
        jac_f = np.zeros((4 * t_count, 8))
        rows = np.arange(4 * t_count)
        k = rows % 4
        jac_f[rows, k] = data.raw.ravel()
        jac_f[rows, 4 + k] = 1.0
        blocks.append(math.sqrt(data.force_reg_weight) * jac_f)
    else:
        blocks.append(np.diag(np.sqrt(data.w_zeta)))
    return np.vstack(blocks)


def _linear_rows(data: _SessionArrays) -> tuple[np.ndarray, np.ndarray]:
    """Rows of the denominator-cleared linear system A z = b."""
    a_blocks = []
    b_blocks = []
    if data.w_cop > 0.0:
        s = math.sqrt(data.w_cop)
        dx = data.ref_x[:, None] - data.tx[None, :]
        dy = data.ref_y[:, None] - data.ty[None, :]
        a_blocks.append(s * np.hstack([data.raw * dx, dx]))
        b_blocks.append(np.zeros(data.raw.shape[0]))
        a_blocks.append(s * np.hstack([data.raw * dy, dy]))
        b_blocks.append(np.zeros(data.raw.shape[0]))
    if data.w_grf > 0.0:
        s = math.sqrt(data.w_grf)
        a_blocks.append(s * np.hstack([data.raw, np.ones_like(data.raw)]))
        b_blocks.append(s * data.ref_n)
    if data.force_reg:
        s = math.sqrt(data.force_reg_weight)
        t_count = data.raw.shape[0]
        jac_f = np.zeros((4 * t_count, 8))
        rows = np.arange(4 * t_count)
        k = rows % 4
        jac_f[rows, k] = data.raw.ravel()
        jac_f[rows, 4 + k] = 1.0
        a_blocks.append(s * jac_f)
        b_blocks.append(s * data.f0.ravel())
    else:
        sw = np.sqrt(data.w_zeta)
        a_blocks.append(np.diag(sw))
        b_blocks.append(sw * data.zeta0)
    return np.vstack(a_blocks), np.concatenate(b_blocks)


def _solve_linearized_arrays(data: _SessionArrays) -> np.ndarray:
    a, b = _linear_rows(data)
    if a.shape[0] < 8:
        raise SingularSystem(f"only {a.shape[0]} residual equations for 8 unknowns")
    # Column equilibration keeps the rows well scaled; raw-count columns and
    # offset columns differ by the count magnitude otherwise.
    col = np.linalg.norm(a, axis=0)
    col[col == 0.0] = 1.0
    a_eq = a / col
    sv = np.linalg.svd(a_eq, compute_uv=False)
    if sv[-1] <= sv[0] * 1e-12:
        raise SingularSystem(
            "residual rows are rank deficient (degenerate trial geometry such as "
            "a single repeated protrusion, or a direction with no regularization)"
        )
    # Solve in the row space (SVD).  Forming the normal equations would square
    # the conditioning and lose the offset direction that only the regularizer
    # pins (the zero-sum, zero-moment pattern invisible to CoP/GRF data),
    # whose singular value sits near sqrt(w_zeta) / column scale.
    z_eq, *_ = np.linalg.lstsq(a_eq, b, rcond=None)
    z = z_eq / col
    if not np.all(np.isfinite(z)):
        raise SingularSystem("linear solve produced non-finite parameters")
    if np.any(z[:4] <= 0.0):
        raise SingularSystem(
            f"linear solve produced non-positive scale entries {z[:4]}; "
            "the session data cannot support a physical calibration"
        )
    return z


def _validate_solvable(cfg: CalibrationConfig):
    if cfg.w_cop <= 0.0 and cfg.w_grf <= 0.0:
        raise ValueError("at least one of w_cop and w_grf must be positive to solve")


def _trial_residuals(
    data: _SessionArrays, cop_z: np.ndarray, grf_z: np.ndarray
) -> tuple[TrialResidual, ...]:
    f_cop, n_cop = _forces(cop_z, data)
    cx = f_cop @ data.tx / n_cop
    cy = f_cop @ data.ty / n_cop
    n_grf = (data.raw * grf_z[:4] + grf_z[4:]).sum(axis=1)
    out = []
    for i in range(data.raw.shape[0]):
        out.append(
            TrialResidual(
                protrusion=data.protrusions[i],
                mass_kg=data.masses[i],
                cop_error_mm=math.hypot(cx[i] - data.ref_x[i], cy[i] - data.ref_y[i]),
                grf_error_n=float(n_grf[i] - data.ref_n[i]),
            )
        )
    return tuple(out)


def _build_result(
    z: np.ndarray,
    data: _SessionArrays,
    cfg: CalibrationConfig,
    iterations: int,
    status: str,
) -> CalibrationResult:
    initial = _cost_terms(data.zeta0, data)
    final = _cost_terms(z, data)
    # Never return a point worse than the anchor.
    if initial.total < final.total:
        z = data.zeta0.copy()
        final = initial
    params = ParamVector.from_array(z)
    grf_params = cfg.zeta0 if cfg.grf_from_anchor else params
    return CalibrationResult(
        params=params,
        grf_params=grf_params,
        zeta0=cfg.zeta0,
        final_cost=final,
        initial_cost=initial,
        iterations=iterations,
        status=status,
        residuals_before=_trial_residuals(data, data.zeta0, data.zeta0),
        residuals_after=_trial_residuals(data, z, grf_params.as_array()),
    )


def cost(zeta, session: CalibrationSession, cfg: CalibrationConfig) -> CostBreakdown:
    """Evaluate the calibration cost and its components at one point.

    Accepts a ParamVector or any 8-vector (offsets may make intermediate
    points physically odd; only the per-trial load gate is enforced).

    Raises:
        DegenerateTrial: some trial's measured total force is gated.
    """
    return _cost_terms(_as_zeta_array(zeta), _session_arrays(session, cfg))


def cost_gradient(zeta, session: CalibrationSession, cfg: CalibrationConfig) -> np.ndarray:
    """Analytic gradient of the cost; 8 entries ordered [c1..c4, d1..d4]."""
    data = _session_arrays(session, cfg)
    z = _as_zeta_array(zeta)
    return 2.0 * _jacobian(z, data).T @ _residuals(z, data)


def solve_linearized(session: CalibrationSession, cfg: CalibrationConfig) -> ParamVector:
    """One-shot linear least-squares solve of the denominator-cleared system.

    Each CoP residual is multiplied by the measured total force, which makes
    it exactly linear in the parameters (and implicitly reweights trials by
    their total force); GRF residuals and the regularizer are linear as
    stated.  Solved by orthogonal factorization of the equilibrated stacked
    rows, which keeps weakly regularized directions accurate.

    Raises:
        SingularSystem: rank-deficient residual rows or a solution with a
            non-positive scale entry.
    """
    _validate_solvable(cfg)
    return ParamVector.from_array(_solve_linearized_arrays(_session_arrays(session, cfg)))


def _refine_arrays(
    z_init: np.ndarray, data: _SessionArrays, cfg: CalibrationConfig
) -> CalibrationResult:
    z = z_init.copy()
    r = _residuals(z, data)
    current = float(r @ r)
    lam = DAMPING_INIT
    status = "max_iterations"
    iterations = 0
    for it in range(cfg.max_iterations):
        jac = _jacobian(z, data)
        grad = 2.0 * jac.T @ r
        if float(np.linalg.norm(grad)) < cfg.convergence_tol:
            status = "converged"
            break
        gram = jac.T @ jac
        diag = np.diag(gram).copy()
        diag = np.maximum(diag, 1e-12 * max(float(diag.max()), 1e-30))
        accepted = False
        while lam <= DAMPING_CEILING:
            try:
                step = np.linalg.solve(gram + lam * np.diag(diag), -(jac.T @ r))
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            candidate = z + step
            cand_cost = _try_cost(candidate, data)
            if cand_cost < current:
                z = candidate
                current = cand_cost
                r = _residuals(z, data)
                lam = max(lam / 10.0, DAMPING_FLOOR)
                accepted = True
                break
            lam *= 10.0
        iterations = it + 1
        if not accepted:
            status = "no_progress"
            break
    return _build_result(z, data, cfg, iterations, status)


def refine_gauss_newton(
    zeta_init, session: CalibrationSession, cfg: CalibrationConfig
) -> CalibrationResult:
    """Damped Gauss-Newton on the true residuals, starting from zeta_init.

    Steps are accepted only when the cost decreases (multiplicative damping,
    x10 on rejection, /10 on acceptance); iteration stops at the gradient
    tolerance, the iteration cap, or when damping exceeds its ceiling
    without descent (status "no_progress", best point so far returned).
    The returned cost never exceeds the cost at zeta_init nor at the anchor.

    Raises:
        DegenerateTrial: cost undefined at zeta_init or at the anchor.
    """
    data = _session_arrays(session, cfg)
    return _refine_arrays(_as_zeta_array(zeta_init), data, cfg)


def calibrate(session: CalibrationSession, cfg: CalibrationConfig) -> CalibrationResult:
    """Full calibration: linearized solve, then Gauss-Newton refinement.

    When cfg.solver is "linearized" the first stage's solution is returned
    directly (still never worse than the anchor).  With grf_from_anchor set,
    the result's GRF path keeps the anchor parameters and the updated ones
    serve only the CoP.

    Raises:
        DegenerateTrial: a trial is gated at the anchor.
        SingularSystem: the linear stage failed.
    """
    _validate_solvable(cfg)
    data = _session_arrays(session, cfg)
    anchor_cost = _cost_terms(data.zeta0, data).total
    z_lin = _solve_linearized_arrays(data)
    lin_cost = _try_cost(z_lin, data)
    if cfg.solver == "linearized":
        z_best = z_lin if lin_cost <= anchor_cost else data.zeta0
        return _build_result(z_best, data, cfg, 0, "linearized")
    z_init = z_lin if lin_cost < anchor_cost else data.zeta0
    return _refine_arrays(z_init, data, cfg)
