"""Batch harness: synthesize or load data, add noise, dispatch a solver,
write reproducible reports.

Reports are plain text with a stable field order and 17-significant-digit
numbers; sample dumps are CSV with columns index, x, Re f, Im f.  The
wall-time line is the only nondeterministic part of a report.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import model as mdl
from . import numerics, recovery, varpro
from .config import (
    ConfigError,
    ExperimentConfig,
    GridSpec,
    ModelSpec,
    SolverSpec,
)
from .errors import ExpsumsError
from .model import ExpSumParams, SampleGrid
from .recovery import SolverReport

__all__ = [
    "ReportRecord",
    "add_noise",
    "match_parameters",
    "run_experiment",
    "preset",
    "preset_variants",
    "PRESET_NAMES",
    "write_samples_csv",
    "read_samples_csv",
]

DENSE_GRID_POINTS = 512


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    return f"{_fmt(z.real)}{'+' if z.imag >= 0 else '-'}{_fmt(abs(z.imag))}j"


def add_noise(values, sigma: float, seed: int) -> np.ndarray:
    """Add i.i.d. complex Gaussian noise, standard deviation sigma per real
    component, from a deterministic seeded generator."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    values = np.asarray(values, dtype=complex)
    if sigma == 0:
        return values.copy()
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, values.shape) + 1j * rng.normal(
        0.0, sigma, values.shape
    )
    return values + noise


def match_parameters(est_c, est_a, true_c, true_a):
    """Greedy nearest-neighbor matching on exponents; returns max errors.

    The matching is a one-to-one assignment built greedily by ascending
    distance, so the reported maxima are an upper bound on the errors under
    the optimal assignment.  Unmatched terms (order mismatch) yield inf.
    """
    est_a = np.asarray(est_a)
    est_c = np.asarray(est_c)
    true_a = np.asarray(true_a)
    true_c = np.asarray(true_c)
    if est_a.size == 0 or true_a.size == 0:
        return math.inf, math.inf, 0
    pairs = sorted(
        ((abs(true_a[i] - est_a[j]), i, j)
         for i in range(true_a.size) for j in range(est_a.size)),
        key=lambda t: (t[0], t[1], t[2]),
    )
    used_i: set = set()
    used_j: set = set()
    err_a = 0.0
    err_c = 0.0
    for d, i, j in pairs:
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        err_a = max(err_a, float(abs(true_a[i] - est_a[j])))
        err_c = max(err_c, float(abs(true_c[i] - est_c[j])))
        if len(used_i) == min(true_a.size, est_a.size):
            break
    if est_a.size != true_a.size:
        return math.inf, math.inf, len(used_i)
    return err_a, err_c, len(used_i)


@dataclass
class ReportRecord:
    """Everything an experiment produced, ready to serialize."""

    name: str
    status: str
    config: ExperimentConfig
    report: Optional[SolverReport] = None
    recovered_terms: Optional[tuple] = None  # physical (c, alpha) pairs
    err_alpha: Optional[float] = None
    err_c: Optional[float] = None
    dense_error: Optional[float] = None
    error_message: str = ""
    wall_time_s: float = 0.0
    files: dict = field(default_factory=dict)

    def to_text(self) -> str:
        cfg = self.config
        lines = []
        add = lines.append
        add("# expsums experiment report")
        add("[experiment]")
        add(f"name = {self.name}")
        add(f"status = {self.status}")
        if self.error_message:
            add(f"error = {self.error_message}")
        add("[model]")
        add(f"kind = {cfg.model.kind}")
        if cfg.model.beta is not None:
            add(f"beta = {_fmt_complex(cfg.model.beta)}")
        if cfg.model.substituted is not None:
            add(f"substituted = {str(cfg.model.substituted).lower()}")
        add("[grid]")
        add(f"x0 = {_fmt(cfg.grid.x0)}")
        add(f"h = {_fmt(cfg.grid.h)}")
        add(f"count = {cfg.grid.count}")
        add(f"T = {_fmt(cfg.grid.T)}")
        if cfg.grid.jitter:
            add(f"jitter = {_fmt(cfg.grid.jitter)}")
        add("[solver]")
        add(f"kind = {cfg.solver.kind}")
        if cfg.solver.M is not None:
            add(f"M = {cfg.solver.M}")
        if cfg.solver.L is not None:
            add(f"L = {cfg.solver.L}")
        add(f"epsilon = {_fmt(cfg.solver.epsilon)}")
        add(f"rank_mode = {cfg.solver.rank_mode}")
        add("[noise]")
        add(f"sigma = {_fmt(cfg.noise.sigma)}")
        add(f"seed = {cfg.noise.seed}")
        if cfg.truth is not None:
            add("[truth]")
            for k, (c, a) in enumerate(cfg.truth, start=1):
                add(f"c_{k:02d} = {_fmt_complex(c)}")
                add(f"alpha_{k:02d} = {_fmt_complex(a)}")
        if self.report is not None:
            rep = self.report
            add("[result]")
            add(f"detected_M = {rep.detected_M}")
            terms = self.recovered_terms or tuple(
                zip(rep.coefficients, rep.exponents)
            )
            for k, (c, a) in enumerate(terms, start=1):
                add(f"c_{k:02d} = {_fmt_complex(c)}")
                add(f"alpha_{k:02d} = {_fmt_complex(a)}")
            add("singular_values = "
                + ", ".join(_fmt(s) for s in rep.singular_values))
            add(f"linear_residual = {_fmt(rep.linear_residual)}")
            for key in sorted(rep.diagnostics):
                value = rep.diagnostics[key]
                if isinstance(value, float):
                    add(f"{key} = {_fmt(value)}")
                elif isinstance(value, (bool, int, str)):
                    add(f"{key} = {value}")
        add("[errors]")
        add(f"err_alpha = {_fmt(self.err_alpha) if self.err_alpha is not None else 'n/a'}")
        add(f"err_c = {_fmt(self.err_c) if self.err_c is not None else 'n/a'}")
        add(f"dense_error = {_fmt(self.dense_error) if self.dense_error is not None else 'n/a'}")
        add("[timing]")
        add(f"wall_time_s = {_fmt(self.wall_time_s)}")
        return "\n".join(lines) + "\n"


def write_samples_csv(path, points, values) -> None:
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=complex)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,x,Re f,Im f\n")
        for k, (x, v) in enumerate(zip(points, values)):
            fh.write(f"{k},{_fmt(x)},{_fmt(v.real)},{_fmt(v.imag)}\n")


def read_samples_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float, ndmin=2)
    if data.shape[1] != 4:
        raise ConfigError("sample files need columns index,x,Re f,Im f")
    return data[:, 1], data[:, 2] + 1j * data[:, 3]


def _build_model(spec: ModelSpec) -> mdl.GhModel:
    if spec.kind == "gaussian":
        return mdl.make_builtin_model(
            "gaussian", beta=spec.beta, substituted=spec.substituted
        )
    return mdl.make_builtin_model(spec.kind)


def _internal_truth(cfg: ExperimentConfig, model: mdl.GhModel) -> ExpSumParams:
    physical = ExpSumParams(cfg.truth)
    if cfg.model.kind == "gaussian":
        return mdl.gaussian_internal_terms(
            physical, model.params["beta"], model.params["substituted"]
        )
    return physical


def _physical_report_terms(cfg: ExperimentConfig, model: mdl.GhModel,
                           report: SolverReport) -> tuple:
    if cfg.model.kind == "gaussian" and report.detected_M:
        phys = mdl.gaussian_physical_terms(
            report.coefficients, report.exponents,
            model.params["beta"], model.params["substituted"],
        )
        return phys.terms
    return tuple(zip(report.coefficients, report.exponents))


def _jittered_nodes(grid: GridSpec, seed: int) -> np.ndarray:
    base = grid.x0 + grid.h * np.arange(grid.count)
    if grid.jitter == 0:
        return base
    rng = np.random.default_rng(seed + 1)  # decoupled from the noise stream
    jitter = rng.uniform(-grid.jitter, grid.jitter, grid.count) * abs(grid.h)
    jitter[0] = abs(jitter[0])
    jitter[-1] = -abs(jitter[-1])
    nodes = base + (jitter if grid.h > 0 else -jitter)
    if np.any(np.diff(nodes) <= 0):
        raise ConfigError("jitter is too large to keep the nodes ordered")
    return nodes


def _dispatch(cfg: ExperimentConfig, model, grid, points, values):
    """Returns (solver report, extras dict)."""
    solver = cfg.solver
    extras: dict = {}
    if solver.kind == "noneq":
        if cfg.model.kind != "classical":
            raise ConfigError("the noneq solver works on the classical model")
        report, reconstruct = recovery.esprit_nonequispaced(
            points, values,
            L=solver.L, epsilon=solver.epsilon, h=abs(grid.h), T=grid.T,
            rank_relative=solver.rank_mode == "relative",
            warp_kind=solver.warp_kind,
        )
        extras["reconstruct"] = reconstruct
        return report, extras

    if solver.kind == "derivatives":
        report = recovery.recover_from_derivatives(
            values, model, solver.M, grid.x0
        )
        return report, extras

    samples = mdl.normalize_samples(model, grid, values)
    if solver.kind == "direct":
        return recovery.prony_direct(samples, solver.M), extras
    if solver.kind == "esprit":
        return recovery.esprit(
            samples, N=grid.count // 2, L=solver.L, epsilon=solver.epsilon,
            rank_relative=solver.rank_mode == "relative",
        ), extras

    # varpro: shift-invariance start, then damped least-squares refinement
    start = recovery.esprit(
        samples, N=grid.count // 2, L=solver.L, epsilon=solver.epsilon,
        rank_relative=solver.rank_mode == "relative",
    )
    if start.detected_M == 0:
        return start, extras
    z, coeffs, trace = varpro.levenberg_marquardt(
        start.roots, samples.values, solver.varpro or varpro.VarproConfig()
    )
    alphas = np.atleast_1d(numerics.log_branch(z, samples.h))
    prefactors = np.exp(alphas * samples.offset)
    diagnostics = dict(start.diagnostics)
    diagnostics.update(
        solver="varpro",
        lm_termination=trace.termination,
        lm_iterations=len(trace.steps) - 1,
        lm_rejected=trace.rejected,
        lm_initial_objective=float(trace.steps[0].objective),
        lm_final_objective=float(trace.steps[-1].objective),
    )
    residual = float(
        np.linalg.norm(
            (z[None, :] ** np.arange(len(samples.values))[:, None]) @ coeffs
            - samples.values
        )
    )
    report = SolverReport(
        detected_M=z.size,
        exponents=alphas,
        roots=np.asarray(z),
        coefficients=np.asarray(coeffs) / prefactors,
        singular_values=start.singular_values,
        linear_residual=residual,
        diagnostics=diagnostics,
    )
    extras["trace"] = trace
    return report, extras


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ReportRecord:
    """Run one configured experiment; optionally write report and dumps.

    Solver failures are captured in the record (status "failed"); schema or
    grid problems raise ConfigError.
    """
    started = time.perf_counter()
    model = _build_model(cfg.model)
    grid = SampleGrid(x0=cfg.grid.x0, h=cfg.grid.h, count=cfg.grid.count,
                      T=cfg.grid.T)

    truth_internal = None
    if cfg.truth is not None:
        truth_internal = _internal_truth(cfg, model)
        check_m = truth_internal.M
    else:
        check_m = cfg.solver.M or cfg.solver.L or 1

    if cfg.solver.kind not in ("noneq", "derivatives"):
        validation = mdl.validate_grid(model, grid, check_m)
        if not validation.ok and not cfg.allow_grid_violation:
            raise ConfigError(
                "grid violates the sampling rules: "
                + "; ".join(validation.violations)
            )

    # assemble the data the solver will see
    if cfg.samples_path is not None:
        points, values = read_samples_csv(cfg.samples_path)
        if cfg.solver.kind not in ("noneq", "derivatives") and points.size != grid.count:
            raise ConfigError("sample file length does not match the grid")
    else:
        if cfg.solver.kind == "derivatives":
            points = np.full(2 * cfg.solver.M, cfg.grid.x0)
            values = mdl.derivative_samples(
                truth_internal, model, cfg.grid.x0, 2 * cfg.solver.M
            )
        elif cfg.solver.kind == "noneq":
            points = _jittered_nodes(cfg.grid, cfg.noise.seed)
            values = mdl.synthesize(truth_internal, model, points)
        else:
            points = mdl.grid_points(model, grid)
            values = mdl.synthesize(truth_internal, model, points)
    values = add_noise(values, cfg.noise.sigma, cfg.noise.seed)

    record = ReportRecord(name=cfg.name, status="ok", config=cfg)
    try:
        report, extras = _dispatch(cfg, model, grid, points, values)
        record.report = report
        record.recovered_terms = _physical_report_terms(cfg, model, report)
    except (ExpsumsError, np.linalg.LinAlgError) as exc:
        record.status = "failed"
        record.error_message = f"{type(exc).__name__}: {exc}"
        extras = {}

    if record.status == "ok" and cfg.truth is not None:
        rec_c = np.array([c for c, _ in record.recovered_terms])
        rec_a = np.array([a for _, a in record.recovered_terms])
        true_c = np.array([c for c, _ in cfg.truth])
        true_a = np.array([a for _, a in cfg.truth])
        err_a, err_c, _ = match_parameters(rec_c, rec_a, true_c, true_a)
        record.err_alpha = err_a
        record.err_c = err_c
        if cfg.solver.kind not in ("derivatives",) and points.size >= 2:
            dense = np.linspace(points.min(), points.max(), DENSE_GRID_POINTS)
            f_true = mdl.synthesize(truth_internal, model, dense)
            if "reconstruct" in extras:
                f_hat = extras["reconstruct"](dense)
            else:
                g = np.asarray(model.G(dense), dtype=float)
                h_env = np.asarray(model.H(dense), dtype=complex)
                f_hat = h_env * (
                    np.exp(np.outer(g, record.report.exponents))
                    @ record.report.coefficients
                )
            record.dense_error = float(np.max(np.abs(f_hat - f_true)))

    record.wall_time_s = time.perf_counter() - started

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = cfg.name
        report_path = out / f"{stem}.report.txt"
        report_path.write_text(record.to_text(), encoding="utf-8")
        record.files["report"] = str(report_path)
        samples_path = out / f"{stem}.samples.csv"
        write_samples_csv(samples_path, points, values)
        record.files["samples"] = str(samples_path)
        if "trace" in extras:
            trace_path = out / f"{stem}.trace.csv"
            trace_path.write_text(extras["trace"].to_csv(), encoding="utf-8")
            record.files["trace"] = str(trace_path)
    return record


# ---------------------------------------------------------------------------
# bundled reference experiments

_GAUSS_C = (
    -1.754 - 0.756j, -1.193 + 1.694j, 0.174 - 0.279j, -1.617 - 1.261j,
    2.066 + 1.620j, -1.831 + 1.919j, -1.644 - 0.245j, -1.976 - 1.556j,
    -1.634 - 0.968j, -0.386 - 0.365j,
)
_GAUSS_ALPHA = (0.380, -0.951, 0.411, 0.845, -1.113, -1.530, -0.813, -0.725,
                -0.303, -0.031)

_SINE_C = (2.104, 0.363, 2.578, 1.180, 0.497, 1.892, 2.274, 2.933, -2.997,
           2.192)
_SINE_ALPHA = (1.499, 0.540, -1.591, 1.046, -2.619, 0.791, 1.011, 1.444,
               2.455, 3.030)

_MIX_ALPHA = (math.pi / 2, 0.25j * math.pi, 0.4 + 1j, -0.5, -1.0)
_MIX_C = (0.5, 2.0, -3.0, 0.4j, -0.2)

PRESET_NAMES = ("ex-gauss", "ex-sine", "ex-table3")


def preset_variants(name: str) -> tuple:
    """Configs for a named reference experiment (ex-table3 has two)."""
    if name == "ex-gauss":
        return (
            ExperimentConfig(
                name="ex-gauss",
                model=ModelSpec(kind="gaussian", beta=1j, substituted=True),
                grid=GridSpec(x0=-1.0, h=1.0, count=20, T=3.1),
                solver=SolverSpec(kind="direct", M=10),
                truth=tuple(zip(_GAUSS_C, _GAUSS_ALPHA)),
            ),
        )
    if name == "ex-sine":
        return (
            ExperimentConfig(
                name="ex-sine",
                model=ModelSpec(kind="sine"),
                grid=GridSpec(x0=-math.pi / 2 + 1.0 / 34.0, h=1.0 / 17.0,
                              count=34, T=4.0),
                solver=SolverSpec(kind="esprit", L=10, epsilon=1e-8),
                truth=tuple(zip(_SINE_C, _SINE_ALPHA)),
            ),
        )
    if name == "ex-table3":
        # the exponents span e^{-1} .. e^{pi/2}; a window balancing the
        # growing and decaying terms keeps all five modes above the
        # float64 noise floor of the Hankel singular values
        return (
            ExperimentConfig(
                name="ex-table3-esprit",
                model=ModelSpec(kind="classical"),
                grid=GridSpec(x0=-18.0, h=1.0, count=30, T=3.0),
                solver=SolverSpec(kind="esprit", L=10, epsilon=1e-8),
                truth=tuple(zip(_MIX_C, _MIX_ALPHA)),
            ),
            ExperimentConfig(
                name="ex-table3-direct",
                model=ModelSpec(kind="classical"),
                grid=GridSpec(x0=0.0, h=1.0, count=10, T=3.0),
                solver=SolverSpec(kind="direct", M=5),
                truth=tuple(zip(_MIX_C, _MIX_ALPHA)),
            ),
        )
    raise ConfigError(
        f"unknown preset {name!r}; valid names: {', '.join(PRESET_NAMES)}"
    )


def preset(name: str) -> ExperimentConfig:
    """Primary config of a named reference experiment."""
    return preset_variants(name)[0]
