"""Sparse least-squares approximation by exponential sums via variable projection.

The data vector y of length L+1 is approximated by sum_j c_j z_j^k.  The
linear coefficients are eliminated through c = V_z^+ y, leaving the
objective ||(I - P_z) y||^2 over the nodes z alone, where P_z = V_z V_z^+.
The module provides the fitted/orthogonal split, the closed-form Jacobian
of the fitted vector r(z) = P_z y with respect to real node perturbations,
the gradient and first-order stationarity measure, damped Gauss-Newton
(Levenberg-Marquardt) refinement, and a fixed-point root-update sweep.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateStepError, IllPosedError, NumericalFailureError

__all__ = [
    "VarproConfig",
    "VarproTrace",
    "VarproStep",
    "VandermondePair",
    "ProjectionSplit",
    "vandermonde_pair",
    "projection_apply",
    "residual_jacobian",
    "objective_gradient",
    "stationarity_residual",
    "gauss_newton_step",
    "levenberg_marquardt",
    "root_update_iterate",
]

NODE_SEPARATION = 1e-12
RANK_TOLERANCE = 1e-13
DAMPING_CEILING = 1e32


@dataclass(frozen=True)
class VarproConfig:
    """Damping schedule and stopping rules for the refinement loop."""

    damping0: float = 1e-6
    damping_increase: float = 10.0
    damping_decrease: float = 10.0
    max_iterations: int = 100
    step_tolerance: float = 1e-12
    gradient_tolerance: float = 1e-8

    def __post_init__(self):
        if self.damping0 <= 0:
            raise ValueError("initial damping must be positive")
        if self.damping_increase <= 1 or self.damping_decrease <= 1:
            raise ValueError("damping factors must exceed 1")
        if self.step_tolerance <= 0 or self.gradient_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")


@dataclass(frozen=True)
class VarproStep:
    iteration: int
    z: tuple
    objective: float
    damping: float
    step_norm: float


@dataclass
class VarproTrace:
    """Accepted-step history; the objective column is non-increasing.

    ``final_gradient`` records the full complex J^* r at the final nodes;
    the iteration itself only uses its real part.
    """

    steps: list = field(default_factory=list)
    termination: str = ""
    rejected: int = 0
    final_gradient: tuple = ()

    def objectives(self) -> np.ndarray:
        return np.array([s.objective for s in self.steps])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "objective", "damping", "step_norm"])
        for s in self.steps:
            writer.writerow([s.iteration, repr(s.objective), repr(s.damping),
                             repr(s.step_norm)])
        return buf.getvalue()


@dataclass(frozen=True)
class VandermondePair:
    """V[l, j] = z_j^l and its node derivative dV[l, j] = l z_j^(l-1)."""

    V: np.ndarray
    dV: np.ndarray


@dataclass(frozen=True)
class ProjectionSplit:
    """y split into its part inside span(V_z) and the orthogonal remainder."""

    fitted: np.ndarray
    orthogonal: np.ndarray
    coefficients: np.ndarray
    condition: float


def _nodes(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex).ravel()
    if z.size == 0:
        raise ValueError("need at least one node")
    diffs = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(diffs, np.inf)
    if diffs.min() < NODE_SEPARATION:
        raise IllPosedError("duplicate nodes")
    return z


def vandermonde_pair(z, L: int) -> VandermondePair:
    """Vandermonde matrix of size (L+1) x M together with its derivative."""
    z = _nodes(z)
    if L + 1 < z.size:
        raise ValueError("need L + 1 >= M")
    powers = np.arange(L + 1)[:, None]
    v = z[None, :] ** powers
    dv = np.zeros_like(v)
    dv[1:, :] = powers[1:] * z[None, :] ** (powers[1:] - 1)
    return VandermondePair(V=v, dV=dv)


def _split(z, y):
    """SVD-backed projection; returns (pair, split, pinv(V))."""
    y = np.asarray(y, dtype=complex).ravel()
    z = _nodes(z)
    pair = vandermonde_pair(z, y.size - 1)
    u, s, wh = np.linalg.svd(pair.V, full_matrices=False)
    if s[-1] <= RANK_TOLERANCE * s[0]:
        raise IllPosedError("Vandermonde matrix is rank deficient",
                            condition=math.inf)
    condition = float(s[0] / s[-1])
    pinv = (wh.conj().T / s) @ u.conj().T
    coefficients = pinv @ y
    fitted = pair.V @ coefficients
    split = ProjectionSplit(fitted=fitted, orthogonal=y - fitted,
                            coefficients=coefficients, condition=condition)
    return pair, split, pinv


def projection_apply(z, y) -> ProjectionSplit:
    """Project y onto the span of the node powers: P_z y, (I-P_z) y, V_z^+ y."""
    _, split, _ = _split(z, y)
    return split


def residual_jacobian(z, y) -> np.ndarray:
    """Jacobian of the fitted vector r(z) = P_z y along real node directions.

    J = (I - P) V' diag(V^+ y) + (V^+)* diag((V')^* (I - P) y).
    On exact data the second summand vanishes with (I - P) y.
    """
    pair, split, pinv = _split(z, y)
    first = (pair.dV - pair.V @ (pinv @ pair.dV)) * split.coefficients[None, :]
    second = pinv.conj().T * (pair.dV.conj().T @ split.orthogonal)[None, :]
    return first + second


def objective_gradient(z, y) -> np.ndarray:
    """Gradient 2 J^* r of ||P_z y||^2, in its diagonal short form.

    Equals 2 * conj((V')^* (I-P) y) * (V^+ y) elementwise; for real nodes and
    data this is exactly d/dz_j of the projected energy.
    """
    pair, split, _ = _split(z, y)
    a = pair.dV.conj().T @ split.orthogonal
    return 2.0 * np.conj(a) * split.coefficients


def stationarity_residual(z, y) -> float:
    """Norm of (V')^* (I - P_z) y; zero at any optimum of the node problem."""
    pair, split, _ = _split(z, y)
    return float(np.linalg.norm(pair.dV.conj().T @ split.orthogonal))


def _normal_system(z, y):
    j = residual_jacobian(z, y)
    split = projection_apply(z, y)
    jstar_r = j.conj().T @ split.fitted
    return j, split, jstar_r


def gauss_newton_step(z, y) -> np.ndarray:
    """Solve (J^* J) delta = Re(J^* r) for the undamped step.

    This is the usual Gauss-Newton step for the residual (I - P_z) y, whose
    Jacobian is -J; the identity Re(J^* (I-P) y) = Re(J^* P y) lets the
    right-hand side be written through the fitted vector r = P_z y.
    """
    j, _, jstar_r = _normal_system(z, y)
    normal = j.conj().T @ j
    rhs = np.real(jstar_r)
    try:
        cond = np.linalg.cond(normal)
        if not np.isfinite(cond) or cond > 1e14:
            raise DegenerateStepError(
                f"normal matrix condition {cond:.3e}; use damping"
            )
        return np.linalg.solve(normal, rhs.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise DegenerateStepError("normal matrix is singular") from exc


def levenberg_marquardt(z0, y, config: Optional[VarproConfig] = None):
    """Damped refinement of the nodes; returns (z, coefficients, trace).

    A trial step solves (J^* J + damping I) delta = Re(J^* r) (the damped
    Gauss-Newton system, see ``gauss_newton_step``) and is accepted only if
    the objective ||(I - P) y||^2 decreases; the damping is divided by the
    decrease factor on acceptance and multiplied by the increase factor on
    rejection.
    """
    cfg = config or VarproConfig()
    y = np.asarray(y, dtype=complex).ravel()
    z = _nodes(z0).copy()
    ynorm = float(np.linalg.norm(y))

    split = projection_apply(z, y)
    objective = float(np.linalg.norm(split.orthogonal) ** 2)
    trace = VarproTrace()
    trace.steps.append(VarproStep(0, tuple(z), objective, cfg.damping0, 0.0))
    if not math.isfinite(objective):
        trace.termination = "numerical-failure"
        raise NumericalFailureError("objective is not finite", trace=trace)

    damping = cfg.damping0
    identity = np.eye(z.size)
    for iteration in range(1, cfg.max_iterations + 1):
        if stationarity_residual(z, y) <= cfg.gradient_tolerance * ynorm:
            trace.termination = "gradient"
            break
        j, _, jstar_r = _normal_system(z, y)
        normal = j.conj().T @ j
        rhs = np.real(jstar_r).astype(complex)
        accepted = False
        while damping <= DAMPING_CEILING:
            try:
                delta = np.linalg.solve(normal + damping * identity, rhs)
            except np.linalg.LinAlgError:
                damping *= cfg.damping_increase
                trace.rejected += 1
                continue
            candidate = z + delta
            try:
                cand_split = projection_apply(candidate, y)
                cand_objective = float(np.linalg.norm(cand_split.orthogonal) ** 2)
            except IllPosedError:
                cand_objective = math.inf
            if cand_objective < objective:
                z = candidate
                objective = cand_objective
                step_norm = float(np.linalg.norm(delta))
                damping /= cfg.damping_decrease
                trace.steps.append(
                    VarproStep(iteration, tuple(z), objective, damping, step_norm)
                )
                accepted = True
                break
            damping *= cfg.damping_increase
            trace.rejected += 1
        if not accepted:
            trace.termination = "damping-overflow"
            break
        if step_norm <= cfg.step_tolerance * (1.0 + float(np.linalg.norm(z))):
            trace.termination = "step"
            break
    else:
        trace.termination = "max-iterations"

    _, _, jstar_r = _normal_system(z, y)
    trace.final_gradient = tuple(jstar_r)
    coefficients = projection_apply(z, y).coefficients
    return z, coefficients, trace


def _stationarity_sweep(z, y):
    """One update: zeros of the polynomial with coefficients l * [(I-P)y]_l,
    greedily matched one-to-one to the current nodes."""
    split = projection_apply(z, y)
    w = np.arange(y.size) * split.orthogonal
    scale = float(np.linalg.norm(y)) or 1.0
    if np.linalg.norm(w) <= 1e-14 * scale:
        return z, True
    mags = np.abs(w)
    top = int(np.max(np.nonzero(mags > 1e-15 * mags.max())[0]))
    if top < 1:
        return z, True
    zeros = np.roots(w[: top + 1][::-1])
    m = z.size
    matched = z.copy()
    dist = np.abs(z[:, None] - zeros[None, :])
    pairs = sorted(
        ((dist[i, k], i, k) for i in range(m) for k in range(zeros.size)),
        key=lambda t: (t[0], t[1], t[2]),
    )
    used_nodes: set = set()
    used_zeros: set = set()
    for _, i, k in pairs:
        if i in used_nodes or k in used_zeros:
            continue
        matched[i] = zeros[k]
        used_nodes.add(i)
        used_zeros.add(k)
        if len(used_nodes) == m:
            break
    return matched, False


def root_update_iterate(z0, y, max_iter: int = 50, tol: float = 1e-12) -> np.ndarray:
    """Safeguarded fixed-point node update from first-order stationarity.

    Each sweep forms the polynomial whose coefficient vector is
    diag(0, 1, ..., L) (I - P_z) y, computes its zeros, and keeps the M
    zeros nearest the current nodes under greedy one-to-one matching (each
    zero used at most once, ties broken by index order).  On an exact fit
    the coefficient vector vanishes and the current nodes are returned.

    Stationary points of the node problem are exactly the fixed points of
    this map, but away from them the raw update amplifies perturbations (a
    measured Lipschitz constant of 20-300 at the optimum across noise
    levels), so a sweep is only kept while the stationarity residual does
    not increase; the iteration stops at the first non-improving sweep.
    """
    y = np.asarray(y, dtype=complex).ravel()
    z = _nodes(z0).copy()
    best = stationarity_residual(z, y)
    for _ in range(max_iter):
        try:
            candidate, fixed = _stationarity_sweep(z, y)
        except IllPosedError:
            break
        if fixed:
            return z
        try:
            cand_res = stationarity_residual(candidate, y)
        except IllPosedError:
            break
        if cand_res > best:
            break
        move = float(np.max(np.abs(candidate - z)))
        z = candidate
        best = cand_res
        if move < tol:
            break
    return z
