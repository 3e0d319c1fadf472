"""Prony-type solvers for generalized exponential sums.

Given the normalized sequence f_l = f(x_l)/H(x_l) on a uniform warped grid,
the terms satisfy f_l = sum_j b_j z_j^l with z_j = exp(alpha_j h) and
b_j = c_j exp(alpha_j G(x0)).  This module recovers (z_j, c_j) by the direct
annihilating-polynomial route, by an ESPRIT-style pencil with automatic
order detection, from derivative samples at a single point, with deflation
of known roots, and from non-equispaced samples via a monotone node warp.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
import sympy as sp
from scipy.interpolate import PchipInterpolator

from . import numerics
from .errors import CapabilityError, DegeneratePencilError, IllPosedError
from .model import GhModel, NormalizedSampleSeq

__all__ = [
    "SolverReport",
    "OperatorWeights",
    "NodeWarp",
    "prony_direct",
    "esprit",
    "operator_weights",
    "recover_from_derivatives",
    "deflate",
    "recover_with_known_roots",
    "build_node_warp",
    "esprit_nonequispaced",
]

CONDITION_WARN = 1e12
CONDITION_FAIL = 1e14


@dataclass(frozen=True)
class SolverReport:
    """Recovered parameters plus diagnostics.

    ``roots`` are the characteristic-polynomial zeros; for sample-based
    solvers these are z_j = exp(alpha_j h), for the derivative-sample path
    they coincide with the exponents themselves.  ``linear_residual`` is the
    norm of the coefficient-fit residual.
    """

    detected_M: int
    exponents: np.ndarray
    roots: np.ndarray
    coefficients: np.ndarray
    singular_values: np.ndarray
    linear_residual: float
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OperatorWeights:
    """Lower-triangular weights lambda[l, r] with (A^l f)(x0) = sum_r lambda[l, r] f^(r)(x0)."""

    matrix: np.ndarray

    @property
    def order(self) -> int:
        return self.matrix.shape[0]


def _check_condition(cond: float, context: str, diagnostics: dict) -> None:
    diagnostics["condition"] = float(cond)
    if cond > CONDITION_FAIL:
        raise IllPosedError(
            f"{context} condition {cond:.3e} exceeds {CONDITION_FAIL:.0e}",
            condition=float(cond),
        )
    if cond > CONDITION_WARN:
        diagnostics["condition_warning"] = True
        warnings.warn(
            f"{context} condition {cond:.3e} exceeds {CONDITION_WARN:.0e}; "
            "results may be inaccurate",
            RuntimeWarning,
            stacklevel=3,
        )


def _fit_coefficients(values: np.ndarray, roots: np.ndarray, exponents: np.ndarray,
                      offset: float):
    """Coefficients from the overdetermined system f_l = sum c_j e^{a_j G(x0)} z_j^l."""
    prefactors = np.exp(exponents * offset)
    coeffs, residual = numerics.vandermonde_lsq(roots, values, prefactors)
    return coeffs, residual


def prony_direct(samples: NormalizedSampleSeq, M: int) -> SolverReport:
    """Direct recovery of a known number of terms from 2M normalized samples.

    Solves the square annihilating system
    sum_{k<M} p_k f_{k+m} = -f_{M+m}, m = 0..M-1, takes companion-matrix
    zeros, pulls exponents through the principal logarithm branch and fits
    the coefficients over all available samples.
    """
    f = samples.values
    if M < 1:
        raise ValueError("M must be positive")
    if f.size < 2 * M:
        raise ValueError(f"need at least {2 * M} samples, got {f.size}")
    diagnostics: dict = {"h": samples.h, "offset": samples.offset, "solver": "direct"}
    hankel = numerics.build_hankel(numerics.HankelSpec(tuple(f[: 2 * M - 1]), M, M))
    rhs = -f[M : 2 * M]
    sigma = np.linalg.svd(hankel, compute_uv=False)
    cond = math.inf if sigma[-1] == 0 else float(sigma[0] / sigma[-1])
    _check_condition(cond, "Prony Hankel block", diagnostics)
    p = np.linalg.solve(hankel, rhs)
    poly = numerics.PronyPolynomial(tuple(p) + (1.0,))
    roots = numerics.polynomial_roots(poly)
    alphas = numerics.log_branch(roots, samples.h)
    coeffs, residual = _fit_coefficients(f, roots, alphas, samples.offset)
    return SolverReport(
        detected_M=M,
        exponents=alphas,
        roots=roots,
        coefficients=coeffs,
        singular_values=sigma,
        linear_residual=residual,
        diagnostics=diagnostics,
    )


def esprit(samples: NormalizedSampleSeq, N: Optional[int] = None,
           L: Optional[int] = None, epsilon: float = 1e-8, *,
           rank_relative: bool = False) -> SolverReport:
    """Shift-invariance recovery with automatic order detection.

    Builds the (2N-L) x (L+1) Hankel matrix, detects the order M from its
    singular values, rebuilds the (2N-M) x (M+1) matrix, and reads the roots
    off the generalized eigenvalue problem W1 v = z W0 v formed from the
    right singular factor with one column and the last row deleted.

    Parameters
    ----------
    N:
        Half the number of samples used (defaults to len(samples) // 2).
    L:
        Upper bound for the number of terms, M <= L <= N (defaults to N).
    epsilon:
        Singular-value threshold; interpreted relative to sigma_1 when
        ``rank_relative`` is set.
    """
    f = samples.values
    if N is None:
        N = f.size // 2
    if L is None:
        L = N
    if not 1 <= L <= N:
        raise ValueError("need 1 <= L <= N")
    if f.size < 2 * N:
        raise ValueError(f"need 2N = {2 * N} samples, got {f.size}")
    f = f[: 2 * N]
    diagnostics: dict = {
        "h": samples.h,
        "offset": samples.offset,
        "solver": "esprit",
        "N": N,
        "L": L,
        "epsilon": epsilon,
        "rank_relative": rank_relative,
    }

    probe = numerics.build_hankel(numerics.HankelSpec(tuple(f), 2 * N - L, L + 1))
    sigma_probe = np.linalg.svd(probe, compute_uv=False)
    rank = numerics.numerical_rank(sigma_probe, epsilon, relative=rank_relative)
    M = min(rank.rank, L)
    diagnostics["gap_ratio"] = rank.gap_ratio
    if M == 0:
        return SolverReport(
            detected_M=0,
            exponents=np.zeros(0, dtype=complex),
            roots=np.zeros(0, dtype=complex),
            coefficients=np.zeros(0, dtype=complex),
            singular_values=sigma_probe,
            linear_residual=float(np.linalg.norm(f)),
            diagnostics=diagnostics,
        )

    working = numerics.build_hankel(numerics.HankelSpec(tuple(f), 2 * N - M, M + 1))
    decomp = numerics.svd(working)
    wh = decomp.right  # (M+1) x (M+1); columns track the Hankel columns
    w0 = wh[:M, :M]
    w1 = wh[:M, 1:]
    cond_w0 = float(np.linalg.cond(w0))
    diagnostics["pencil_condition"] = cond_w0
    if not np.isfinite(cond_w0) or cond_w0 > CONDITION_FAIL:
        raise DegeneratePencilError(
            f"restricted right factor is numerically singular (cond {cond_w0:.3e})"
        )
    roots = scipy.linalg.eig(w1, w0, right=False)
    alphas = numerics.log_branch(roots, samples.h)
    coeffs, residual = _fit_coefficients(f, roots, alphas, samples.offset)
    return SolverReport(
        detected_M=M,
        exponents=alphas,
        roots=roots,
        coefficients=coeffs,
        singular_values=sigma_probe,
        linear_residual=residual,
        diagnostics=diagnostics,
    )


def operator_weights(model: GhModel, x0: float, order: int) -> OperatorWeights:
    """Weights connecting derivative samples to iterates of the first-order operator.

    The operator A f = g f' + h f (g = 1/G', h = -H'/(G'H)) acts on
    f^(r)-coefficient functions by
    lambda[l+1, r] = g * lambda[l, r]' + h * lambda[l, r] + g * lambda[l, r-1],
    starting from lambda[0, 0] = 1.  The recursion differentiates the weight
    functions themselves, so the model must carry symbolic g and h.
    """
    if order < 1:
        raise ValueError("order must be positive")
    if model.g_sym is None or model.h_sym is None:
        raise CapabilityError(
            "model carries no symbolic g/h expressions for derivative recovery"
        )
    x = sp.Symbol("x")
    g, h = model.g_sym, model.h_sym
    rows = [[sp.Integer(1)]]
    for _ in range(order - 1):
        prev = rows[-1]
        nxt = []
        for r in range(len(prev) + 1):
            term = sp.Integer(0)
            if r < len(prev):
                term += g * sp.diff(prev[r], x) + h * prev[r]
            if r >= 1:
                term += g * prev[r - 1]
            nxt.append(sp.expand(term))
        rows.append(nxt)
    matrix = np.zeros((order, order), dtype=complex)
    x0s = sp.Float(x0)
    for l, row in enumerate(rows):
        for r, expr in enumerate(row):
            matrix[l, r] = complex(expr.subs(x, x0s).evalf())
    return OperatorWeights(matrix=matrix)


def recover_from_derivatives(derivs, model: GhModel, M: int, x0: float) -> SolverReport:
    """Recover M terms from the derivative samples f^(l)(x0), l = 0..2M-1.

    The weights map the derivatives to operator iterates F_l = (A^l f)(x0),
    whose annihilating polynomial has the exponents alpha_j themselves as
    zeros; no logarithm is involved, so there is no aliasing strip.
    """
    derivs = np.asarray(derivs, dtype=complex).ravel()
    if M < 1:
        raise ValueError("M must be positive")
    if derivs.size != 2 * M:
        raise ValueError(f"need exactly {2 * M} derivative values, got {derivs.size}")
    weights = operator_weights(model, x0, 2 * M)
    fvals = weights.matrix @ derivs
    diagnostics: dict = {"solver": "derivatives", "x0": x0}
    hankel = numerics.build_hankel(numerics.HankelSpec(tuple(fvals[: 2 * M - 1]), M, M))
    sigma = np.linalg.svd(hankel, compute_uv=False)
    cond = math.inf if sigma[-1] == 0 else float(sigma[0] / sigma[-1])
    _check_condition(cond, "derivative-sample Hankel block", diagnostics)
    p = np.linalg.solve(hankel, -fvals[M : 2 * M])
    poly = numerics.PronyPolynomial(tuple(p) + (1.0,))
    alphas = numerics.polynomial_roots(poly)
    gx0 = float(np.asarray(model.G(x0)))
    hx0 = complex(np.asarray(model.H(x0), dtype=complex))
    prefactors = hx0 * np.exp(alphas * gx0)
    coeffs, residual = numerics.vandermonde_lsq(alphas, fvals, prefactors)
    return SolverReport(
        detected_M=M,
        exponents=alphas,
        roots=alphas,
        coefficients=coeffs,
        singular_values=sigma,
        linear_residual=residual,
        diagnostics=diagnostics,
    )


def deflate(samples: NormalizedSampleSeq, known_root: complex) -> NormalizedSampleSeq:
    """Remove a known root: f_l -> f_{l+1} - z1 f_l (one sample shorter).

    When z1 is a true root of the sequence, the result is an (M-1)-term sum
    whose coefficients pick up the factor (z_j - z1).
    """
    f = samples.values
    if f.size < 2:
        raise ValueError("need at least two samples to deflate")
    z1 = complex(known_root)
    return NormalizedSampleSeq(values=f[1:] - z1 * f[:-1], h=samples.h,
                               offset=samples.offset)


def recover_with_known_roots(samples: NormalizedSampleSeq, known_roots,
                             N: Optional[int] = None, L: Optional[int] = None,
                             epsilon: float = 1e-8, *,
                             rank_relative: bool = False) -> SolverReport:
    """Recovery when some roots z_j are known in advance.

    Each known root is deflated from the sequence, the remaining terms are
    recovered on the shortened sequence, and all coefficients (including
    those of the known roots) are refit jointly on the original samples.
    """
    known = np.asarray(list(known_roots), dtype=complex)
    if known.size:
        diffs = np.abs(known[:, None] - known[None, :])
        np.fill_diagonal(diffs, np.inf)
        if diffs.min() < numerics.NODE_SEPARATION:
            raise ValueError("known roots must be pairwise distinct")
    work = samples
    for z in known:
        work = deflate(work, z)
    scale = float(np.max(np.abs(samples.values))) or 1.0
    residual_scale = float(np.max(np.abs(work.values))) if len(work) else 0.0
    diagnostics: dict = {
        "solver": "known-roots",
        "known": known.size,
        "deflated_length": len(work),
    }
    if residual_scale <= 1e-13 * scale or len(work) < 2:
        # nothing left to detect; only the coefficients remain
        unknown = np.zeros(0, dtype=complex)
        sigma = np.zeros(0, dtype=float)
    else:
        n_sub = len(work) // 2
        l_sub = min(L if L is not None else n_sub, n_sub)
        sub = esprit(work, N=n_sub, L=l_sub, epsilon=epsilon,
                     rank_relative=rank_relative)
        unknown = sub.roots
        sigma = sub.singular_values
        diagnostics["subproblem"] = sub.diagnostics
    roots = np.concatenate([known, unknown])
    alphas = numerics.log_branch(roots, samples.h)
    coeffs, residual = _fit_coefficients(samples.values, roots, alphas,
                                         samples.offset)
    return SolverReport(
        detected_M=roots.size,
        exponents=alphas,
        roots=roots,
        coefficients=coeffs,
        singular_values=sigma,
        linear_residual=residual,
        diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class NodeWarp:
    """Strictly increasing map with warp(nodes[l]) = l*h, plus its inverse.

    The default is the piecewise-linear interpolant, whose inverse is again
    piecewise linear; the monotone-cubic option interpolates with a PCHIP
    spline and inverts it by solving the cubic on the bracketing segment.
    """

    nodes: np.ndarray
    h: float
    kind: str = "linear"
    _forward: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.size < 2:
            raise ValueError("need at least two nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if self.h <= 0:
            raise ValueError("step h must be positive")
        if self.kind not in ("linear", "pchip"):
            raise ValueError("kind must be 'linear' or 'pchip'")
        if self.kind == "pchip":
            targets = self.h * np.arange(nodes.size)
            object.__setattr__(self, "_forward", PchipInterpolator(nodes, targets))

    @property
    def targets(self) -> np.ndarray:
        return self.h * np.arange(self.nodes.size)

    def __call__(self, y):
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        if self.kind == "linear":
            out = np.interp(y_arr, self.nodes, self.targets)
            # extend the end segments linearly instead of clamping
            lo_slope = self.h / (self.nodes[1] - self.nodes[0])
            hi_slope = self.h / (self.nodes[-1] - self.nodes[-2])
            below = y_arr < self.nodes[0]
            above = y_arr > self.nodes[-1]
            out[below] = (y_arr[below] - self.nodes[0]) * lo_slope
            out[above] = self.targets[-1] + (y_arr[above] - self.nodes[-1]) * hi_slope
        else:
            out = self._forward(y_arr)
        return out if np.ndim(y) else float(out[0])

    def inverse(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind == "linear":
            out = np.interp(t_arr, self.targets, self.nodes)
            lo_slope = (self.nodes[1] - self.nodes[0]) / self.h
            hi_slope = (self.nodes[-1] - self.nodes[-2]) / self.h
            below = t_arr < 0.0
            above = t_arr > self.targets[-1]
            out[below] = self.nodes[0] + t_arr[below] * lo_slope
            out[above] = self.nodes[-1] + (t_arr[above] - self.targets[-1]) * hi_slope
        else:
            out = np.empty_like(t_arr)
            for i, ti in enumerate(t_arr):
                roots = self._forward.solve(ti, extrapolate=False)
                if roots.size == 0:
                    roots = self._forward.solve(ti, extrapolate=True)
                out[i] = roots[0]
        return out if np.ndim(t) else float(out[0])


def build_node_warp(nodes, h: float, *, kind: str = "linear") -> NodeWarp:
    """Interpolate the increasing map carrying node l to l*h."""
    return NodeWarp(nodes=np.asarray(nodes, dtype=float), h=h, kind=kind)


def esprit_nonequispaced(nodes, values, N: Optional[int] = None,
                         L: Optional[int] = None, epsilon: float = 1e-8,
                         h: float = 1.0, T: Optional[float] = None, *,
                         rank_relative: bool = False,
                         warp_kind: str = "linear"):
    """Recover an exponential sum from samples on strictly increasing nodes.

    The nodes are carried onto a uniform grid by a monotone warp; the values
    are then an ordinary exponential sum in the warped variable (exactly so
    when the data was generated that way, approximately for mildly perturbed
    uniform nodes - the at-node residual in the report measures the gap).

    Returns
    -------
    (report, reconstruct)
        ``reconstruct(y)`` evaluates sum_j c_j exp(alpha_j * warp(y)).
    """
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=complex)
    if nodes.size != values.size:
        raise ValueError("nodes and values must have equal length")
    if nodes.size % 2:
        raise ValueError("need an even number of node/value pairs")
    if T is not None and not 0 < h <= math.pi / T:
        raise ValueError("need 0 < h <= pi/T")
    warp = build_node_warp(nodes, h, kind=warp_kind)
    samples = NormalizedSampleSeq(values=values, h=h, offset=0.0)
    report = esprit(samples, N=N, L=L, epsilon=epsilon, rank_relative=rank_relative)

    coefficients = report.coefficients
    exponents = report.exponents

    def reconstruct(y):
        t = np.atleast_1d(warp(y))
        out = np.exp(np.outer(t, exponents)) @ coefficients
        return out if np.ndim(y) else complex(out[0])

    at_node = reconstruct(nodes) - values
    residual = float(np.linalg.norm(at_node))
    denom = float(np.linalg.norm(values))
    diagnostics = dict(report.diagnostics)
    diagnostics["solver"] = "noneq"
    diagnostics["at_node_residual"] = residual
    diagnostics["at_node_residual_relative"] = residual / denom if denom else math.inf
    report = SolverReport(
        detected_M=report.detected_M,
        exponents=report.exponents,
        roots=report.roots,
        coefficients=report.coefficients,
        singular_values=report.singular_values,
        linear_residual=report.linear_residual,
        diagnostics=diagnostics,
    )
    return report, reconstruct
