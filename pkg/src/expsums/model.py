"""Generalized exponential-sum models and their sampling machinery.

A model couples a strictly monotone warp G and a nonvanishing envelope H on
an interval [a, b]; signals are f(x) = sum_j c_j H(x) exp(alpha_j G(x)).
This module defines the built-in (G, H) pairs, synthesizes signals, builds
the sampling grids x_l = G^{-1}(h*l + G(x0)), normalizes raw samples into
the sequence the solvers consume, and evaluates the generalized shift
operator whose eigenfunctions the model terms are.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import sympy as sp

from .errors import DivisionHazardError, DomainError

__all__ = [
    "ExpSumParams",
    "GhModel",
    "SampleGrid",
    "NormalizedSampleSeq",
    "GridValidation",
    "make_builtin_model",
    "modulated_gaussian_exponent",
    "modulated_gaussian_params",
    "synthesize",
    "grid_points",
    "normalize_samples",
    "generalized_shift_eval",
    "validate_grid",
    "gaussian_internal_terms",
    "gaussian_physical_terms",
    "derivative_samples",
]

EXPONENT_SEPARATION = 1e-12
H_VANISH_TOLERANCE = 1e-14
PROBE_POINTS = 1024
PROBE_WINDOW = 3.0  # probe half-width standing in for unbounded domains


def _sympy_complex(z: complex):
    z = complex(z)
    if z.imag == 0.0:
        return sp.Float(z.real)
    return sp.Float(z.real) + sp.I * sp.Float(z.imag)


@dataclass(frozen=True)
class ExpSumParams:
    """The sparse model: terms (c_j, alpha_j) with c_j != 0 and distinct alpha_j."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((complex(c), complex(a)) for c, a in self.terms)
        object.__setattr__(self, "terms", terms)
        if len(terms) < 1:
            raise ValueError("need at least one term")
        if any(c == 0 for c, _ in terms):
            raise ValueError("coefficients must be nonzero")
        alphas = np.array([a for _, a in terms])
        diffs = np.abs(alphas[:, None] - alphas[None, :])
        np.fill_diagonal(diffs, np.inf)
        if diffs.min() <= EXPONENT_SEPARATION:
            raise ValueError("exponents must be pairwise distinct")

    @property
    def M(self) -> int:
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def exponents(self) -> np.ndarray:
        return np.array([a for _, a in self.terms])


@dataclass(frozen=True)
class GhModel:
    """Structural pair (G, H) with inverse and optional derivative data.

    G must be strictly monotone and H nonvanishing on ``domain``; both are
    verified on a probe grid at construction because the handles are opaque.
    ``g_sym``/``h_sym`` are sympy expressions (in ``sympy.Symbol("x")``) for
    1/G'(x) and -H'(x)/(G'(x) H(x)); they power the derivative-sample path
    and are provided by every built-in.
    """

    kind: str
    params: dict
    G: Callable
    G_inverse: Callable
    H: Callable
    domain: tuple
    dG: Optional[Callable] = None
    dH: Optional[Callable] = None
    g_sym: Optional[sp.Expr] = None
    h_sym: Optional[sp.Expr] = None

    def __post_init__(self):
        a, b = self.domain
        if not a < b:
            raise ValueError("domain must be a nonempty interval")
        lo = a if math.isfinite(a) else -PROBE_WINDOW
        hi = b if math.isfinite(b) else PROBE_WINDOW
        span = hi - lo
        # stay a little inside the endpoints: inverse handles like arcsin
        # have unbounded derivatives there and would fail the check on
        # rounding alone
        probe = np.linspace(lo + 1e-4 * span, hi - 1e-4 * span, PROBE_POINTS)
        gvals = np.asarray(self.G(probe), dtype=float)
        steps = np.diff(gvals)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("G is not strictly monotone on the domain")
        hvals = np.asarray(self.H(probe), dtype=complex)
        if np.min(np.abs(hvals)) < H_VANISH_TOLERANCE:
            raise ValueError("H vanishes on the domain")
        back = np.asarray(self.G_inverse(gvals), dtype=float)
        scale = max(1.0, float(np.max(np.abs(probe))))
        if np.max(np.abs(back - probe)) > 1e-10 * scale:
            raise ValueError("G_inverse does not invert G on the probe grid")

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.domain[0]) and math.isfinite(self.domain[1])

    def contains(self, x, tol: float = 1e-12) -> bool:
        a, b = self.domain
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= a - tol) and np.all(x <= b + tol))

    def g_fn(self, x):
        """1 / G'(x); requires the derivative handle."""
        if self.dG is None:
            raise ValueError("model carries no derivative of G")
        return 1.0 / np.asarray(self.dG(x))

    def h_aux_fn(self, x):
        """-H'(x) / (G'(x) H(x)); requires both derivative handles."""
        if self.dG is None or self.dH is None:
            raise ValueError("model carries no derivative handles")
        x = np.asarray(x)
        return -np.asarray(self.dH(x)) / (np.asarray(self.dG(x)) * np.asarray(self.H(x)))

    def descriptor(self) -> dict:
        """Serializable record (kind tag plus numeric parameters)."""
        return {"kind": self.kind, **self.params}


@dataclass(frozen=True)
class SampleGrid:
    """Uniform grid in the warped variable: t_l = G(x0) + h*l, l < count.

    ``T`` bounds |Im alpha| a priori; it feeds the aliasing clause of
    ``validate_grid``.
    """

    x0: float
    h: float
    count: int
    T: float

    def __post_init__(self):
        if self.h == 0:
            raise ValueError("step h must be nonzero")
        if self.count < 2:
            raise ValueError("need at least two samples")
        if self.T <= 0:
            raise ValueError("frequency bound T must be positive")


@dataclass(frozen=True)
class NormalizedSampleSeq:
    """Solver-ready values f_l = f(x_l)/H(x_l) with their step and offset G(x0).

    Deflation shortens a sequence by one, so odd lengths are legal here;
    the solvers consume the longest even prefix.
    """

    values: np.ndarray
    h: float
    offset: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("values must be a nonempty vector")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        if self.h == 0:
            raise ValueError("step h must be nonzero")

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class GridValidation:
    ok: bool
    violations: tuple

    def __bool__(self):
        return self.ok


def _as_array_fn(f):
    def wrapped(x):
        return f(np.asarray(x))

    return wrapped


def make_builtin_model(kind: str, *, beta: complex | None = None,
                       substituted: bool | None = None) -> GhModel:
    """Construct one of the built-in (G, H) pairs.

    Parameters
    ----------
    kind:
        ``"classical"``  G(x) = x, H = 1 on all of R.
        ``"gaussian"``   shifted Gaussians exp(-beta (x - s)^2).  With
        ``substituted=False`` (requires real beta) this uses H = exp(-beta x^2),
        G = 2 beta x; the shift-dependent factor exp(-beta s^2) is absorbed
        into the coefficients, see ``gaussian_internal_terms``.  With
        ``substituted=True`` (default for complex beta) G(x) = x instead and
        the exponents carry the factor 2 beta.
        ``"sine"``       H = 1, G = sin on (-pi/2, pi/2).
    beta:
        Required for ``"gaussian"``; must be nonzero.
    """
    x = sp.Symbol("x")
    if kind == "classical":
        return GhModel(
            kind="classical",
            params={},
            G=_as_array_fn(lambda t: t + 0.0),
            G_inverse=_as_array_fn(lambda t: t + 0.0),
            H=_as_array_fn(lambda t: np.ones_like(np.asarray(t, dtype=float))),
            domain=(-math.inf, math.inf),
            dG=_as_array_fn(lambda t: np.ones_like(np.asarray(t, dtype=float))),
            dH=_as_array_fn(lambda t: np.zeros_like(np.asarray(t, dtype=float))),
            g_sym=sp.Integer(1),
            h_sym=sp.Integer(0),
        )
    if kind == "gaussian":
        if beta is None or beta == 0:
            raise ValueError("gaussian model requires a nonzero beta")
        beta = complex(beta)
        if substituted is None:
            substituted = beta.imag != 0.0
        if substituted:
            # G(x) = x keeps the warp real for complex beta; exponents pick
            # up the factor 2*beta (handled by gaussian_*_terms).
            return GhModel(
                kind="gaussian",
                params={"beta": beta, "substituted": True},
                G=_as_array_fn(lambda t: t + 0.0),
                G_inverse=_as_array_fn(lambda t: t + 0.0),
                H=_as_array_fn(lambda t: np.exp(-beta * np.asarray(t) ** 2)),
                domain=(-math.inf, math.inf),
                dG=_as_array_fn(lambda t: np.ones_like(np.asarray(t, dtype=float))),
                dH=_as_array_fn(lambda t: -2.0 * beta * np.asarray(t)
                                * np.exp(-beta * np.asarray(t) ** 2)),
                g_sym=sp.Integer(1),
                h_sym=2 * _sympy_complex(beta) * x,
            )
        if beta.imag != 0.0:
            raise ValueError("non-substituted gaussian mode needs real beta")
        b = beta.real
        return GhModel(
            kind="gaussian",
            params={"beta": beta, "substituted": False},
            G=_as_array_fn(lambda t: 2.0 * b * np.asarray(t, dtype=float)),
            G_inverse=_as_array_fn(lambda t: np.asarray(t, dtype=float) / (2.0 * b)),
            H=_as_array_fn(lambda t: np.exp(-b * np.asarray(t) ** 2)),
            domain=(-math.inf, math.inf),
            dG=_as_array_fn(lambda t: 2.0 * b * np.ones_like(np.asarray(t, dtype=float))),
            dH=_as_array_fn(lambda t: -2.0 * b * np.asarray(t)
                            * np.exp(-b * np.asarray(t) ** 2)),
            g_sym=1 / (2 * sp.Float(b)),
            h_sym=x,
        )
    if kind == "sine":
        return GhModel(
            kind="sine",
            params={},
            G=_as_array_fn(np.sin),
            G_inverse=_as_array_fn(np.arcsin),
            H=_as_array_fn(lambda t: np.ones_like(np.asarray(t, dtype=float))),
            domain=(-math.pi / 2, math.pi / 2),
            dG=_as_array_fn(np.cos),
            dH=_as_array_fn(lambda t: np.zeros_like(np.asarray(t, dtype=float))),
            g_sym=1 / sp.cos(x),
            h_sym=sp.Integer(0),
        )
    raise ValueError(f"unknown model kind {kind!r}")


def modulated_gaussian_exponent(kappa: float, s: float, beta: complex) -> complex:
    """Exponent 2*beta*s + 2*pi*i*kappa of a modulated shifted Gaussian."""
    return 2.0 * complex(beta) * s + 2j * math.pi * kappa


def modulated_gaussian_params(alpha: complex, beta: float) -> tuple:
    """Invert ``modulated_gaussian_exponent`` for real beta: returns (s, kappa)."""
    beta = float(beta)
    s = alpha.real / (2.0 * beta)
    kappa = alpha.imag / (2.0 * math.pi)
    return s, kappa


def synthesize(params: ExpSumParams, model: GhModel, points) -> np.ndarray:
    """Evaluate f(x) = sum_j c_j H(x) exp(alpha_j G(x)) at the given points."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if not model.contains(pts):
        raise DomainError("evaluation point outside the model domain")
    g = np.asarray(model.G(pts), dtype=float)
    h = np.asarray(model.H(pts), dtype=complex)
    c = params.coefficients
    alpha = params.exponents
    return h * (np.exp(np.outer(g, alpha)) @ c)


def grid_points(model: GhModel, grid: SampleGrid) -> np.ndarray:
    """Physical sampling locations x_l = G^{-1}(G(x0) + h*l)."""
    t0 = float(np.asarray(model.G(grid.x0)))
    t = t0 + grid.h * np.arange(grid.count)
    if model.bounded:
        lo, hi = sorted((float(np.asarray(model.G(model.domain[0]))),
                         float(np.asarray(model.G(model.domain[1])))))
        tol = 1e-12 * max(1.0, abs(hi), abs(lo))
        bad = np.nonzero((t < lo - tol) | (t > hi + tol))[0]
        if bad.size:
            raise DomainError(
                f"grid escapes the domain at l={int(bad[0])}: "
                f"warped value {t[bad[0]]:.6g} outside [{lo:.6g}, {hi:.6g}]"
            )
        t = np.clip(t, lo, hi)
    return np.asarray(model.G_inverse(t), dtype=float)


def normalize_samples(model: GhModel, grid: SampleGrid, raw) -> NormalizedSampleSeq:
    """Divide raw samples by H at the grid points, keeping step and offset."""
    raw = np.asarray(raw, dtype=complex)
    if raw.size != grid.count:
        raise ValueError("raw sample count does not match the grid")
    pts = grid_points(model, grid)
    hvals = np.asarray(model.H(pts), dtype=complex)
    if np.min(np.abs(hvals)) < H_VANISH_TOLERANCE:
        idx = int(np.argmin(np.abs(hvals)))
        raise DivisionHazardError(f"|H| < {H_VANISH_TOLERANCE} at x={pts[idx]!r}")
    offset = float(np.asarray(model.G(grid.x0)))
    return NormalizedSampleSeq(values=raw / hvals, h=grid.h, offset=offset)


def generalized_shift_eval(model: GhModel, h: float, f: Callable, x: float):
    """Apply the generalized shift: H(x)/H(x_h) * f(x_h), x_h = G^{-1}(h + G(x)).

    The model terms H(x) exp(alpha G(x)) are eigenfunctions of this operator
    with eigenvalues exp(alpha h).
    """
    gx = float(np.asarray(model.G(x)))
    target = gx + h
    if model.bounded:
        lo, hi = sorted((float(np.asarray(model.G(model.domain[0]))),
                         float(np.asarray(model.G(model.domain[1])))))
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        if not lo - tol <= target <= hi + tol:
            raise DomainError(
                f"shift lands outside the model domain: warped value "
                f"{target:.6g} not in [{lo:.6g}, {hi:.6g}]"
            )
        target = min(max(target, lo), hi)
    shifted = float(np.asarray(model.G_inverse(target)))
    hx = complex(np.asarray(model.H(x), dtype=complex))
    hs = complex(np.asarray(model.H(shifted), dtype=complex))
    return hx / hs * f(shifted)


def validate_grid(model: GhModel, grid: SampleGrid, M: int) -> GridValidation:
    """Check the step-size rules that guarantee unique recovery of M terms.

    Clauses: 0 < |h| < pi/T (aliasing); for bounded domains additionally
    |h| < |G(b) - G(a)| / (2M) with sign(h) matching the orientation of G;
    and the first 2M warped grid values must stay inside [G(a), G(b)].
    Violations are reported as data, not raised.
    """
    violations = []
    h = grid.h
    if not abs(h) < math.pi / grid.T:
        violations.append(
            f"step too large for the frequency bound: |h|={abs(h):.6g} "
            f">= pi/T={math.pi / grid.T:.6g}"
        )
    if model.bounded:
        ga = float(np.asarray(model.G(model.domain[0])))
        gb = float(np.asarray(model.G(model.domain[1])))
        span = abs(gb - ga)
        if not abs(h) < span / (2 * M):
            violations.append(
                f"step too large for the domain: |h|={abs(h):.6g} "
                f">= |G(b)-G(a)|/(2M)={span / (2 * M):.6g}"
            )
        if math.copysign(1.0, h) != math.copysign(1.0, gb - ga):
            violations.append("sign of h does not match the orientation of G")
        t0 = float(np.asarray(model.G(grid.x0)))
        t = t0 + h * np.arange(2 * M)
        lo, hi = sorted((ga, gb))
        tol = 1e-12 * max(1.0, abs(hi), abs(lo))
        bad = np.nonzero((t < lo - tol) | (t > hi + tol))[0]
        if bad.size:
            violations.append(
                f"sample l={int(bad[0])} leaves the domain: warped value "
                f"{t[bad[0]]:.6g} outside [{lo:.6g}, {hi:.6g}]"
            )
    return GridValidation(ok=not violations, violations=tuple(violations))


def gaussian_internal_terms(params: ExpSumParams, beta: complex,
                            substituted: bool) -> ExpSumParams:
    """Map shifted-Gaussian parameters (c_j, s_j) to model-internal terms.

    The identity exp(-beta (x-s)^2) = exp(-beta s^2) exp(-beta x^2)
    exp(2 beta s x) makes the envelope term-independent: the internal
    coefficient is c * exp(-beta s^2) and the internal exponent is s
    (G = 2 beta x) or 2 beta s (substituted, G = x).
    """
    beta = complex(beta)
    terms = []
    for c, s in params.terms:
        c_int = c * cmath.exp(-beta * s * s)
        a_int = 2.0 * beta * s if substituted else s
        terms.append((c_int, a_int))
    return ExpSumParams(tuple(terms))


def gaussian_physical_terms(coefficients, exponents, beta: complex,
                            substituted: bool) -> ExpSumParams:
    """Invert ``gaussian_internal_terms`` once the exponents are known."""
    beta = complex(beta)
    terms = []
    for c_int, a_int in zip(np.asarray(coefficients), np.asarray(exponents)):
        s = a_int / (2.0 * beta) if substituted else a_int
        terms.append((c_int * cmath.exp(beta * s * s), s))
    return ExpSumParams(tuple(terms))


def derivative_samples(params: ExpSumParams, model: GhModel, x0: float,
                       count: int) -> np.ndarray:
    """Derivative values f^(l)(x0), l = 0..count-1, of the synthesized signal.

    Classical models use the closed form sum c alpha^l exp(alpha x0); other
    built-ins fall back to symbolic differentiation of H(x) exp(alpha G(x)).
    """
    if model.kind == "classical":
        c = params.coefficients
        alpha = params.exponents
        powers = alpha[None, :] ** np.arange(count)[:, None]
        return powers @ (c * np.exp(alpha * x0))
    x = sp.Symbol("x")
    if model.kind == "gaussian":
        bsym = _sympy_complex(model.params["beta"])
        hexpr = sp.exp(-bsym * x ** 2)
        gexpr = x if model.params["substituted"] else 2 * bsym * x
    elif model.kind == "sine":
        hexpr = sp.Integer(1)
        gexpr = sp.sin(x)
    else:
        raise ValueError("derivative synthesis needs a built-in model")
    out = np.zeros(count, dtype=complex)
    for c, a in params.terms:
        expr = hexpr * sp.exp(_sympy_complex(a) * gexpr)
        for order in range(count):
            out[order] += c * complex(expr.subs(x, sp.Float(x0)).evalf())
            expr = sp.diff(expr, x)
    return out
