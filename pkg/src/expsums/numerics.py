"""Dense complex linear-algebra primitives shared by the solvers.

Everything here is a thin, contract-checked layer over LAPACK via numpy:
Hankel assembly, SVD with rank detection, companion-matrix polynomial
roots, Vandermonde least squares, and branch-aware logarithms.  All
functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import IllPosedError

__all__ = [
    "HankelSpec",
    "PronyPolynomial",
    "SvdResult",
    "RankEstimate",
    "build_hankel",
    "svd",
    "numerical_rank",
    "polynomial_roots",
    "vandermonde_lsq",
    "log_branch",
]

#: nodes closer than this are treated as coincident
NODE_SEPARATION = 1e-12


@dataclass(frozen=True)
class HankelSpec:
    """Recipe for a rectangular Hankel matrix: entry (m, k) = values[m + k]."""

    values: tuple
    rows: int
    cols: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(complex(v) for v in self.values))
        if self.rows < 1 or self.cols < 1:
            raise ValueError("Hankel dimensions must be positive")
        if self.rows + self.cols - 1 > len(self.values):
            raise ValueError(
                f"need at least rows + cols - 1 = {self.rows + self.cols - 1} "
                f"values, got {len(self.values)}"
            )


@dataclass(frozen=True)
class PronyPolynomial:
    """Monic polynomial p(z) = z^M + sum_k p_k z^k in ascending coefficients."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if len(coeffs) < 2:
            raise ValueError("degree must be at least 1")
        if coeffs[-1] != 1:
            raise ValueError("polynomial must be monic (leading coefficient 1)")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, z):
        return np.polyval(np.asarray(self.coefficients)[::-1], z)


@dataclass(frozen=True)
class SvdResult:
    """Factorization A = left @ diag(singular_values) @ right.

    ``left`` and ``right`` are square unitary factors; singular values are
    sorted in non-increasing order.
    """

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray


class RankEstimate(NamedTuple):
    rank: int
    gap_ratio: float


def build_hankel(spec: HankelSpec) -> np.ndarray:
    """Assemble the Hankel matrix described by ``spec``, entries copied verbatim."""
    vals = np.asarray(spec.values, dtype=complex)
    m = np.arange(spec.rows)[:, None]
    k = np.arange(spec.cols)[None, :]
    return vals[m + k]


def svd(matrix) -> SvdResult:
    """Full singular value decomposition with square unitary factors."""
    a = np.asarray(matrix, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    u, s, wh = np.linalg.svd(a, full_matrices=True)
    return SvdResult(left=u, singular_values=s, right=wh)


def numerical_rank(singular_values, epsilon: float, *, relative: bool = False) -> RankEstimate:
    """Count singular values above a threshold.

    With ``relative=True`` the threshold is ``epsilon * sigma_1``, which is
    scale free and the right choice for data whose magnitude is not O(1).
    The returned ``gap_ratio`` is sigma_rank / sigma_{rank+1} (``inf`` when
    there is nothing below the cut), a cheap diagnostic for how clear the
    detected order is.
    """
    s = np.asarray(singular_values, dtype=float)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if s.size == 0:
        return RankEstimate(0, math.inf)
    threshold = epsilon * s[0] if relative else epsilon
    rank = int(np.count_nonzero(s > threshold))
    if rank == 0:
        gap = 0.0
    elif rank == s.size or s[rank] == 0.0:
        gap = math.inf
    else:
        gap = float(s[rank - 1] / s[rank])
    return RankEstimate(rank, gap)


def companion_matrix(poly: PronyPolynomial) -> np.ndarray:
    """Companion matrix whose eigenvalues are the polynomial's zeros."""
    m = poly.degree
    c = np.zeros((m, m), dtype=complex)
    if m > 1:
        c[1:, :-1] = np.eye(m - 1)
    c[:, -1] = -np.asarray(poly.coefficients[:-1])
    return c


def polynomial_roots(poly: PronyPolynomial) -> np.ndarray:
    """Zeros of a monic polynomial via companion-matrix eigenvalues."""
    return np.linalg.eigvals(companion_matrix(poly))


def vandermonde_lsq(nodes, rhs, prefactors=None):
    """Least-squares fit of ``rhs`` by sum_j c_j * prefactor_j * nodes_j**l.

    Columns are equilibrated to unit norm before the solve so that widely
    graded node magnitudes do not poison the conditioning.

    Returns
    -------
    (coefficients, residual_norm)

    Raises
    ------
    IllPosedError
        If two nodes coincide to within 1e-12.
    """
    z = np.asarray(nodes, dtype=complex).ravel()
    y = np.asarray(rhs, dtype=complex).ravel()
    m = z.size
    if m == 0:
        raise ValueError("need at least one node")
    if y.size < m:
        raise ValueError("need at least as many samples as nodes")
    diffs = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(diffs, np.inf)
    if diffs.min() < NODE_SEPARATION:
        raise IllPosedError("repeated nodes in Vandermonde system")
    powers = np.arange(y.size)[:, None]
    a = z[None, :] ** powers
    if prefactors is not None:
        a = a * np.asarray(prefactors, dtype=complex)[None, :]
    scale = np.linalg.norm(a, axis=0)
    scale[scale == 0.0] = 1.0
    c_scaled, *_ = np.linalg.lstsq(a / scale, y, rcond=None)
    coefficients = c_scaled / scale
    residual = float(np.linalg.norm(a @ coefficients - y))
    return coefficients, residual


def log_branch(z, h: float):
    """Exponent alpha with exp(alpha * h) = z and Im(alpha) in (-pi/|h|, pi/|h|].

    Accepts scalars or arrays.  ``numpy.log`` already lands in the strip for
    positive h; for negative h the boundary value gets folded back in.
    """
    if h == 0:
        raise ValueError("step h must be nonzero")
    zc = np.asarray(z, dtype=complex)
    if np.any(zc == 0):
        raise ValueError("cannot take the logarithm of zero")
    alpha = np.log(zc) / h
    strip = math.pi / abs(h)
    im = np.imag(alpha)
    shift = np.zeros_like(im)
    shift[im > strip] = -2.0 * strip
    shift[im <= -strip] = 2.0 * strip
    alpha = alpha + 1j * shift
    if np.isscalar(z) or np.ndim(z) == 0:
        return complex(alpha)
    return alpha
