import numpy as np
import pytest


def well_separated_roots(rng, M, min_sep=0.15, radius=(0.75, 1.3), sector=0.8 * np.pi):
    """Roots in an annulus with pairwise separation at least ``min_sep``.

    Angles are confined to |angle| <= sector so the exponents stay inside
    the principal strip for step h = 1.
    """
    for _ in range(500):
        angles = np.sort(rng.uniform(-sector, sector, M))
        radii = rng.uniform(radius[0], radius[1], M)
        z = radii * np.exp(1j * angles)
        if M == 1:
            return z
        diffs = np.abs(z[:, None] - z[None, :])
        np.fill_diagonal(diffs, np.inf)
        if diffs.min() >= min_sep:
            return z
    raise RuntimeError("could not place separated roots")


def random_coefficients(rng, M, magnitude=(0.5, 3.0)):
    return rng.uniform(*magnitude, M) * np.exp(2j * np.pi * rng.random(M))


def exponential_samples(z, c, count, offset=0.0):
    """f_l = sum_j b_j z_j^l with b_j = c_j exp(alpha_j * offset), h = 1."""
    alpha = np.log(np.asarray(z, dtype=complex))
    b = np.asarray(c, dtype=complex) * np.exp(alpha * offset)
    powers = np.asarray(z, dtype=complex)[None, :] ** np.arange(count)[:, None]
    return powers @ b


def sort_by_angle(values):
    values = np.asarray(values)
    return values[np.lexsort((np.abs(values), np.round(np.angle(values), 9)))]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
