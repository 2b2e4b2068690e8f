"""Frequency grids and the trapezoidal cosine transform of a spectral density.

A density sampled on ``I`` evenly spaced frequencies maps to a stationary
kernel via

    k(tau) = sum_i w_i * cos(2 pi tau omega_i) * S(omega_i)

with trapezoid weights ``w = dw * [1/2, 1, ..., 1, 1/2]``. The map is linear
in ``S``, so for fixed inputs we precompute the cosine basis once
(:class:`CosineBasis`) and every Gram matrix afterwards is a mat-vec.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputs, NonFiniteLatent

log = logging.getLogger(__name__)

LATENT_CLAMP = 30.0
PERIOD_FACTOR = 8.0
DEFAULT_COUNT = 100


@dataclass(frozen=True)
class FrequencyGrid:
    omegas: np.ndarray
    delta_omega: float
    period: float

    @property
    def count(self):
        return len(self.omegas)

    @property
    def weights(self):
        w = np.full(self.count, self.delta_omega)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def to_dict(self):
        return {
            "count": self.count,
            "delta_omega": self.delta_omega,
            "period": self.period,
        }

    @classmethod
    def from_dict(cls, d):
        n = int(d["count"])
        dw = float(d["delta_omega"])
        return cls(np.arange(n) * dw, dw, float(d["period"]))


def build_grid(tau_max, count=DEFAULT_COUNT, freq_scale=1.0):
    """Grid with period ``P = 8 * tau_max`` and spacing ``freq_scale / P``."""
    if not tau_max > 0:
        raise DegenerateInputs(f"tau_max must be positive, got {tau_max}")
    if count < 2:
        raise ValueError("a frequency grid needs at least 2 points")
    if not freq_scale > 0:
        raise ValueError("freq_scale must be positive")
    period = PERIOD_FACTOR * float(tau_max)
    dw = freq_scale / period
    return FrequencyGrid(np.arange(count) * dw, dw, period)


def input_span(x):
    """Largest pairwise distance for 1-d inputs."""
    x = np.asarray(x, dtype=float).ravel()
    return float(x.max() - x.min()) if len(x) else 0.0


def trapezoid_cosine(tau, omegas, weighted_density):
    tau = np.asarray(tau, dtype=float)
    flat = np.abs(tau.ravel())
    vals = np.cos(2.0 * np.pi * np.outer(flat, omegas)) @ weighted_density
    return vals.reshape(tau.shape)


@dataclass(frozen=True, eq=False)
class SpectralKernel:
    """Stationary kernel induced by a positive density on a frequency grid."""

    grid: FrequencyGrid
    density: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.density, dtype=float)
        if d.shape != (self.grid.count,):
            raise ValueError("density length must match the grid")
        object.__setattr__(self, "density", d)

    def __call__(self, tau):
        return trapezoid_cosine(tau, self.grid.omegas, self.grid.weights * self.density)

    @property
    def variance(self):
        return float(self.grid.weights @ self.density)


def kernel_value(sk, tau):
    return sk(tau)


def clamp_latent(g):
    """Clip ``g`` to +/-30 and report how many entries were clipped."""
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteLatent("latent sample contains non-finite values")
    n_clamped = int(np.count_nonzero(np.abs(g) > LATENT_CLAMP))
    if n_clamped:
        log.debug("clamped %d latent entries to +/-%g", n_clamped, LATENT_CLAMP)
        g = np.clip(g, -LATENT_CLAMP, LATENT_CLAMP)
    return g, n_clamped


def density_from_latent(g):
    g, _ = clamp_latent(g)
    return np.exp(g)


def kernel_from_latent(g, grid):
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.count,):
        raise ValueError(f"latent sample has shape {g.shape}, grid has {grid.count} points")
    return SpectralKernel(grid, density_from_latent(g))


class CosineBasis:
    """Cached ``w_i cos(2 pi tau omega_i)`` for a fixed pair of input sets.

    ``gram(density)`` then costs one matrix-vector product. Only unique
    distances are stored.
    """

    def __init__(self, grid, x, x2=None):
        self.grid = grid
        x = np.asarray(x, dtype=float).ravel()
        self.symmetric = x2 is None
        x2 = x if x2 is None else np.asarray(x2, dtype=float).ravel()
        self.shape = (len(x), len(x2))
        tau = np.abs(x[:, None] - x2[None, :])
        uniq, inv = np.unique(tau, return_inverse=True)
        self._inv = inv.reshape(self.shape)
        self._basis = np.cos(2.0 * np.pi * np.outer(uniq, grid.omegas)) * grid.weights

    def gram(self, density):
        vals = self._basis @ np.asarray(density, dtype=float)
        K = vals[self._inv]
        if self.symmetric:
            K = 0.5 * (K + K.T)
        return K
