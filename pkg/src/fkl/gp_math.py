"""Exact Gaussian-process linear algebra.

Everything here is dense float64 and O(n^3). Kernels are plain callables of
the (non-negative) input distance ``tau``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import NotPositiveDefinite

JITTER_LADDER = (0.0, 1e-8, 1e-6, 1e-4)
LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower factor ``L`` with ``L @ L.T == K + jitter_used * I``."""

    L: np.ndarray
    jitter_used: float = 0.0

    def solve(self, b):
        return linalg.cho_solve((self.L, True), b, check_finite=False)

    def logdet(self):
        return 2.0 * np.sum(np.log(np.diag(self.L)))


@dataclass(frozen=True)
class GaussianPosterior:
    mean: np.ndarray
    covariance: np.ndarray
    n_clamped: int = 0

    @property
    def variance(self):
        return np.diag(self.covariance).copy()


def pairwise_distance(x, x2):
    """Absolute differences ``|x_i - x2_j|`` for 1-d inputs."""
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    return np.abs(x[:, None] - x2[None, :])


def gram(kernel, x, x2=None):
    """Evaluate ``kernel(|x_i - x2_j|)`` for every pair.

    The kernel is called once on the array of unique distances, which keeps
    regular grids cheap.
    """
    symmetric = x2 is None
    if symmetric:
        x2 = x
    tau = pairwise_distance(x, x2)
    uniq, inv = np.unique(tau, return_inverse=True)
    vals = np.asarray(kernel(uniq), dtype=float)
    K = vals[inv].reshape(tau.shape)
    if symmetric:
        K = 0.5 * (K + K.T)
    return K


def chol_stable(K):
    """Cholesky factor of ``K`` with an escalating diagonal jitter.

    Jitter is tried in the order ``JITTER_LADDER * mean(diag(K))``.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    scale = float(np.mean(np.diag(K))) if n else 1.0
    if not np.isfinite(scale) or scale <= 0.0:
        scale = 1.0
    if not np.all(np.isfinite(K)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    for level in JITTER_LADDER:
        jitter = level * scale
        try:
            L = linalg.cholesky(K + jitter * np.eye(n), lower=True, check_finite=False)
        except linalg.LinAlgError:
            continue
        if np.all(np.isfinite(L)):
            return CholeskyFactor(L, jitter)
    raise NotPositiveDefinite(
        f"Cholesky failed for all jitter levels up to {JITTER_LADDER[-1] * scale:.3g}"
    )


def log_marginal(y, mean, K, noise_var=0.0, chol=None):
    """Gaussian log density of ``y`` under N(mean, K + noise_var * I)."""
    y = np.asarray(y, dtype=float).ravel()
    r = y - mean
    if chol is None:
        chol = chol_stable(K + noise_var * np.eye(len(y)))
    alpha = chol.solve(r)
    return float(-0.5 * r @ alpha - 0.5 * chol.logdet() - 0.5 * len(y) * LOG_2PI)


def posterior_from_grams(K_train, K_cross, K_test, y, mean_const=0.0, noise_var=0.0):
    """Predictive moments of the noise-free latent function.

    ``K_cross`` has shape (n_test, n_train). A 1-d ``K_test`` is read as the
    prior variances only, and the returned covariance is then diagonal.
    """
    y = np.asarray(y, dtype=float).ravel()
    chol = chol_stable(K_train + noise_var * np.eye(len(y)))
    alpha = chol.solve(y - mean_const)
    mean = mean_const + K_cross @ alpha
    V = linalg.solve_triangular(chol.L, K_cross.T, lower=True, check_finite=False)
    K_test = np.asarray(K_test, dtype=float)
    if K_test.ndim == 1:
        d = K_test - np.sum(V**2, axis=0)
        n_clamped = int(np.count_nonzero(d < 0.0))
        return GaussianPosterior(mean, np.diag(np.maximum(d, 0.0)), n_clamped)
    cov = K_test - V.T @ V
    cov = 0.5 * (cov + cov.T)
    d = np.diag(cov)
    n_clamped = int(np.count_nonzero(d < 0.0))
    if n_clamped:
        cov[np.diag_indices_from(cov)] = np.maximum(d, 0.0)
    return GaussianPosterior(mean, cov, n_clamped)


def posterior(train_x, y, test_x, kernel, mean_const=0.0, noise_var=0.0):
    if len(np.atleast_1d(train_x)) == 0:
        raise ValueError("posterior needs at least one training point")
    K = gram(kernel, train_x)
    Ks = gram(kernel, test_x, train_x)
    Kss = gram(kernel, test_x)
    return posterior_from_grams(K, Ks, Kss, y, mean_const, noise_var)
