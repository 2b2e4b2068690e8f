"""Prior over log spectral densities and hyperpriors over all hyperparameters.

The latent process on the frequency grid has a negative-quadratic mean (the
log of an RBF spectrum) and a Matern-3/2 covariance plus a white jitter term.
Positive hyperparameters are stored raw and mapped through softplus.
"""

from dataclasses import dataclass

import numpy as np

from . import gp_math

THETA_NAMES = ("theta0", "theta1_raw", "theta2_raw", "theta3_raw", "theta4_raw")
NOISE_BOX = (1e-8, 1e-3)
MEAN_PRIOR_VAR = 100.0
SQRT3 = np.sqrt(3.0)


def softplus(raw):
    raw = np.asarray(raw, dtype=float)
    out = np.where(raw > 30.0, raw + np.log1p(np.exp(-np.abs(raw))), np.log1p(np.exp(np.minimum(raw, 30.0))))
    return out if out.ndim else float(out)


def softplus_inverse(value):
    """Raw value whose softplus equals ``value`` (> 0)."""
    value = np.asarray(value, dtype=float)
    out = np.where(value > 30.0, value + np.log(-np.expm1(-value)), np.log(np.expm1(np.minimum(value, 30.0))))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LatentParams:
    """Transformed latent-GP hyperparameters for one block."""

    mean_offset: float
    mean_width: float
    lengthscale: float
    jitter: float
    outputscale: float

    @classmethod
    def from_raw(cls, row):
        t0, t1, t2, t3, t4 = (float(v) for v in row)
        return cls(t0, softplus(t1), softplus(t2), softplus(t3), softplus(t4))


@dataclass(frozen=True, eq=False)
class HyperParams:
    """All raw hyperparameters.

    ``theta`` has one row per latent block (one block, or one per input
    dimension in "separate" mode) with columns named in ``THETA_NAMES``.
    ``gamma0`` holds one constant mean per task and ``noise_raw`` one raw
    observation-noise entry per task (or a single shared one).
    """

    theta: np.ndarray
    gamma0: np.ndarray
    noise_raw: np.ndarray

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        if theta.shape[1] != len(THETA_NAMES):
            raise ValueError(f"theta must have {len(THETA_NAMES)} columns")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "gamma0", np.atleast_1d(np.asarray(self.gamma0, dtype=float)))
        object.__setattr__(self, "noise_raw", np.atleast_1d(np.asarray(self.noise_raw, dtype=float)))

    @classmethod
    def default(cls, y_means=(0.0,), n_blocks=1, n_noise=None, noise_var=1e-4, latent_jitter=1e-4,
                mean_offset=0.0, mean_width=None, lengthscale=None, outputscale=None):
        """Initial values: raw 0 (softplus 0.693) unless overridden."""
        y_means = np.atleast_1d(np.asarray(y_means, dtype=float))
        n_noise = len(y_means) if n_noise is None else n_noise
        row = np.zeros(len(THETA_NAMES))
        row[0] = mean_offset
        for i, v in ((1, mean_width), (2, lengthscale), (4, outputscale)):
            if v is not None:
                row[i] = softplus_inverse(v)
        row[3] = softplus_inverse(latent_jitter)
        return cls(
            np.tile(row, (n_blocks, 1)),
            y_means.copy(),
            np.full(n_noise, softplus_inverse(noise_var)),
        )

    @property
    def n_blocks(self):
        return self.theta.shape[0]

    @property
    def n_tasks(self):
        return len(self.gamma0)

    def latent(self, block=0):
        return LatentParams.from_raw(self.theta[block])

    def noise_var(self, task=0):
        idx = task if len(self.noise_raw) > 1 else 0
        return softplus(self.noise_raw[idx])

    # flat raw vector used by the optimizer
    def to_vector(self):
        return np.concatenate([self.theta.ravel(), self.gamma0, self.noise_raw])

    def from_vector(self, vec):
        vec = np.asarray(vec, dtype=float)
        nt = self.theta.size
        ng = len(self.gamma0)
        return HyperParams(
            vec[:nt].reshape(self.theta.shape),
            vec[nt:nt + ng],
            vec[nt + ng:],
        )

    def vector_names(self):
        names = []
        for b in range(self.n_blocks):
            names += [f"{n}[{b}]" for n in THETA_NAMES]
        names += [f"gamma0[{t}]" for t in range(len(self.gamma0))]
        names += [f"noise_raw[{t}]" for t in range(len(self.noise_raw))]
        return names

    def to_dict(self):
        """Flat name -> list of raw values."""
        d = {name: self.theta[:, i].tolist() for i, name in enumerate(THETA_NAMES)}
        d["gamma0"] = self.gamma0.tolist()
        d["noise_raw"] = self.noise_raw.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        theta = np.column_stack([np.atleast_1d(np.asarray(d[n], dtype=float)) for n in THETA_NAMES])
        return cls(theta, d["gamma0"], d["noise_raw"])

    def __eq__(self, other):
        if not isinstance(other, HyperParams):
            return NotImplemented
        return (
            np.array_equal(self.theta, other.theta)
            and np.array_equal(self.gamma0, other.gamma0)
            and np.array_equal(self.noise_raw, other.noise_raw)
        )


def _params(hp, block):
    return hp if isinstance(hp, LatentParams) else hp.latent(block)


def latent_mean(omega, hp, block=0):
    p = _params(hp, block)
    omega = np.asarray(omega, dtype=float)
    return p.mean_offset - omega**2 / (2.0 * p.mean_width**2)


def matern32(r, lengthscale, outputscale=1.0):
    s = SQRT3 * np.abs(r) / lengthscale
    return outputscale * (1.0 + s) * np.exp(-s)


def latent_cov(omega, omega2, hp, block=0):
    """Matern-3/2 covariance plus jitter on exact coincidence."""
    p = _params(hp, block)
    r = np.abs(np.subtract.outer(np.asarray(omega, dtype=float), np.asarray(omega2, dtype=float)))
    return matern32(r, p.lengthscale, p.outputscale) + p.jitter * (r == 0.0)


def latent_gram(grid, hp, block=0):
    return latent_cov(grid.omegas, grid.omegas, hp, block)


def latent_prior_chol(grid, hp, block=0):
    return gp_math.chol_stable(latent_gram(grid, hp, block))


def latent_log_prior(g, grid, hp, block=0, chol=None):
    mu = latent_mean(grid.omegas, hp, block)
    K = None if chol is not None else latent_gram(grid, hp, block)
    return gp_math.log_marginal(g, mu, K, 0.0, chol=chol)


def sample_latent_prior(grid, hp, rng, size=None, block=0):
    """Forward draws of ``g`` on the grid (shape (size, I) or (I,))."""
    chol = latent_prior_chol(grid, hp, block)
    mu = latent_mean(grid.omegas, hp, block)
    n = 1 if size is None else size
    z = rng.standard_normal((n, grid.count))
    draws = mu + z @ chol.L.T
    return draws[0] if size is None else draws


def smoothed_box_log_density(x, box=NOISE_BOX, sigma=None):
    """``-d(x, B)^2 / sqrt(2 sigma^2)``; zero inside the box."""
    a, b = box
    if sigma is None:
        sigma = 0.01 * (b - a)
    x = np.asarray(x, dtype=float)
    d = np.maximum(a - x, 0.0) + np.maximum(x - b, 0.0)
    return -(d**2) / np.sqrt(2.0 * sigma**2)


def normal_log_density(x, var=MEAN_PRIOR_VAR):
    x = np.asarray(x, dtype=float)
    return -0.5 * x**2 / var - 0.5 * np.log(2.0 * np.pi * var)


def lognormal_log_density(x):
    x = np.asarray(x, dtype=float)
    lx = np.log(x)
    return -lx - 0.5 * np.log(2.0 * np.pi) - 0.5 * lx**2


def hyper_log_prior(hp, box_sigma=None):
    total = 0.0
    for b in range(hp.n_blocks):
        p = hp.latent(b)
        total += normal_log_density(p.mean_offset)
        total += lognormal_log_density(p.mean_width)
        total += lognormal_log_density(p.lengthscale)
        total += lognormal_log_density(p.outputscale)
        total += smoothed_box_log_density(p.jitter, sigma=box_sigma)
    total += np.sum(normal_log_density(hp.gamma0))
    total += np.sum(smoothed_box_log_density(softplus(hp.noise_raw), sigma=box_sigma))
    return float(total)
