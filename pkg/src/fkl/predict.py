"""Equal-weight mixture-of-Gaussians predictive distribution.

Each retained kernel sample gives one Gaussian posterior; the mixture is
summarised by the laws of total mean and variance.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from . import gp_math
from .errors import NotPositiveDefinite
from .spectral import CosineBasis, density_from_latent

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PredictiveMixture:
    means: np.ndarray  # (J, n)
    variances: np.ndarray  # (J, n), noise included when include_noise
    test_x: np.ndarray
    noise_var: float = 0.0
    include_noise: bool = True
    n_dropped: int = 0
    components: list = field(default_factory=list)

    @property
    def j_effective(self):
        return self.means.shape[0]

    @property
    def mean(self):
        return mixture_moments(self.means, self.variances)[0]

    @property
    def variance(self):
        return mixture_moments(self.means, self.variances)[1]

    def band(self, width_std=2.0):
        return credible_band(self, width_std)

    def logpdf(self, y):
        """Pointwise log density of the mixture at ``y``."""
        y = np.asarray(y, dtype=float).ravel()
        comp = stats.norm.logpdf(y[None, :], self.means, np.sqrt(self.variances))
        return special.logsumexp(comp, axis=0) - np.log(self.j_effective)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.mean(stats.norm.cdf(y[None, :], self.means, np.sqrt(self.variances)), axis=0)

    def quantile(self, q, tol=1e-10):
        """Exact mixture quantiles by bisection on the averaged component CDFs."""
        sd = np.sqrt(self.variances)
        lo = np.min(self.means - 12.0 * sd - 1e-12, axis=0)
        hi = np.max(self.means + 12.0 * sd + 1e-12, axis=0)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < q
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) < tol:
                break
        return 0.5 * (lo + hi)


def mixture_moments(means, variances):
    """Mean and variance of an equal-weight Gaussian mixture (elementwise)."""
    means = np.atleast_2d(np.asarray(means, dtype=float))
    variances = np.atleast_2d(np.asarray(variances, dtype=float))
    mean = means.mean(axis=0)
    within = variances.mean(axis=0)
    between = np.mean((means - mean) ** 2, axis=0)
    return mean, within + between


def credible_band(mixture, width_std=2.0):
    sd = np.sqrt(mixture.variance)
    m = mixture.mean
    return m - width_std * sd, m + width_std * sd


def component_posterior(model, j, test_x, task=0, full_cov=False):
    """Gaussian posterior of the latent function under kernel sample ``j``."""
    slots = model.slot_terms[task]
    term = model.terms[task]
    test_x = np.asarray(test_x, dtype=float).reshape(-1, term.dims)
    gs = [model.latent_samples[s][j] for s in slots]
    K = term.gram(gs)
    Ks = np.ones((len(test_x), term.n))
    Kss = np.ones((len(test_x), len(test_x))) if full_cov else np.ones(len(test_x))
    for d, (s, g) in enumerate(zip(slots, gs)):
        density = density_from_latent(g)
        grid = model.grids[s]
        Ks *= CosineBasis(grid, test_x[:, d], term.x[:, d]).gram(density)
        if full_cov:
            Kss *= CosineBasis(grid, test_x[:, d]).gram(density)
        else:
            Kss *= grid.weights @ density
    return gp_math.posterior_from_grams(
        K, Ks, Kss, term.y, model.hp.gamma0[task], model.hp.noise_var(task)
    )


def predict(model, test_x, task=0, include_noise=True, full_cov=False, keep_components=False):
    """Mixture predictive at ``test_x`` for one task (0 for single-task models).

    With ``include_noise`` the component variances describe observations
    ``y*`` (latent variance plus the noise variance); otherwise the latent
    ``f*``. Components whose Gram cannot be factored are dropped.
    """
    J = model.latent_samples[0].shape[0]
    noise = model.hp.noise_var(task)
    means, variances, comps = [], [], []
    dropped = 0
    for j in range(J):
        try:
            post = component_posterior(model, j, test_x, task, full_cov)
        except NotPositiveDefinite as exc:
            log.warning("dropping component %d: %s", j, exc)
            dropped += 1
            continue
        var = post.variance + (noise if include_noise else 0.0)
        means.append(post.mean)
        variances.append(var)
        if keep_components:
            comps.append(post)
    if not means:
        raise NotPositiveDefinite("every mixture component failed to factor")
    return PredictiveMixture(
        np.array(means),
        np.array(variances),
        np.asarray(test_x, dtype=float),
        noise,
        include_noise,
        dropped,
        comps,
    )
