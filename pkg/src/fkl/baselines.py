"""Parametric-kernel GP baselines fit by maximizing the log marginal likelihood.

Kernels: ``rbf`` (one shared lengthscale), ``matern`` (Matern-5/2, shared),
``ard`` (RBF, one lengthscale per input), ``ard_matern`` and ``sm`` (spectral
mixture with ``q`` components and a diagonal spectral covariance per input).
Predictions come back as a one-component :class:`PredictiveMixture` so the
same metrics apply as for FKL.
"""

import numpy as np
from scipy import optimize

from . import gp_math
from .errors import NotPositiveDefinite
from .latent_model import softplus, softplus_inverse
from .predict import PredictiveMixture

KINDS = ("rbf", "matern", "ard", "ard_matern", "sm")
MIN_NOISE = 1e-6
MIN_SCALE = 1e-6


def _as_2d(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(len(x), -1)


class BaselineGP:
    def __init__(self, kind, q=4, init="data"):
        if kind not in KINDS:
            raise ValueError(f"unknown baseline kernel {kind!r}")
        if init not in ("data", "naive"):
            raise ValueError("init must be 'data' or 'naive'")
        self.kind = kind
        self.q = q
        self.init = init
        self.params = None

    # parameter layout -------------------------------------------------------

    def _n_ls(self, dims):
        return dims if self.kind in ("ard", "ard_matern") else 1

    def _initial(self, x, y, rng, first=True):
        dims = x.shape[1]
        span = np.ptp(x, axis=0)
        span = np.where(span > 0, span, 1.0)
        var = max(float(np.var(y)), 1e-6)
        mean = [float(np.mean(y))]
        noise = [softplus_inverse(0.1 * var)]
        if self.kind != "sm":
            # a tenth of the span; half the span tends to settle on the all-noise optimum
            frac = 0.1 if first else np.exp(rng.uniform(np.log(0.02), np.log(1.0)))
            ls = np.full(self._n_ls(dims), float(np.mean(span)))
            if self._n_ls(dims) > 1:
                ls = span.astype(float)
            ls = softplus_inverse(frac * ls)
            return np.concatenate([mean, [softplus_inverse(var)], ls, noise])
        if self.init == "naive":
            raw = np.zeros(self.q * (1 + 2 * dims))
            return np.concatenate([mean, raw, noise])
        # random draws scaled by the input statistics
        gaps = [np.diff(np.unique(x[:, d])) for d in range(dims)]
        min_gap = np.array([g.min() if len(g) else 1.0 for g in gaps])
        nyquist = 0.5 / min_gap
        w = np.full(self.q, var / self.q)
        mu = rng.uniform(0.0, 1.0, (self.q, dims)) * nyquist
        sd = 1.0 / (np.abs(rng.standard_normal((self.q, dims))) * span + 1e-12)
        raw = np.concatenate([softplus_inverse(w), softplus_inverse(mu.ravel() + 1e-9),
                              softplus_inverse(sd.ravel())])
        return np.concatenate([mean, raw, noise])

    def _unpack(self, p, dims):
        mean = p[0]
        noise = softplus(p[-1]) + MIN_NOISE
        body = p[1:-1]
        if self.kind != "sm":
            return mean, noise, softplus(body[0]), np.atleast_1d(softplus(body[1:])) + MIN_SCALE
        q = self.q
        w = softplus(body[:q])
        mu = softplus(body[q:q + q * dims]).reshape(q, dims)
        sd = softplus(body[q + q * dims:]).reshape(q, dims)
        return mean, noise, w, (mu, sd)

    # kernel -------------------------------------------------------------

    def _kernel(self, p, x1, x2):
        dims = x1.shape[1]
        _, _, scale, extra = self._unpack(p, dims)
        diff = x1[:, None, :] - x2[None, :, :]
        if self.kind == "sm":
            mu, sd = extra
            K = np.zeros(diff.shape[:2])
            for w, m, s in zip(scale, mu, sd):
                K += w * np.prod(np.exp(-2.0 * np.pi**2 * diff**2 * s**2) * np.cos(2.0 * np.pi * diff * m), axis=-1)
            return K
        r = np.sqrt(np.sum((diff / extra) ** 2, axis=-1))
        if self.kind in ("rbf", "ard"):
            return scale * np.exp(-0.5 * r**2)
        s = np.sqrt(5.0) * r
        return scale * (1.0 + s + s**2 / 3.0) * np.exp(-s)

    def _neg_lml(self, p, x, y):
        mean, noise, _, _ = self._unpack(p, x.shape[1])
        K = self._kernel(p, x, x) + noise * np.eye(len(y))
        try:
            val = -gp_math.log_marginal(y, mean, K)
        except NotPositiveDefinite:
            return 1e25
        return val if np.isfinite(val) else 1e25

    # public -------------------------------------------------------------

    def fit(self, x, y, max_iter=100, seed=0, restarts=1):
        """Maximize the log marginal likelihood with L-BFGS-B."""
        x = _as_2d(x)
        y = np.asarray(y, dtype=float).ravel()
        rng = np.random.default_rng(seed)
        best = None
        for r in range(max(1, restarts)):
            p0 = self._initial(x, y, rng, first=r == 0)
            res = optimize.minimize(self._neg_lml, p0, args=(x, y), method="L-BFGS-B",
                                    options={"maxiter": max_iter})
            if best is None or res.fun < best.fun:
                best = res
        self.params = best.x
        self.neg_lml = float(best.fun)
        self.x, self.y = x, y
        return self

    def kernel_values(self, tau):
        """k(tau) along the first input axis (others at zero distance)."""
        tau = np.asarray(tau, dtype=float).ravel()
        dims = self.x.shape[1]
        pts = np.zeros((len(tau), dims))
        pts[:, 0] = tau
        return self._kernel(self.params, pts, np.zeros((1, dims)))[:, 0]

    @property
    def noise_var(self):
        return float(self._unpack(self.params, self.x.shape[1])[1])

    def predict(self, test_x, include_noise=True):
        test_x = _as_2d(test_x)
        mean, noise, _, _ = self._unpack(self.params, self.x.shape[1])
        K = self._kernel(self.params, self.x, self.x)
        Ks = self._kernel(self.params, test_x, self.x)
        kss = np.diag(self._kernel(self.params, test_x[:1], test_x[:1]))[0] * np.ones(len(test_x))
        post = gp_math.posterior_from_grams(K, Ks, kss, self.y, mean, noise)
        var = post.variance + (noise if include_noise else 0.0)
        return PredictiveMixture(post.mean[None, :], var[None, :], test_x, noise, include_noise)
