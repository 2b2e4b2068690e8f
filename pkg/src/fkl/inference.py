"""The two alternating updates: elliptical slice sampling of the latent
log-spectral density and AMSGrad on the hyperparameter loss."""

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import gp_math, latent_model
from .errors import NonFiniteGradient, NonTerminating, NotPositiveDefinite
from .spectral import CosineBasis, FrequencyGrid, density_from_latent

BRACKET_TOL = 1e-12


# ---------------------------------------------------------------------------
# elliptical slice sampling
# ---------------------------------------------------------------------------


@dataclass
class EssState:
    """Current mean-removed latent sample and its cached log-likelihood."""

    current: np.ndarray
    likelihood: Callable[[np.ndarray], float]
    rng: np.random.Generator
    loglik: float = None
    n_evals: int = 0

    def __post_init__(self):
        self.current = np.asarray(self.current, dtype=float)
        if self.loglik is None:
            self.loglik = float(self.likelihood(self.current))


def ess_step(state, prior_chol):
    """One elliptical slice sampling transition (Murray, Adams & MacKay 2010).

    ``prior_chol`` factors the zero-mean Gaussian prior covariance of
    ``state.current``.
    """
    f = state.current
    cur_ll = state.loglik
    if not np.isfinite(cur_ll):
        raise NonTerminating(f"log-likelihood at the current state is {cur_ll}")
    rng = state.rng
    L = prior_chol.L if hasattr(prior_chol, "L") else prior_chol
    nu = L @ rng.standard_normal(len(f))
    log_y = cur_ll + np.log(rng.uniform())

    angle = rng.uniform(0.0, 2.0 * np.pi)
    lo, hi = angle - 2.0 * np.pi, angle
    n_evals = 0
    while True:
        proposal = f * np.cos(angle) + nu * np.sin(angle)
        ll = float(state.likelihood(proposal))
        n_evals += 1
        if ll > log_y:
            return replace(state, current=proposal, loglik=ll, n_evals=state.n_evals + n_evals)
        if angle < 0.0:
            lo = angle
        else:
            hi = angle
        if hi - lo < BRACKET_TOL:
            raise NonTerminating("slice bracket shrank to zero without an accepted proposal")
        angle = rng.uniform(lo, hi)


def ess_chain(state, prior_chol, n_steps):
    for _ in range(n_steps):
        state = ess_step(state, prior_chol)
    return state


# ---------------------------------------------------------------------------
# data likelihood under (product) spectral kernels
# ---------------------------------------------------------------------------


class DataTerm:
    """Training data for one task plus the cached cosine bases.

    ``x`` is 1-d, or (n, D) for product kernels over D input dimensions with
    one grid per dimension.
    """

    def __init__(self, x, y, grids):
        x = np.asarray(x, dtype=float)
        self.x = x.reshape(len(x), -1)
        self.y = np.asarray(y, dtype=float).ravel()
        if isinstance(grids, FrequencyGrid):
            grids = [grids] * self.x.shape[1]
        if len(grids) != self.x.shape[1]:
            raise ValueError("need one frequency grid per input dimension")
        self.grids = list(grids)
        self.bases = [CosineBasis(gr, self.x[:, d]) for d, gr in enumerate(self.grids)]
        self._cache_key = None
        self._cache_val = None

    @property
    def n(self):
        return len(self.y)

    @property
    def dims(self):
        return self.x.shape[1]

    def gram(self, gs):
        """Product kernel Gram for latent samples ``gs`` (one per dimension)."""
        gs = [np.asarray(g, dtype=float) for g in _as_list(gs)]
        if len(gs) != self.dims:
            raise ValueError(f"need {self.dims} latent samples, got {len(gs)}")
        key = b"".join(g.tobytes() for g in gs)
        if key == self._cache_key:
            return self._cache_val
        K = None
        for basis, g in zip(self.bases, gs):
            Kd = basis.gram(density_from_latent(g))
            K = Kd if K is None else K * Kd
        self._cache_key, self._cache_val = key, K
        return K

    def log_likelihood(self, gs, gamma0, noise_var):
        K = self.gram(gs)
        K = K + noise_var * np.eye(self.n)
        return gp_math.log_marginal(self.y, gamma0, K)


def _as_list(gs):
    if isinstance(gs, np.ndarray) and gs.ndim == 1:
        return [gs]
    return list(gs)


def as_data_term(data, grids):
    if isinstance(data, DataTerm):
        return data
    x, y = data
    return DataTerm(x, y, grids)


def safe_log_likelihood(term, gs, gamma0, noise_var):
    """Data log-likelihood, or -inf where the Gram cannot be factored.

    Used inside ESS so that a non-PSD proposal is simply rejected.
    """
    try:
        return term.log_likelihood(gs, gamma0, noise_var)
    except NotPositiveDefinite:
        return -np.inf


# ---------------------------------------------------------------------------
# hyperparameter loss
# ---------------------------------------------------------------------------


def loss_phi(hp, g_tilde, grid, data, box_sigma=None):
    """Negative (log hyperprior + latent log prior + data log marginal)."""
    term = as_data_term(data, grid)
    total = latent_model.hyper_log_prior(hp, box_sigma)
    total += latent_model.latent_log_prior(g_tilde, grid, hp)
    total += term.log_likelihood(g_tilde, hp.gamma0[0], hp.noise_var(0))
    return -total


def loss_phi_multi(hp, g_set, grids, data, box_sigma=None):
    """Loss summed over several latent samples.

    ``data`` is a single :class:`DataTerm` (multi-input: one likelihood under
    the product kernel over ``g_set``) or a list of them (multi-task: task
    ``t`` uses ``g_set[t]``, ``gamma0[t]`` and its own noise).
    """
    g_set = list(g_set)
    if isinstance(grids, FrequencyGrid):
        grids = [grids] * len(g_set)
    total = latent_model.hyper_log_prior(hp, box_sigma)
    for d, (g, gr) in enumerate(zip(g_set, grids)):
        block = d if hp.n_blocks > 1 else 0
        total += latent_model.latent_log_prior(g, gr, hp, block)
    if isinstance(data, (list, tuple)):
        for t, term in enumerate(data):
            total += term.log_likelihood([g_set[t]], hp.gamma0[t], hp.noise_var(t))
    else:
        total += data.log_likelihood(g_set, hp.gamma0[0], hp.noise_var(0))
    return -total


# ---------------------------------------------------------------------------
# gradients and AMSGrad
# ---------------------------------------------------------------------------


def fd_step(raw):
    return 1e-4 * np.maximum(1.0, np.abs(raw))


def grad_loss(hp, loss):
    """Central finite-difference gradient over the raw coordinates.

    ``hp`` is either a :class:`HyperParams` (and ``loss`` takes one) or a
    plain parameter vector.
    """
    is_hp = isinstance(hp, latent_model.HyperParams)
    x0 = hp.to_vector() if is_hp else np.asarray(hp, dtype=float).copy()

    def f(vec):
        val = loss(hp.from_vector(vec) if is_hp else vec)
        if not np.isfinite(val):
            raise NonFiniteGradient(f"loss probe returned {val}")
        return float(val)

    h = fd_step(x0)
    grad = np.empty_like(x0)
    for i in range(len(x0)):
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        grad[i] = (f(xp) - f(xm)) / (2.0 * h[i])
    return grad


@dataclass(frozen=True)
class OptState:
    m: np.ndarray
    v: np.ndarray
    v_hat: np.ndarray
    step_count: int = 0
    learning_rate: float = 0.01
    betas: tuple = (0.9, 0.999)
    epsilon: float = 1e-8

    @classmethod
    def zeros(cls, n, learning_rate=0.01, betas=(0.9, 0.999), epsilon=1e-8):
        z = np.zeros(n)
        return cls(z, z.copy(), z.copy(), 0, learning_rate, tuple(betas), epsilon)


def amsgrad_step(params, grads, state):
    """AMSGrad update without bias correction."""
    b1, b2 = state.betas
    grads = np.asarray(grads, dtype=float)
    m = b1 * state.m + (1.0 - b1) * grads
    v = b2 * state.v + (1.0 - b2) * grads**2
    v_hat = np.maximum(state.v_hat, v)
    new = np.asarray(params, dtype=float) - state.learning_rate * m / (np.sqrt(v_hat) + state.epsilon)
    return new, replace(state, m=m, v=v, v_hat=v_hat, step_count=state.step_count + 1)
