"""Alternating sampler: gradient steps on the hyperparameters interleaved with
elliptical slice sampling of the latent log-spectral densities.

One engine covers every mode. A model is a list of latent *slots* (one per
input dimension or per task), each with its own frequency grid and theta
block, plus a list of data likelihood terms that read some of the slots.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import inference, latent_model
from .errors import DegenerateInputs
from .inference import DataTerm, EssState, OptState
from .latent_model import HyperParams
from .spectral import build_grid, input_span, kernel_from_latent

log = logging.getLogger(__name__)

MODES = ("single", "multi_input_shared", "multi_input_separate", "multi_task")


@dataclass(frozen=True)
class TrainConfig:
    rounds: int = 5
    n_optim: int = 10
    n_ess: int = 50
    j_samples: int = 10
    thin: int = 5
    grid_count: int = 100
    freq_scale: float = 1.0
    mode: str = "single"
    seed: int = 0
    learning_rate: float = 0.01
    shared_noise: bool = False
    box_sigma: float = None
    # initial transformed latent hyperparameters; None keeps softplus(0)
    init_mean_width: float = None
    init_lengthscale: float = None
    init_outputscale: float = None
    init_noise: float = 1e-4
    init_latent_jitter: float = 1e-4

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        for name in ("rounds", "j_samples", "thin", "grid_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_optim < 0 or self.n_ess < 0:
            raise ValueError("n_optim and n_ess must be >= 0")

    def to_dict(self):
        return asdict(self)


@dataclass(eq=False)
class FittedModel:
    hp: HyperParams
    latent_samples: list  # per slot, array (J, I)
    grids: list  # per slot
    terms: list  # DataTerms
    mode: str
    config: TrainConfig
    diagnostics: dict = field(default_factory=dict)

    @property
    def slot_terms(self):
        """For each data term, the slot indices it reads."""
        return _slot_layout(self.mode, len(self.grids), len(self.terms))

    def task_slots(self, task):
        return self.slot_terms[task]


def _slot_layout(mode, n_slots, n_terms):
    if mode == "multi_task":
        return [[t] for t in range(n_terms)]
    return [list(range(n_slots))]


def _block(mode, slot):
    return slot if mode == "multi_input_separate" else 0


class _Engine:
    """Mutable state of one fit call."""

    def __init__(self, terms, grids, mode, config, hp=None, init_latent=None):
        self.terms = terms
        self.grids = grids
        self.mode = mode
        self.config = config
        self.layout = _slot_layout(mode, len(grids), len(terms))
        n_blocks = len(grids) if mode == "multi_input_separate" else 1
        if hp is None:
            means = [float(np.mean(t.y)) for t in terms]
            n_noise = 1 if config.shared_noise else len(terms)
            hp = HyperParams.default(
                means,
                n_blocks=n_blocks,
                n_noise=n_noise,
                noise_var=config.init_noise,
                latent_jitter=config.init_latent_jitter,
                mean_width=config.init_mean_width,
                lengthscale=config.init_lengthscale,
                outputscale=config.init_outputscale,
            )
        self.hp = hp
        if init_latent is None:
            self.g = [np.zeros(gr.count) for gr in grids]
        else:
            self.g = [np.array(v, dtype=float) for v in init_latent]
        seq = np.random.SeedSequence(config.seed)
        self.rngs = [np.random.Generator(np.random.Philox(s)) for s in seq.spawn(len(grids))]
        self.opt = OptState.zeros(len(hp.to_vector()), learning_rate=config.learning_rate)
        self.loss_trace = []
        self.ess_moves = []
        self.n_optim_steps = 0
        self.n_ess_transitions = [0] * len(grids)

    # -- loss ---------------------------------------------------------------

    def loss(self, hp, g=None):
        g = self.g if g is None else g
        data = self.terms if self.mode == "multi_task" else self.terms[0]
        return inference.loss_phi_multi(hp, g, self.grids, data, self.config.box_sigma)

    def optimize(self, n_steps):
        for _ in range(n_steps):
            value = self.loss(self.hp)
            grad = inference.grad_loss(self.hp, self.loss)
            vec, self.opt = inference.amsgrad_step(self.hp.to_vector(), grad, self.opt)
            self.hp = self.hp.from_vector(vec)
            self.loss_trace.append(float(value))
            self.n_optim_steps += 1

    # -- ESS ----------------------------------------------------------------

    def _term_for_slot(self, slot):
        for t, slots in enumerate(self.layout):
            if slot in slots:
                return t, slots
        raise KeyError(slot)

    def slot_likelihood(self, slot, mean):
        t, slots = self._term_for_slot(slot)
        term = self.terms[t]
        gamma0 = self.hp.gamma0[t]
        noise = self.hp.noise_var(t)
        others = list(self.g)

        def loglik(residual):
            gs = list(others)
            gs[slot] = mean + residual
            return inference.safe_log_likelihood(term, [gs[s] for s in slots], gamma0, noise)

        return loglik

    def _prepare(self):
        chols, means = [], []
        for s, gr in enumerate(self.grids):
            b = _block(self.mode, s)
            chols.append(latent_model.latent_prior_chol(gr, self.hp, b))
            means.append(latent_model.latent_mean(gr.omegas, self.hp, b))
        return chols, means

    def _ess_slot(self, slot, chol, mean, n_steps):
        state = EssState(self.g[slot] - mean, self.slot_likelihood(slot, mean), self.rngs[slot])
        start = self.g[slot]
        for _ in range(n_steps):
            state = inference.ess_step(state, chol)
        self.g[slot] = mean + state.current
        self.n_ess_transitions[slot] += n_steps
        return float(np.linalg.norm(self.g[slot] - start))

    def sample(self, n_steps):
        chols, means = self._prepare()
        moves = []
        if self.mode == "multi_task" or len(self.grids) == 1:
            # slots are conditionally independent given theta
            for t in range(len(self.grids)):
                moves.append(self._ess_slot(t, chols[t], means[t], n_steps))
        else:
            before = [g.copy() for g in self.g]
            for _ in range(n_steps):
                for s in range(len(self.grids)):
                    self._ess_slot(s, chols[s], means[s], 1)
            moves = [float(np.linalg.norm(a - b)) for a, b in zip(self.g, before)]
        return moves

    def draw_posterior(self, j_samples, thin):
        chols, means = self._prepare()
        samples = [np.empty((j_samples, gr.count)) for gr in self.grids]
        sweeps = self.n_ess_transitions.copy()
        for j in range(j_samples):
            for _ in range(thin):
                for s in range(len(self.grids)):
                    self._ess_slot(s, chols[s], means[s], 1)
            for s in range(len(self.grids)):
                samples[s][j] = self.g[s]
        n_sampling = [a - b for a, b in zip(self.n_ess_transitions, sweeps)]
        self.n_ess_transitions = sweeps
        return samples, n_sampling

    def run(self):
        cfg = self.config
        initial_loss = float(self.loss(self.hp))
        for r in range(cfg.rounds):
            self.optimize(cfg.n_optim)
            self.ess_moves.append(self.sample(cfg.n_ess))
            log.debug("round %d loss %.4f", r, self.loss(self.hp))
        final_loss = float(self.loss(self.hp))
        samples, n_sampling = self.draw_posterior(cfg.j_samples, cfg.thin)
        diagnostics = {
            "loss_trace": self.loss_trace,
            "initial_loss": initial_loss,
            "final_loss": final_loss,
            "ess_moves": self.ess_moves,
            "n_optim_steps": self.n_optim_steps,
            "n_ess_transitions": self.n_ess_transitions,
            "n_sampling_transitions": n_sampling,
        }
        return FittedModel(self.hp, samples, self.grids, self.terms, self.mode, cfg, diagnostics)


def _check_inputs(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if len(x) != len(y):
        raise ValueError("inputs and targets differ in length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("training data must be finite")
    return x, y


def _grid(x, config):
    span = input_span(x)
    if span <= 0.0:
        raise DegenerateInputs("training inputs do not span a positive distance")
    return build_grid(span, config.grid_count, config.freq_scale)


def fit(x, y, config=TrainConfig(), hp=None, init_latent=None):
    """Single-input FKL with the alternating sampler.

    ``init_latent`` optionally replaces the constant-density start
    (``g = 0``) with a given log-spectral sample.
    """
    x, y = _check_inputs(x, y)
    if x.ndim > 1 and x.shape[1] > 1:
        raise ValueError("fit expects 1-d inputs; use fit_multi_input")
    x = x.ravel()
    grid = _grid(x, config)
    term = DataTerm(x, y, grid)
    init = None if init_latent is None else [init_latent]
    return _Engine([term], [grid], "single", config, hp, init).run()


def fit_multi_input(x, y, config=TrainConfig(mode="multi_input_shared"), hp=None, init_latent=None):
    """Product-kernel FKL over the columns of ``x``.

    Each dimension gets its own grid from its own span. ``config.mode``
    chooses one shared theta ("multi_input_shared") or one per dimension
    ("multi_input_separate").
    """
    x, y = _check_inputs(x, y)
    x = x.reshape(len(x), -1)
    mode = config.mode if config.mode.startswith("multi_input") else "multi_input_shared"
    grids = []
    for d in range(x.shape[1]):
        span = input_span(x[:, d])
        if span <= 0.0:
            # constant column: its kernel factor is the constant k(0)
            span = 1.0
        grids.append(build_grid(span, config.grid_count, config.freq_scale))
    if all(input_span(x[:, d]) <= 0.0 for d in range(x.shape[1])):
        raise DegenerateInputs("all input columns are constant")
    term = DataTerm(x, y, grids)
    engine = _Engine([term], grids, mode, config, hp, init_latent)
    return engine.run()


def fit_multi_task(tasks, config=TrainConfig(mode="multi_task"), hp=None, init_latent=None):
    """Multi-task FKL: one shared theta, an independent latent draw per task.

    ``tasks`` is a sequence of ``(x, y)`` pairs with 1-d inputs. All tasks
    share one grid built from the pooled input span.
    """
    tasks = [_check_inputs(x, y) for x, y in tasks]
    if not tasks:
        raise ValueError("need at least one task")
    for x, y in tasks:
        if len(y) < 2:
            raise ValueError("each task needs at least 2 points")
    grid = _grid(np.concatenate([np.ravel(x) for x, _ in tasks]), config)
    terms = [DataTerm(np.ravel(x), y, grid) for x, y in tasks]
    grids = [grid] * len(terms)
    engine = _Engine(terms, grids, "multi_task", config, hp, init_latent)
    return engine.run()


def posterior_kernels(model):
    """Spectral kernels for every retained sample: list per slot of J kernels."""
    return [
        [kernel_from_latent(g, grid) for g in samples]
        for samples, grid in zip(model.latent_samples, model.grids)
    ]
