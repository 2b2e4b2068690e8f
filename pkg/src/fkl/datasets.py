"""Synthetic generators, CSV ingestion, splits and evaluation metrics."""

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import special, stats

from . import gp_math
from .errors import DegenerateVariance, EmptySplit, NonFiniteEntry, ParseError

FIXTURE_DIR = Path(__file__).parent / "data"

SM_WEIGHTS = (1.0, 0.5)
SM_MEANS = (0.2, 0.9)
SM_STDS = (0.05, 0.05)


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray  # (n,) or (n, D)
    targets: np.ndarray
    task: np.ndarray = None
    x_mean: np.ndarray = None
    x_std: np.ndarray = None
    y_mean: float = 0.0
    y_std: float = 1.0
    provenance: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.targets, dtype=float).ravel()
        if len(x) != len(y):
            raise ValueError("inputs and targets differ in length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)
        if self.task is not None:
            object.__setattr__(self, "task", np.asarray(self.task, dtype=int).ravel())

    def __len__(self):
        return len(self.targets)

    @property
    def dims(self):
        return 1 if self.inputs.ndim == 1 else self.inputs.shape[1]

    @property
    def is_standardized(self):
        return self.x_mean is not None

    def subset(self, idx):
        idx = np.asarray(idx)
        task = None if self.task is None else self.task[idx]
        return replace(self, inputs=self.inputs[idx], targets=self.targets[idx], task=task)

    def standardize(self, reference=None):
        """Zero-mean, unit-variance columns and targets.

        Statistics come from ``reference`` (e.g. the training split) when
        given, else from this dataset. Zero-variance columns keep scale 1.
        """
        ref = self if reference is None else reference
        x_mean = ref.inputs.mean(axis=0)
        x_std = _safe_std(ref.inputs.std(axis=0))
        y_mean = float(ref.targets.mean())
        y_std = float(_safe_std(ref.targets.std()))
        return replace(
            self,
            inputs=(self.inputs - x_mean) / x_std,
            targets=(self.targets - y_mean) / y_std,
            x_mean=np.atleast_1d(x_mean),
            x_std=np.atleast_1d(x_std),
            y_mean=y_mean,
            y_std=y_std,
        )

    def destandardize(self):
        if not self.is_standardized:
            return self
        x_mean = self.x_mean if self.inputs.ndim > 1 else self.x_mean[0]
        x_std = self.x_std if self.inputs.ndim > 1 else self.x_std[0]
        return replace(
            self,
            inputs=self.inputs * x_std + x_mean,
            targets=self.targets * self.y_std + self.y_mean,
            x_mean=None,
            x_std=None,
            y_mean=0.0,
            y_std=1.0,
        )

    def tasks(self):
        """Per-task ``(x, y)`` pairs in task-id order."""
        if self.task is None:
            return [(self.inputs, self.targets)]
        return [
            (self.inputs[self.task == t], self.targets[self.task == t])
            for t in np.unique(self.task)
        ]


def _safe_std(s):
    s = np.asarray(s, dtype=float)
    return np.where(s > 0.0, s, 1.0) if s.ndim else (float(s) if s > 0.0 else 1.0)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def sm_kernel(tau, weights=SM_WEIGHTS, means=SM_MEANS, stds=SM_STDS):
    """Spectral mixture kernel sum_q w_q exp(-2 pi^2 s_q^2 tau^2) cos(2 pi m_q tau)."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    for w, m, s in zip(weights, means, stds):
        out = out + w * np.exp(-2.0 * np.pi**2 * s**2 * tau**2) * np.cos(2.0 * np.pi * m * tau)
    return out


def sm_density(omega, weights=SM_WEIGHTS, means=SM_MEANS, stds=SM_STDS):
    """One-sided spectral density of :func:`sm_kernel` (positive frequencies)."""
    omega = np.asarray(omega, dtype=float)
    out = np.zeros_like(omega)
    for w, m, s in zip(weights, means, stds):
        out = out + w * (stats.norm.pdf(omega, m, s) + stats.norm.pdf(omega, -m, s))
    return out


def quasi_periodic_kernel(tau, lengthscale, freq):
    tau = np.asarray(tau, dtype=float)
    return np.exp(-(tau**2) / (2.0 * lengthscale**2)) * np.exp(-2.0 * np.sin(np.pi * tau * freq) ** 2)


def sample_gp(kernel, x, rng, noise_std=0.0):
    """One zero-mean draw of a 1-d GP at ``x``."""
    K = gp_math.gram(kernel, x)
    chol = gp_math.chol_stable(K)
    f = chol.L @ rng.standard_normal(len(x))
    return f + noise_std * rng.standard_normal(len(x))


def central_band(lo, hi, fraction=0.2):
    mid = 0.5 * (lo + hi)
    half = 0.5 * fraction * (hi - lo)
    return (mid - half, mid + half)


def gen_spectral_mixture(seed, n=150, lo=-7.0, hi=7.0, weights=SM_WEIGHTS, means=SM_MEANS,
                         stds=SM_STDS, holdout_fraction=0.2):
    """Draw from a GP with a two-component spectral mixture kernel.

    Inputs are uniform on ``(lo, hi)``; ``meta["holdout_band"]`` is the
    central ``holdout_fraction`` of that range.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(lo, hi, n)
    y = sample_gp(lambda t: sm_kernel(t, weights, means, stds), x, rng)
    meta = {
        "holdout_band": central_band(lo, hi, holdout_fraction),
        "weights": list(weights),
        "means": list(means),
        "stds": list(stds),
    }
    return Dataset(x, y, provenance=f"spectral_mixture(seed={seed})", meta=meta)


def gen_quasi_periodic(seed, lengthscale=3.0, freq=0.5, n=150, lo=-7.0, hi=7.0, holdout_fraction=0.2):
    rng = np.random.default_rng(seed)
    x = rng.uniform(lo, hi, n)
    y = sample_gp(lambda t: quasi_periodic_kernel(t, lengthscale, freq), x, rng)
    meta = {
        "holdout_band": central_band(lo, hi, holdout_fraction),
        "lengthscale": lengthscale,
        "freq": freq,
    }
    return Dataset(x, y, provenance=f"quasi_periodic(seed={seed})", meta=meta)


def sinc(x):
    """sin(pi x) / (pi x) with sinc(0) = 1."""
    return np.sinc(np.asarray(x, dtype=float))


def sinc_pattern(x):
    x = np.asarray(x, dtype=float)
    return sinc(x + 10.0) + sinc(x) + sinc(x - 10.0)


def gen_sinc(seed=0, x=None, n=120, lo=-15.0, hi=15.0, noise_std=0.01, holdout_band=(-4.5, 4.5)):
    """Three sinc bumps centred at -10, 0 and 10.

    ``x`` overrides the default uniform random inputs on ``(lo, hi)``.
    """
    rng = np.random.default_rng(seed)
    if x is None:
        x = np.sort(rng.uniform(lo, hi, n))
    x = np.asarray(x, dtype=float)
    y = sinc_pattern(x) + noise_std * rng.standard_normal(len(x))
    meta = {"holdout_band": tuple(holdout_band), "noise_std": noise_std}
    return Dataset(x, y, provenance=f"sinc(seed={seed})", meta=meta)


def gen_rbf_gp(seed, n=100, lo=-5.0, hi=5.0, lengthscale=1.0, variance=1.0, noise_var=1e-4):
    """Noisy draw from an RBF-kernel GP (a well-specified test case)."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(lo, hi, n)
    kern = lambda t: variance * np.exp(-0.5 * (t / lengthscale) ** 2)
    y = sample_gp(kern, x, rng, np.sqrt(noise_var))
    meta = {"lengthscale": lengthscale, "variance": variance, "noise_var": noise_var}
    return Dataset(x, y, provenance=f"rbf_gp(seed={seed})", meta=meta)


def gen_rbf_product_gp(seed, n=80, dims=2, lengthscales=None, noise_var=1e-4):
    rng = np.random.default_rng(seed)
    ls = np.ones(dims) if lengthscales is None else np.asarray(lengthscales, dtype=float)
    x = rng.uniform(-3.0, 3.0, (n, dims))
    d2 = np.sum(((x[:, None, :] - x[None, :, :]) / ls) ** 2, axis=-1)
    K = np.exp(-0.5 * d2)
    f = gp_math.chol_stable(K).L @ rng.standard_normal(n)
    y = f + np.sqrt(noise_var) * rng.standard_normal(n)
    return Dataset(x, y, provenance=f"rbf_product_gp(seed={seed})", meta={"lengthscales": ls.tolist()})


def gen_multi_task_sm(seed, n_tasks=3, n=50, lo=-7.0, hi=7.0, weights=SM_WEIGHTS, means=SM_MEANS,
                      stds=SM_STDS):
    """Independent draws of one spectral mixture GP, one per task."""
    rng = np.random.default_rng(seed)
    xs, ys, ts = [], [], []
    for t in range(n_tasks):
        x = rng.uniform(lo, hi, n)
        xs.append(x)
        ys.append(sample_gp(lambda tau: sm_kernel(tau, weights, means, stds), x, rng))
        ts.append(np.full(n, t))
    meta = {"weights": list(weights), "means": list(means), "stds": list(stds)}
    return Dataset(np.concatenate(xs), np.concatenate(ys), np.concatenate(ts),
                   provenance=f"multi_task_sm(seed={seed})", meta=meta)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    inputs: tuple
    target: str
    task: str = None


def load_csv(path, schema):
    """Read a headed CSV file into a :class:`Dataset`.

    ``schema`` is a :class:`CsvSchema` or a mapping with keys ``inputs``,
    ``target`` and optionally ``task``.
    """
    if not isinstance(schema, CsvSchema):
        schema = CsvSchema(tuple(schema["inputs"]), schema["target"], schema.get("task"))
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        wanted = list(schema.inputs) + [schema.target] + ([schema.task] if schema.task else [])
        for col in wanted:
            if col not in header:
                raise ParseError(f"{path}: missing column", row=1, column=col)
        cols = {c: header.index(c) for c in wanted}
        xs, ys, ts = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: expected {len(header)} fields, got {len(row)}", row=lineno)
            xs.append([_number(row[cols[c]], lineno, c) for c in schema.inputs])
            ys.append(_number(row[cols[schema.target]], lineno, schema.target))
            if schema.task:
                ts.append(row[cols[schema.task]].strip())
    if not ys:
        raise ParseError(f"{path}: no data rows")
    x = np.array(xs)
    if x.shape[1] == 1:
        x = x[:, 0]
    task = None
    if schema.task:
        labels = sorted(set(ts))
        task = np.array([labels.index(t) for t in ts])
    return Dataset(x, np.array(ys), task, provenance=f"csv:{path.name}",
                   meta={"schema": {"inputs": list(schema.inputs), "target": schema.target,
                                    "task": schema.task}})


def _number(text, row, column):
    try:
        val = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", row=row, column=column) from None
    if not math.isfinite(val):
        raise NonFiniteEntry(f"non-finite value {text!r}", row=row, column=column)
    return val


def load_fixture(name):
    """Bundled data: ``airline`` or ``challenger``."""
    schemas = {
        "airline": CsvSchema(("month",), "passengers"),
        "challenger": CsvSchema(("n_at_risk", "temperature", "pressure", "order"), "n_distressed"),
    }
    return load_csv(FIXTURE_DIR / f"{name}.csv", schemas[name])


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomFraction:
    p: float = 0.9
    seed: int = 0


@dataclass(frozen=True)
class ExtrapolateTail:
    k: int


@dataclass(frozen=True)
class HoldoutBand:
    lo: float
    hi: float


def split(ds, scheme):
    """Partition ``ds`` into (train, test) according to ``scheme``."""
    n = len(ds)
    if isinstance(scheme, RandomFraction):
        if not 0.0 < scheme.p < 1.0:
            raise ValueError("fraction must lie in (0, 1)")
        rng = np.random.default_rng(scheme.seed)
        perm = rng.permutation(n)
        n_train = int(round(scheme.p * n))
        train, test = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    elif isinstance(scheme, ExtrapolateTail):
        order = np.argsort(_first_column(ds), kind="stable")
        train, test = np.sort(order[: n - scheme.k]), np.sort(order[n - scheme.k:])
    elif isinstance(scheme, HoldoutBand):
        x0 = _first_column(ds)
        inside = (x0 >= scheme.lo) & (x0 <= scheme.hi)
        train, test = np.flatnonzero(~inside), np.flatnonzero(inside)
    else:
        raise TypeError(f"unknown split scheme {scheme!r}")
    if len(train) == 0 or len(test) == 0:
        raise EmptySplit(f"{scheme} leaves {len(train)} train / {len(test)} test points")
    return ds.subset(train), ds.subset(test)


def _first_column(ds):
    return ds.inputs if ds.inputs.ndim == 1 else ds.inputs[:, 0]


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    smse: float
    msll: float
    nll: float
    msll_gaussian: float
    nll_gaussian: float
    n_test: int

    def to_dict(self):
        return {
            "rmse": self.rmse,
            "smse": self.smse,
            "msll": self.msll,
            "nll": self.nll,
            "msll_gaussian": self.msll_gaussian,
            "nll_gaussian": self.nll_gaussian,
            "n_test": self.n_test,
        }

    def scaled(self, y_std):
        """Report in original target units given the standardization scale.

        RMSE scales linearly, SMSE is scale-free, and log losses shift by
        ``log(y_std)`` per point (density change of variables).
        """
        shift = math.log(y_std)
        return replace(
            self,
            rmse=self.rmse * y_std,
            nll=self.nll + self.n_test * shift,
            nll_gaussian=self.nll_gaussian + self.n_test * shift,
        )


def metrics(mixture, y_test, train_stats, strict=True):
    """Point and density metrics for a predictive mixture.

    ``train_stats`` is ``(mean, variance)`` of the training targets, which
    defines the trivial Gaussian for MSLL. With ``strict=False`` a constant
    test set gives ``smse = nan`` instead of raising.
    """
    y = np.asarray(y_test, dtype=float).ravel()
    mean, var = mixture.mean, mixture.variance
    if len(mean) != len(y):
        raise ValueError("prediction and target lengths differ")
    mse = float(np.mean((mean - y) ** 2))
    test_var = float(np.var(y))
    if test_var <= 0.0:
        if strict:
            raise DegenerateVariance("test targets are constant; SMSE undefined")
        smse = float("nan")
    else:
        smse = mse / test_var
    log_mix = mixture.logpdf(y)
    log_gauss = stats.norm.logpdf(y, mean, np.sqrt(var))
    m0, v0 = train_stats
    log_trivial = stats.norm.logpdf(y, m0, np.sqrt(v0))
    return MetricReport(
        rmse=math.sqrt(mse),
        smse=smse,
        msll=float(np.mean(-log_mix + log_trivial)),
        nll=float(-np.sum(log_mix)),
        msll_gaussian=float(np.mean(-log_gauss + log_trivial)),
        nll_gaussian=float(-np.sum(log_gauss)),
        n_test=len(y),
    )


def aggregate(reports):
    """Mean and sample standard deviation (ddof=1) of each metric."""
    out = {}
    keys = [k for k in reports[0].to_dict() if k != "n_test"]
    for k in keys:
        vals = np.array([r.to_dict()[k] for r in reports], dtype=float)
        ok = vals[np.isfinite(vals)]
        out[k] = {
            "mean": float(np.mean(ok)) if len(ok) else float("nan"),
            "std": float(np.std(ok, ddof=1)) if len(ok) > 1 else 0.0,
            "values": vals.tolist(),
        }
    return out
