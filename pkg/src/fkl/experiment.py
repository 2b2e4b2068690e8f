"""Experiment orchestration: dataset, split, fit, predict, score, write.

A run directory holds five documents plus a metadata file:

- ``checkpoint.json``: raw hyperparameters, grids, latent samples, training
  data, seed and the config echo; enough to rebuild the fitted model.
- ``metrics.json``: FKL and baseline metrics; byte-identical across reruns.
- ``prediction.tsv``, ``spectrum.tsv`` and ``kernel.tsv``: plot-ready
  columnar text.
- ``metadata.json``: timings and library versions (not deterministic).
"""

import json
import logging
import math
import os
import platform
import tempfile
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, datasets, predict, trainer
from .baselines import BaselineGP
from .errors import ConfigError
from .inference import DataTerm
from .latent_model import HyperParams
from .spectral import FrequencyGrid, kernel_from_latent

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "FKL_OUTPUT_ROOT"

_GENERATORS = {
    "spectral_mixture": datasets.gen_spectral_mixture,
    "quasi_periodic": datasets.gen_quasi_periodic,
    "sinc": datasets.gen_sinc,
    "rbf_gp": datasets.gen_rbf_gp,
    "rbf_product_gp": datasets.gen_rbf_product_gp,
    "multi_task_sm": datasets.gen_multi_task_sm,
}


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------


def split_seed(config, split_index):
    """Seed shared by data generation, splitting, FKL and baselines."""
    return int(config["seed"]) + int(split_index)


def load_dataset(spec, seed):
    if "generator" in spec:
        fn = _GENERATORS[spec["generator"]]
        try:
            return fn(seed, **spec.get("params", {}))
        except TypeError as exc:
            raise ConfigError(f"dataset/params: {exc}") from None
    if "fixture" in spec:
        return datasets.load_fixture(spec["fixture"])
    return datasets.load_csv(spec["csv"], spec["schema"])


def make_scheme(split_cfg, ds, seed):
    name = split_cfg["scheme"]
    if name == "random_fraction":
        return datasets.RandomFraction(split_cfg["p"], seed)
    if name == "extrapolate_tail":
        return datasets.ExtrapolateTail(split_cfg["k"])
    if name == "holdout_band":
        return datasets.HoldoutBand(split_cfg["lo"], split_cfg["hi"])
    band = ds.meta.get("holdout_band")
    if band is None:
        raise ConfigError("split: dataset has no default holdout band; choose another scheme")
    return datasets.HoldoutBand(*band)


def _standardize_flag(config):
    flag = config.get("standardize")
    if flag is None:
        # generated data keeps its units so recovered frequencies stay comparable
        return "generator" not in config["dataset"]
    return bool(flag)


def train_config(config, seed, dims, multi_task):
    opts = dict(config["train"])
    opts["seed"] = seed
    mode = opts.get("mode", "single")
    if multi_task:
        mode = "multi_task"
    elif dims > 1 and not mode.startswith("multi_input"):
        mode = "multi_input_shared"
    opts["mode"] = mode
    return trainer.TrainConfig(**opts)


def fit_model(train, cfg):
    if cfg.mode == "multi_task":
        return trainer.fit_multi_task(train.tasks(), cfg)
    if cfg.mode.startswith("multi_input"):
        return trainer.fit_multi_input(train.inputs, train.targets, cfg)
    return trainer.fit(train.inputs, train.targets, cfg)


def _task_ids(ds):
    return [0] if ds.task is None else sorted(int(t) for t in np.unique(ds.task))


def _task_rows(ds, t):
    return np.arange(len(ds)) if ds.task is None else np.flatnonzero(ds.task == t)


def predict_dataset(predict_fn, test, train_tasks):
    """Pool per-task mixtures into one mixture over all test rows.

    ``predict_fn(task_index, x)`` returns a PredictiveMixture. Components are
    aligned by index; tasks with fewer retained components are padded by
    repeating their last component so the pooled logpdf stays per-task exact.
    """
    parts = []
    for t in _task_ids(test):
        rows = _task_rows(test, t)
        parts.append((rows, predict_fn(train_tasks.index(t), test.inputs[rows])))
    J = max(m.j_effective for _, m in parts)
    means = np.empty((J, len(test)))
    variances = np.empty((J, len(test)))
    dropped = 0
    for rows, m in parts:
        reps = np.resize(np.arange(m.j_effective), J) if m.j_effective < J else np.arange(J)
        means[:, rows] = m.means[reps]
        variances[:, rows] = m.variances[reps]
        dropped += m.n_dropped
    first = parts[0][1]
    return predict.PredictiveMixture(means, variances, test.inputs, first.noise_var,
                                     first.include_noise, dropped)


# ---------------------------------------------------------------------------
# documents
# ---------------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(doc):
    return json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    return repr(float(v))


def _table(header, rows, preamble):
    lines = [f"# {k}={v}" for k, v in preamble]
    lines.append("\t".join(header))
    lines += ["\t".join(_fmt(v) if not isinstance(v, (int, np.integer)) else str(int(v)) for v in row)
              for row in rows]
    return "\n".join(lines) + "\n"


def _preamble(ckpt):
    return [("seed", ckpt["seed"]), ("config", json.dumps(ckpt["config"], sort_keys=True))]


def checkpoint_doc(model, config, seed, train):
    return {
        "format": "fkl-checkpoint-1",
        "seed": seed,
        "config": config,
        "train_config": model.config.to_dict(),
        "mode": model.mode,
        "hyperparams": model.hp.to_dict(),
        "grids": [g.to_dict() for g in model.grids],
        "latent_samples": [s.tolist() for s in model.latent_samples],
        "train": [{"x": t.x.tolist(), "y": t.y.tolist()} for t in model.terms],
        "task_ids": _task_ids(train),
        "diagnostics": {
            "initial_loss": model.diagnostics["initial_loss"],
            "final_loss": model.diagnostics["final_loss"],
            "loss_trace": model.diagnostics["loss_trace"],
        },
    }


def model_from_checkpoint(ckpt):
    """Rebuild a :class:`trainer.FittedModel` from a checkpoint document."""
    grids = [FrequencyGrid.from_dict(g) for g in ckpt["grids"]]
    mode = ckpt["mode"]
    terms = []
    for i, t in enumerate(ckpt["train"]):
        x = np.asarray(t["x"], dtype=float)
        tgrids = [grids[i]] if mode == "multi_task" else grids
        terms.append(DataTerm(x, t["y"], tgrids))
    cfg = trainer.TrainConfig(**ckpt["train_config"])
    samples = [np.asarray(s, dtype=float) for s in ckpt["latent_samples"]]
    return trainer.FittedModel(HyperParams.from_dict(ckpt["hyperparams"]), samples, grids,
                               terms, mode, cfg, dict(ckpt.get("diagnostics", {})))


def spectrum_table(ckpt, model, width_std=2.0):
    J = model.latent_samples[0].shape[0]
    header = ["slot", "omega", "mean", "lower", "upper"] + [f"s{j}" for j in range(J)]
    rows = []
    for s, (g, grid) in enumerate(zip(model.latent_samples, model.grids)):
        S = np.exp(np.clip(g, -30.0, 30.0))
        mean, sd = S.mean(axis=0), S.std(axis=0)
        for i, om in enumerate(grid.omegas):
            rows.append([s, om, mean[i], max(mean[i] - width_std * sd[i], 0.0),
                         mean[i] + width_std * sd[i], *S[:, i]])
    return _table(header, rows, _preamble(ckpt))


def kernel_table(ckpt, model, n_points=200, width_std=2.0):
    """Posterior kernel samples on tau in [0, 2 tau_max] for each slot."""
    J = model.latent_samples[0].shape[0]
    header = ["slot", "tau", "mean", "lower", "upper"] + [f"k{j}" for j in range(J)]
    rows = []
    for s, (g, grid) in enumerate(zip(model.latent_samples, model.grids)):
        tau_max = grid.period / 8.0
        tau = np.linspace(0.0, 2.0 * tau_max, n_points)
        K = np.array([kernel_from_latent(gj, grid)(tau) for gj in g])
        mean, sd = K.mean(axis=0), K.std(axis=0)
        for i, t in enumerate(tau):
            rows.append([s, t, mean[i], mean[i] - width_std * sd[i], mean[i] + width_std * sd[i], *K[:, i]])
    return _table(header, rows, _preamble(ckpt))


def prediction_table(ckpt, mixture, test, width_std=2.0):
    x = test.inputs.reshape(len(test), -1)
    task = np.zeros(len(test), dtype=int) if test.task is None else test.task
    lo, hi = mixture.band(width_std)
    J = mixture.j_effective
    header = (["task"] + [f"x{d}" for d in range(x.shape[1])] + ["y", "mean", "variance", "lower", "upper"]
              + [f"m{j}" for j in range(J)] + [f"v{j}" for j in range(J)])
    rows = []
    mean, var = mixture.mean, mixture.variance
    for i in range(len(test)):
        rows.append([int(task[i]), *x[i], test.targets[i], mean[i], var[i], lo[i], hi[i],
                     *mixture.means[:, i], *mixture.variances[:, i]])
    pre = _preamble(ckpt) + [("j_effective", J), ("n_dropped", mixture.n_dropped)]
    return _table(header, rows, pre)


def curve_table(ckpt, model, xs, width_std=2.0):
    """Predictive mean and band on a dense 1-d input grid, per task."""
    include_noise = ckpt["config"]["predict"]["include_noise"]
    rows = []
    for i, t in enumerate(ckpt["task_ids"]):
        mix = predict.predict(model, xs, task=i, include_noise=include_noise)
        lo, hi = mix.band(width_std)
        rows += [[t, xs[k], mix.mean[k], lo[k], hi[k]] for k in range(len(xs))]
    return _table(["task", "x0", "mean", "lower", "upper"], rows, _preamble(ckpt))


def _curve_inputs(config, train_x, test_x):
    n = config["output"]["curve_points"]
    if n < 2 or np.ndim(train_x) > 1 and np.shape(train_x)[1] > 1:
        return None
    both = np.concatenate([np.ravel(train_x), np.ravel(test_x)])
    return np.linspace(both.min(), both.max(), n)


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------


def output_root(config):
    return Path(os.environ.get(OUTPUT_ROOT_ENV) or config["output"]["dir"])


def _baseline_reports(config, seed, train, test, stats):
    opts = config["baseline_options"]
    tc = config["train"]
    budget = opts["max_iter"] or max(1, tc.get("rounds", 5) * tc.get("n_optim", 10))
    train_tasks = _task_ids(train)
    out = {}
    for kind in config["baselines"]:
        models = {}
        for t in train_tasks:
            rows = _task_rows(train, t)
            models[t] = BaselineGP(kind, q=opts["sm_components"], init=opts["sm_init"]).fit(
                train.inputs[rows], train.targets[rows], max_iter=budget, seed=seed,
                restarts=opts["restarts"])
        mix = predict_dataset(
            lambda i, x: models[train_tasks[i]].predict(x, config["predict"]["include_noise"]),
            test, train_tasks)
        out[kind] = datasets.metrics(mix, test.targets, stats, strict=False).to_dict()
    return out


def execute(config, split_index=0):
    """Run one split in memory; returns a dict of documents and objects."""
    seed = split_seed(config, split_index)
    raw = load_dataset(config["dataset"], seed)
    scheme = make_scheme(config["split"], raw, seed)
    train, test = datasets.split(raw, scheme)
    if _standardize_flag(config):
        ref = train
        train, test = train.standardize(ref), test.standardize(ref)
    multi_task = train.task is not None
    if multi_task and set(_task_ids(test)) - set(_task_ids(train)):
        raise ConfigError("split: a test task has no training points")
    cfg = train_config(config, seed, train.dims, multi_task)
    t0 = time.perf_counter()
    model = fit_model(train, cfg)
    fit_seconds = time.perf_counter() - t0
    include_noise = config["predict"]["include_noise"]
    train_tasks = _task_ids(train)
    mixture = predict_dataset(
        lambda i, x: predict.predict(model, x, task=i, include_noise=include_noise),
        test, train_tasks)
    stats = (float(np.mean(train.targets)), float(np.var(train.targets)))
    report = datasets.metrics(mixture, test.targets, stats, strict=False)
    baselines = _baseline_reports(config, seed, train, test, stats)
    metrics_doc = {
        "name": config["name"],
        "seed": seed,
        "split_index": split_index,
        "mode": model.mode,
        "n_train": len(train),
        "n_test": len(test),
        "j_effective": mixture.j_effective,
        "standardized": train.is_standardized,
        "y_std": train.y_std,
        "fkl": report.to_dict(),
        "baselines": baselines,
        "config": config,
    }
    ckpt = checkpoint_doc(model, config, seed, train)
    return {
        "model": model,
        "mixture": mixture,
        "train": train,
        "test": test,
        "metrics": metrics_doc,
        "checkpoint": ckpt,
        "fit_seconds": fit_seconds,
    }


def write_run(result, run_dir, config):
    run_dir = Path(run_dir)
    ckpt, model = result["checkpoint"], result["model"]
    width_std = config["predict"]["width_std"]
    docs = {
        "checkpoint.json": dumps(ckpt),
        "metrics.json": dumps(result["metrics"]),
        "prediction.tsv": prediction_table(ckpt, result["mixture"], result["test"], width_std),
        "spectrum.tsv": spectrum_table(ckpt, model, width_std),
        "kernel.tsv": kernel_table(ckpt, model, config["output"]["kernel_points"], width_std),
        "metadata.json": dumps({
            "package_version": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
            "fit_seconds": result["fit_seconds"],
            "seed": ckpt["seed"],
            "config": config,
            "std_convention": "sample standard deviation (ddof=1) across splits",
        }),
    }
    xs = _curve_inputs(config, result["train"].inputs, result["test"].inputs)
    if xs is not None:
        docs["curve.tsv"] = curve_table(ckpt, model, xs, width_std)
    for name, text in docs.items():
        write_atomic(run_dir / name, text)
    return {name: run_dir / name for name in docs}


def run_experiment(config, split_index=0, run_dir=None):
    """Run one split and write its artifacts; returns ``(run_dir, result)``."""
    result = execute(config, split_index)
    if run_dir is None:
        run_dir = output_root(config) / config["name"]
    write_run(result, run_dir, config)
    return Path(run_dir), result


def aggregate_metrics(metric_docs):
    """Mean and sample std (ddof=1) per metric, for FKL and each baseline."""
    def reports(pick):
        return [datasets.MetricReport(**pick(d)) for d in metric_docs]

    out = {"fkl": datasets.aggregate(reports(lambda d: d["fkl"]))}
    for kind in metric_docs[0]["baselines"]:
        out[kind] = datasets.aggregate(reports(lambda d, k=kind: d["baselines"][k]))
    return out


def run_splits(config, n_splits=10, root=None):
    """Independent runs with seeds ``seed + k``; writes a summary document."""
    if n_splits < 1:
        raise ConfigError("n_splits must be >= 1")
    root = Path(root) if root is not None else output_root(config) / config["name"]
    docs = []
    for k in range(n_splits):
        _, result = run_experiment(config, k, root / f"split_{k:02d}")
        docs.append(result["metrics"])
    summary = {
        "name": config["name"],
        "n_splits": n_splits,
        "std_convention": "ddof=1",
        "aggregate": aggregate_metrics(docs),
        "config": config,
    }
    write_atomic(root / "summary.json", dumps(summary))
    return summary


def emit_plot_data(run_dir):
    """Rewrite the spectrum, kernel and prediction documents from a checkpoint."""
    run_dir = Path(run_dir)
    with open(run_dir / "checkpoint.json") as fh:
        ckpt = json.load(fh)
    config = ckpt["config"]
    model = model_from_checkpoint(ckpt)
    width_std = config["predict"]["width_std"]
    out = {
        "spectrum.tsv": spectrum_table(ckpt, model, width_std),
        "kernel.tsv": kernel_table(ckpt, model, config["output"]["kernel_points"], width_std),
    }
    pred = run_dir / "prediction.tsv"
    if pred.exists():
        # refresh from the checkpoint by re-predicting at the stored test inputs
        test = _read_test(pred)
        train_tasks = ckpt["task_ids"]
        mixture = predict_dataset(
            lambda i, x: predict.predict(model, x, task=i, include_noise=config["predict"]["include_noise"]),
            test, train_tasks)
        out["prediction.tsv"] = prediction_table(ckpt, mixture, test, width_std)
        train_x = np.concatenate([np.ravel(term.x) for term in model.terms])
        xs = _curve_inputs(config, train_x if model.terms[0].dims == 1 else model.terms[0].x, test.inputs)
        if xs is not None:
            out["curve.tsv"] = curve_table(ckpt, model, xs, width_std)
    for name, text in out.items():
        write_atomic(run_dir / name, text)
    return {name: run_dir / name for name in out}


def _read_test(path):
    rows, header = [], None
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if header is None:
                header = parts
                continue
            rows.append(parts)
    xcols = [i for i, h in enumerate(header) if h.startswith("x")]
    arr = np.array(rows, dtype=float)
    x = arr[:, xcols]
    x = x[:, 0] if x.shape[1] == 1 else x
    task = arr[:, header.index("task")].astype(int)
    task = None if np.all(task == 0) else task
    return datasets.Dataset(x, arr[:, header.index("y")], task)
