import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from fkl import datasets
from fkl.errors import DegenerateVariance, EmptySplit, NonFiniteEntry, ParseError
from fkl.predict import PredictiveMixture


def test_sm_generator_size_and_kernel():
    ds = datasets.gen_spectral_mixture(0)
    assert len(ds) == 150
    assert np.all((ds.inputs > -7) & (ds.inputs < 7))
    assert datasets.sm_kernel(0.0) == 1.5
    assert ds.meta["holdout_band"] == pytest.approx((-1.4, 1.4))


def test_sm_generator_covariance_monte_carlo():
    x = np.array([0.0, 0.7, 2.5, 5.0])
    rng = np.random.default_rng(3)
    draws = np.array([datasets.sample_gp(datasets.sm_kernel, x, rng) for _ in range(2000)])
    K = datasets.sm_kernel(np.abs(x[:, None] - x[None, :]))
    emp = np.cov(draws.T)
    # var of a sample covariance entry: (K_ij^2 + K_ii K_jj) / n
    se = np.sqrt((K**2 + np.outer(np.diag(K), np.diag(K))) / 2000)
    assert np.all(np.abs(emp - K) < 3 * se + 1e-3)


def test_sm_density_integrates_to_weights():
    w = np.linspace(0, 3, 30001)
    total = integrate.trapezoid(datasets.sm_density(w), w)
    assert total == pytest.approx(1.5, rel=1e-4)


def test_quasi_periodic_kernel():
    assert datasets.quasi_periodic_kernel(0.0, 3.0, 0.5) == pytest.approx(1.0)
    tau, ls, f = 0.8, 3.0, 0.5
    ratio = datasets.quasi_periodic_kernel(tau + 1 / f, ls, f) / datasets.quasi_periodic_kernel(tau, ls, f)
    assert ratio == pytest.approx(np.exp(-((tau + 1 / f) ** 2 - tau**2) / (2 * ls**2)), rel=1e-10)


def test_quasi_periodic_harmonics_in_dft():
    dt, n = 0.05, 4096
    tau = np.arange(n) * dt
    k = datasets.quasi_periodic_kernel(np.minimum(tau, n * dt - tau), 3.0, 0.5)
    spec = np.abs(np.fft.rfft(k))
    freqs = np.fft.rfftfreq(n, dt)
    for h in (0.5, 1.0):
        i = np.argmin(np.abs(freqs - h))
        assert spec[i] > 10 * spec[np.argmin(np.abs(freqs - (h + 0.25)))]


def test_sinc_values():
    assert datasets.sinc(0.0) == 1.0
    assert datasets.sinc_pattern(0.0) == pytest.approx(1.0, abs=1e-15)
    assert datasets.sinc_pattern(10.0) == pytest.approx(datasets.sinc_pattern(-10.0), abs=1e-15)
    direct = sum(math.sin(math.pi * v) / (math.pi * v) for v in (10.5, 0.5, -9.5))
    assert datasets.sinc_pattern(0.5) == pytest.approx(direct, abs=1e-14)
    ds = datasets.gen_sinc(0)
    assert len(ds) == 120 and np.all(np.isfinite(ds.targets))


def test_sinc_on_integer_grid_has_no_nan():
    ds = datasets.gen_sinc(0, x=np.arange(-15, 16, dtype=float))
    assert np.all(np.isfinite(ds.targets))


def test_csv_roundtrip(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,y\n1,2,3\n4,5,6\n7,8,9\n")
    ds = datasets.load_csv(p, {"inputs": ["a", "b"], "target": "y"})
    assert len(ds) == 3 and ds.inputs.shape == (3, 2)
    assert ds.targets.tolist() == [3.0, 6.0, 9.0]


def test_csv_nan_target(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y\n1,2\n2,NaN\n")
    with pytest.raises(NonFiniteEntry) as err:
        datasets.load_csv(p, datasets.CsvSchema(("x",), "y"))
    assert err.value.row == 3 and err.value.column == "y"


def test_csv_bad_number_and_missing_column(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y\n1,abc\n")
    with pytest.raises(ParseError) as err:
        datasets.load_csv(p, datasets.CsvSchema(("x",), "y"))
    assert err.value.row == 2
    with pytest.raises(ParseError):
        datasets.load_csv(p, datasets.CsvSchema(("z",), "y"))


def test_csv_ragged_row(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y\n1,2\n3\n")
    with pytest.raises(ParseError):
        datasets.load_csv(p, datasets.CsvSchema(("x",), "y"))


def test_csv_task_column(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y,t\n1,2,b\n2,3,a\n3,4,b\n")
    ds = datasets.load_csv(p, datasets.CsvSchema(("x",), "y", "t"))
    assert ds.task.tolist() == [1, 0, 1]
    assert [len(y) for _, y in ds.tasks()] == [1, 2]


def test_airline_fixture_split():
    ds = datasets.load_fixture("airline")
    assert len(ds) == 144
    train, test = datasets.split(ds, datasets.ExtrapolateTail(48))
    assert (len(train), len(test)) == (96, 48)
    assert train.inputs.max() < test.inputs.min()
    assert ds.targets[0] == 112 and ds.targets[-1] == 432


def test_challenger_fixture():
    ds = datasets.load_fixture("challenger")
    assert len(ds) == 23 and ds.dims == 4


def test_random_fraction_split():
    ds = datasets.gen_rbf_gp(0, n=100)
    train, test = datasets.split(ds, datasets.RandomFraction(0.9, 1))
    assert (len(train), len(test)) == (90, 10)
    assert set(train.inputs).isdisjoint(test.inputs)
    a, _ = datasets.split(ds, datasets.RandomFraction(0.9, 1))
    assert np.array_equal(a.inputs, train.inputs)


def test_empty_holdout():
    ds = datasets.gen_rbf_gp(0, n=20)
    with pytest.raises(EmptySplit):
        datasets.split(ds, datasets.HoldoutBand(100.0, 200.0))


@given(st.floats(-4, 4), st.floats(0.1, 3))
def test_holdout_band_partition(lo, width):
    ds = datasets.gen_rbf_gp(0, n=50)
    inside = (ds.inputs >= lo) & (ds.inputs <= lo + width)
    if inside.all() or not inside.any():
        return
    train, test = datasets.split(ds, datasets.HoldoutBand(lo, lo + width))
    assert len(train) + len(test) == 50
    assert np.all((test.inputs >= lo) & (test.inputs <= lo + width))


def test_standardize_roundtrip():
    ds = datasets.gen_rbf_product_gp(0, n=30)
    s = ds.standardize()
    np.testing.assert_allclose(s.inputs.mean(0), 0, atol=1e-12)
    np.testing.assert_allclose(s.targets.std(), 1, atol=1e-12)
    back = s.destandardize()
    np.testing.assert_allclose(back.inputs, ds.inputs, atol=1e-12)
    np.testing.assert_allclose(back.targets, ds.targets, atol=1e-12)


def test_standardize_constant_column():
    ds = datasets.Dataset(np.column_stack([np.ones(5), np.arange(5.0)]), np.arange(5.0))
    s = ds.standardize()
    assert np.all(np.isfinite(s.inputs)) and np.all(s.inputs[:, 0] == 0)


def mix1(m, v):
    return PredictiveMixture(np.atleast_2d(m), np.atleast_2d(v), np.zeros(np.size(m)))


def test_metrics_perfect_prediction():
    y = np.array([1.0, 2.0, 4.0])
    r = datasets.metrics(mix1(y, np.full(3, 0.1)), y, (0.0, 1.0))
    assert r.rmse == 0 and r.smse == 0


def test_metrics_trivial_predictor_msll_zero():
    y = np.array([0.3, -1.0, 2.0])
    r = datasets.metrics(mix1(np.full(3, 0.5), np.full(3, 2.0)), y, (0.5, 2.0))
    assert r.msll == pytest.approx(0.0, abs=1e-14)
    assert r.msll_gaussian == pytest.approx(0.0, abs=1e-14)


def test_metrics_two_point_closed_form():
    y = np.array([1.0, -0.5])
    m = np.array([0.8, 0.0])
    v = np.array([0.25, 1.0])
    r = datasets.metrics(mix1(m, v), y, (0.1, 2.0))
    lp = -0.5 * np.log(2 * np.pi * v) - 0.5 * (y - m) ** 2 / v
    lt = -0.5 * np.log(2 * np.pi * 2.0) - 0.5 * (y - 0.1) ** 2 / 2.0
    assert r.nll == pytest.approx(-lp.sum(), abs=1e-12)
    assert r.msll == pytest.approx(np.mean(-lp + lt), abs=1e-12)
    assert r.rmse == pytest.approx(np.sqrt(np.mean((y - m) ** 2)), abs=1e-15)
    assert r.smse == pytest.approx(np.mean((y - m) ** 2) / np.var(y), abs=1e-12)


def test_metrics_constant_targets():
    y = np.ones(3)
    with pytest.raises(DegenerateVariance):
        datasets.metrics(mix1(y, np.ones(3)), y, (0, 1))
    assert math.isnan(datasets.metrics(mix1(y, np.ones(3)), y, (0, 1), strict=False).smse)


def test_aggregate_sample_std():
    reps = [datasets.MetricReport(v, v, v, v, v, v, 5) for v in (1.0, 2.0, 3.0)]
    agg = datasets.aggregate(reps)
    assert agg["rmse"]["mean"] == 2.0 and agg["rmse"]["std"] == 1.0


def test_scaled_report():
    r = datasets.MetricReport(0.5, 0.2, -0.1, 3.0, -0.1, 3.0, 4).scaled(10.0)
    assert r.rmse == 5.0 and r.smse == 0.2
    assert r.nll == pytest.approx(3.0 + 4 * np.log(10.0))


@given(arrays(float, 6, elements=st.floats(-3, 3)), arrays(float, 6, elements=st.floats(0.05, 3)))
def test_msll_mixture_equals_gaussian_for_one_component(m, v):
    y = np.linspace(-1, 1, 6)
    r = datasets.metrics(mix1(m, v), y, (0.0, 1.0))
    assert r.msll == pytest.approx(r.msll_gaussian, abs=1e-9)
