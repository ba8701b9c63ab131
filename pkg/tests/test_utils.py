import math
import numpy as np
import pytest
import hpi
from hpi import utils


def test_batch_means():
    series = np.repeat(np.arange(32, dtype=np.float64), 4)
    mean, err = utils.batch_means(series)
    assert mean == pytest.approx(15.5)
    assert err == pytest.approx(np.arange(32).std(ddof=1) / math.sqrt(32))
    with pytest.raises(hpi.StatisticsError):
        utils.batch_means(np.ones(10))


def test_jackknife_mean():
    samples = np.array([1.0, 2.0, 4.0, 7.0])
    estimate, error = utils.jackknife(samples, np.mean)
    assert estimate == pytest.approx(3.5)
    # for the mean the jackknife error is the standard error
    assert error == pytest.approx(samples.std(ddof=1) / 2)
    with pytest.raises(hpi.StatisticsError):
        utils.jackknife(samples[:1], np.mean)


def test_autocorr_white_noise():
    rng = np.random.default_rng(1)
    assert utils.integrated_autocorr_time(rng.normal(size=20_000)) == pytest.approx(0.5, abs=0.1)
    assert utils.integrated_autocorr_time(np.ones(100)) == 0.5


def test_autocorr_ar1():
    rng = np.random.default_rng(2)
    rho = 0.8
    x = np.empty(50_000)
    x[0] = 0.0
    noise = rng.normal(size=x.size)
    for i in range(1, x.size):
        x[i] = rho * x[i - 1] + noise[i]
    expected = 0.5 * (1 + rho) / (1 - rho)
    assert utils.integrated_autocorr_time(x) == pytest.approx(expected, rel=0.15)


def test_autocorr_short():
    with pytest.raises(hpi.StatisticsError):
        utils.integrated_autocorr_time([1.0, 2.0])


def test_exponential_rate():
    xs = np.arange(1, 10)
    assert utils.exponential_rate(xs, np.exp(2.0 - 0.3 * xs)) == pytest.approx(0.3)
    assert utils.exponential_rate([1, 2, 3], [0.5, 0.25, 0.0]) == pytest.approx(math.log(2))
    with pytest.raises(hpi.NumericalError):
        utils.exponential_rate([1, 2], [0.5, 0.0])
    with pytest.raises(hpi.NumericalError):
        utils.exponential_rate([1, 1], [0.5, 0.2])


def test_monotone_from():
    assert utils.monotone_from([5, 3, 4, 2, 1]) == 2
    assert utils.monotone_from([3, 2, 1]) == 0
    assert utils.monotone_from([1, 2, 1, 3], decreasing=False) == 2
    assert utils.monotone_from([1]) is None
