"""
    Utility functions that don't have a place anywhere else. If it doesn't sound like it fits anywhere else,
    and it's small, it probably goes here. Mostly the error-bar machinery shared by the engine and the
    contour analytics.
"""

import math
import typing

import numpy as np
from scipy import stats

from .errors import NumericalError, StatisticsError


def batch_means(series: typing.Sequence[float], n_batches: int = 32) -> typing.Tuple[float, float]:
    """
        Mean and standard error of a correlated series by non-overlapping batch means

    :param series: Time series, one value per sample
    :param n_batches: Number of batches, the series is truncated to a multiple of this
    :return: (mean, standard error)
    """
    data = np.asarray(series, dtype=np.float64)
    if data.size < n_batches:
        raise StatisticsError(f"batch means needs at least {n_batches} samples, got {data.size}")
    size = data.size // n_batches
    batches = data[:size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(batches.mean()), float(batches.std(ddof=1) / math.sqrt(n_batches))


def jackknife(samples: np.ndarray,
              statistic: typing.Callable[[np.ndarray], np.ndarray]) -> typing.Tuple[np.ndarray, np.ndarray]:
    """
        Leave-one-out jackknife estimate of a statistic and its standard error. ``statistic`` reduces along
        axis 0 and may return an array.

    :param samples: Array with samples along axis 0
    :param statistic: Function mapping an array of samples to the estimate
    :return: (estimate on the full sample, jackknife standard error)
    """
    n = samples.shape[0]
    if n < 2:
        raise StatisticsError("jackknife needs at least two samples")
    full = np.asarray(statistic(samples), dtype=np.float64)
    leave_out = []
    for i in range(n):
        leave_out.append(statistic(np.delete(samples, i, axis=0)))
    leave_out = np.asarray(leave_out, dtype=np.float64)
    error = np.sqrt((n - 1) / n * ((leave_out - leave_out.mean(axis=0)) ** 2).sum(axis=0))
    return full, error


def integrated_autocorr_time(series: typing.Sequence[float], window_factor: float = 5.0) -> float:
    """
        Integrated autocorrelation time with Sokal's self-consistent window. Returns 0.5 for white noise and
        for constant series.

    :param series: Time series
    :param window_factor: Window is the first W with W >= window_factor * tau(W)
    :return: tau_int in units of the sampling interval
    """
    data = np.asarray(series, dtype=np.float64)
    n = data.size
    if n < 4:
        raise StatisticsError("autocorrelation time needs at least four samples")
    centred = data - data.mean()
    var = float(centred @ centred)
    if var == 0.0:
        return 0.5
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centred, size)
    acf = np.fft.irfft(spectrum * np.conj(spectrum), size)[:n] / var
    tau = 0.5
    for window in range(1, n):
        tau += acf[window]
        if window >= window_factor * tau:
            break
    return float(max(tau, 0.5))


def exponential_rate(xs: typing.Sequence[float], probabilities: typing.Sequence[float]) -> float:
    """
        Fit log P = c - rate * x by least squares over the strictly positive probabilities

    :param xs: Abscissae
    :param probabilities: Tail probabilities, zeros are dropped
    :return: Fitted decay rate
    """
    x = np.asarray(xs, dtype=np.float64)
    p = np.asarray(probabilities, dtype=np.float64)
    keep = p > 0
    if keep.sum() < 2 or np.ptp(x[keep]) == 0:
        raise NumericalError("exponential fit needs two distinct abscissae with positive probability",
                             {"points": int(keep.sum())})
    fit = stats.linregress(x[keep], np.log(p[keep]))
    return float(-fit.slope)


def monotone_from(values: typing.Sequence[float], decreasing: bool = True) -> typing.Optional[int]:
    """
        First index beyond which the sequence is monotone

    :param values: Sequence to inspect
    :param decreasing: Look for a non-increasing tail rather than a non-decreasing one
    :return: Index where the monotone tail starts, or None for sequences shorter than two
    """
    if len(values) < 2:
        return None
    start = len(values) - 1
    for i in range(len(values) - 1, 0, -1):
        step = values[i] - values[i - 1]
        if (decreasing and step > 0) or (not decreasing and step < 0):
            break
        start = i - 1
    return start
