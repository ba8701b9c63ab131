"""
    Module for predicate-style assertions on simulation output. Builders collect checks by chaining and
    only evaluate when converted to a bool, so they read naturally inside ``assert`` and ``if``.

    All verify types are re-exported at ``hpi``.

    **Example**:
    ``assert hpi.verify().trend(fractions).increasing().strictly()``
"""

import math
import typing

import numpy as np

from .mc_engine import MeasuredProfileRow, SimulationResult


class _Undef:

    _singleton = None

    def __new__(cls):
        if cls._singleton is None:
            cls._singleton = super().__new__(cls)
        return cls._singleton

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self)


_undefined = _Undef()


class _Builder:
    # tracks whether the verification was ever evaluated

    def __init__(self) -> None:
        self._used = False

    def __del__(self) -> None:
        if not self._used:
            import warnings
            warnings.warn(f"{type(self).__name__} dropped without being used, did you forget an `assert`?",
                          RuntimeWarning)

    def __bool__(self) -> bool:
        self._used = True
        return self._check()

    def _check(self) -> bool:
        raise NotImplementedError


class VerifyProfile(_Builder):
    """
        Builder for profile verifications over measured or predicted rows. Rows need ``alpha`` and
        ``magnetization``; :meth:`close_to_prediction` also needs ``predicted``.

        **Example**:
        ``assert hpi.verify().profile(rows).antisymmetric(0.05).bounded(m_star)``
    """

    def __init__(self, rows: typing.Sequence[typing.Any]) -> None:
        super().__init__()
        self._rows = list(rows)
        self._antisymmetric = _undefined
        self._bound = _undefined
        self._rms = _undefined

    def _check(self) -> bool:
        alpha = np.array([r.alpha for r in self._rows], dtype=np.float64)
        values = np.array([r.magnetization for r in self._rows], dtype=np.float64)

        if self._antisymmetric is not _undefined:
            lookup = {round(a, 9): v for a, v in zip(alpha, values)}
            for a, v in zip(alpha, values):
                mirror = lookup.get(round(-a, 9))
                if mirror is not None and abs(v + mirror) > self._antisymmetric:
                    return False
        if self._bound is not _undefined:
            if np.any(np.abs(values) > self._bound + 1e-12):
                return False
        if self._rms is not _undefined:
            predicted = np.array([r.predicted for r in self._rows], dtype=np.float64)
            if math.sqrt(np.mean((predicted - values) ** 2)) > self._rms:
                return False
        return True

    def antisymmetric(self, tol: float = 1e-12) -> 'VerifyProfile':
        """
            Check that rows at ``alpha`` and ``-alpha`` have opposite magnetization

        :param tol: Largest accepted ``|m(alpha) + m(-alpha)|``
        :return: Self for chaining
        """
        self._antisymmetric = tol
        return self

    def bounded(self, m_star: float) -> 'VerifyProfile':
        """
            Check that ``|magnetization| <= m_star`` on every row

        :param m_star: Bound
        :return: Self for chaining
        """
        self._bound = m_star
        return self

    def close_to_prediction(self, rms: float) -> 'VerifyProfile':
        """
            Check the RMS deviation between measured and predicted magnetization

        :param rms: Largest accepted RMS deviation
        :return: Self for chaining
        """
        self._rms = rms
        return self


class VerifyField(_Builder):
    """
        Builder for checks on an accumulated magnetization field

        **Example**:
        ``assert hpi.verify().field(result).antisymmetric_in_t()``
    """

    def __init__(self, result: SimulationResult) -> None:
        super().__init__()
        self._result = result
        self._sigmas = _undefined
        self._fraction = 0.99

    def _check(self) -> bool:
        if self._sigmas is _undefined:
            return True
        mean, err = self._result.field.mean(), self._result.field.stderr()
        # row i mirrors row 2M - 1 - i
        total = mean + mean[::-1, :]
        spread = np.sqrt(err ** 2 + err[::-1, :] ** 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = np.where(spread > 0, np.abs(total) <= self._sigmas * spread, total == 0)
        return bool(ok.mean() >= self._fraction)

    def antisymmetric_in_t(self, sigmas: float = 3.0, fraction: float = 0.99) -> 'VerifyField':
        """
            Check ``<sigma(s, t)> = -<sigma(s, -t)>`` within ``sigmas`` combined standard errors on at least
            ``fraction`` of the cells

        :param sigmas: Width of the acceptance band in standard errors
        :param fraction: Fraction of cells that must pass
        :return: Self for chaining
        """
        self._sigmas = sigmas
        self._fraction = fraction
        return self


class VerifyTrend(_Builder):
    """
        Builder for monotone trends in a sequence of measurements

        **Example**:
        ``assert hpi.verify().trend([0.61, 0.72, 0.80]).increasing().strictly()``
    """

    def __init__(self, values: typing.Sequence[float]) -> None:
        super().__init__()
        self._values = [float(v) for v in values]
        self._direction = _undefined
        self._strict = False
        self._start = 0

    def _check(self) -> bool:
        if self._direction is _undefined:
            raise ValueError("VerifyTrend needs a direction, call increasing() or decreasing()")
        tail = self._values[self._start:]
        steps = [b - a for a, b in zip(tail[:-1], tail[1:])]
        sign = 1.0 if self._direction == "increasing" else -1.0
        if self._strict:
            return all(sign * step > 0 for step in steps)
        return all(sign * step >= 0 for step in steps)

    def increasing(self) -> 'VerifyTrend':
        if self._direction is not _undefined:
            raise ValueError("Verify increasing conflicts with an earlier direction")
        self._direction = "increasing"
        return self

    def decreasing(self) -> 'VerifyTrend':
        if self._direction is not _undefined:
            raise ValueError("Verify decreasing conflicts with an earlier direction")
        self._direction = "decreasing"
        return self

    def strictly(self) -> 'VerifyTrend':
        """
            Require every step to be strict

        :return: Self for chaining
        """
        self._strict = True
        return self

    def beyond(self, index: int) -> 'VerifyTrend':
        """
            Only check the sequence from ``index`` on

        :param index: First index included
        :return: Self for chaining
        """
        self._start = index
        return self


class Verify:
    """
        Base for all kinds of verification builders. Used as an
        intermediate step for the return of verify().
    """

    def profile(self, rows: typing.Sequence[MeasuredProfileRow]) -> VerifyProfile:
        return VerifyProfile(rows)

    def field(self, result: SimulationResult) -> VerifyField:
        return VerifyField(result)

    def trend(self, values: typing.Sequence[float]) -> VerifyTrend:
        return VerifyTrend(values)


def verify() -> Verify:
    """
        Verification entry point. Call to begin building a verification.

        **Warning**: All verification builders do nothing until asserted, used in an if statement,
        or otherwise converted into a bool. They will raise RuntimeWarning if this isn't done to help
        catch possible errors.

    :return: Verification builder
    """
    return Verify()
