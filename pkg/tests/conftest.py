import math
import pytest
import hpi
from hpi import callbacks, runner


@pytest.fixture
def couplings():
    return hpi.Couplings.create(0.6, 0.6)


@pytest.fixture
def anisotropic():
    return hpi.Couplings.create(0.5, 0.8)


@pytest.fixture
def reference_mode(monkeypatch):
    monkeypatch.setenv(runner.REFERENCE_ENV, "1")
    yield
    monkeypatch.delenv(runner.REFERENCE_ENV, raising=False)


@pytest.fixture
def small_params(couplings):
    """ A strip small enough for a few hundred sweeps per test. """
    return hpi.SimParams(couplings, 0.0, N=8, M=16, sweeps=352, thermalization=32, stride=10, seed=7)


@pytest.fixture
def tilted_params(couplings):
    theta = math.pi / 8
    return hpi.SimParams(couplings, theta, N=8, M=16, sweeps=352, thermalization=32, stride=10, seed=11)


@pytest.fixture(autouse=True)
def cleanup():
    yield
    for event in callbacks.EVENTS:
        callbacks.remove_callback(event)
    runner.reset_config()
