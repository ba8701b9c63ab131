"""
    Module containing registered callbacks for simulation events. These events are how the Monte Carlo engine
    reports progress to the command line runner or a user's own harness. Callbacks observe; they should not
    modify the lattice they are handed.

    Events dispatched by :mod:`hpi.mc_engine` and :mod:`hpi.runner`:
        ``sample``      (sample index, lattice) after every measurement
        ``escape``      (sample index, path) when the open contour touches a clamp row
        ``chain_done``  (chain index, result) when an independent chain finishes
"""

import contextlib
import logging
import typing
from . import _types


log = logging.getLogger("hpi")

EVENTS = frozenset({"sample", "escape", "chain_done"})

_callbacks: typing.Dict[str, _types.Callback] = {}


def _check_event(event: str) -> None:
    if event not in EVENTS:
        raise ValueError(f"Unknown simulation event {event!r}, expected one of {sorted(EVENTS)}")


def dispatch_event(event: str, *args: typing.Any, **kwargs: typing.Any) -> None:
    """
        Dispatch an event to its handler, if one is set. Handler errors are logged and swallowed so a broken
        progress hook never kills a long chain.

    :param event: Name of the event to dispatch
    :param args: Arguments to the callback
    :param kwargs: Keyword arguments to the callback
    """
    cb = _callbacks.get(event)
    if cb is None:
        return
    try:
        cb(*args, **kwargs)
    except Exception as e:
        log.error(f"Error in handler for event {event}: {e}")


def set_callback(cb: _types.Callback, event: str) -> None:
    """
        Set the callback to use for a specific event, replacing any previous one

    :param cb: Callback to use
    :param event: Name of the event to register for
    """
    _check_event(event)
    _callbacks[event] = cb


def get_callback(event: str) -> _types.Callback:
    """
        Get the current callback for an event, or raise an exception if one isn't set

    :param event: Event to get callback for
    :return: Callback for event, if one is set
    """
    _check_event(event)
    if event not in _callbacks:
        raise ValueError(f"Callback for event {event} not set")
    return _callbacks[event]


def remove_callback(event: str) -> typing.Optional[_types.Callback]:
    """
        Remove the callback set for an event, returning it, or None if one isn't set

    :param event: Event to remove callback for
    :return: Callback that was previously set or None
    """
    return _callbacks.pop(event, None)


@contextlib.contextmanager
def installed(cb: _types.Callback, event: str) -> typing.Iterator[_types.Callback]:
    """
        Install a callback for the duration of a ``with`` block, restoring whatever was there before.

        **Example**:
        ``with callbacks.installed(progress.append, "sample"): run_simulation(params)``

    :param cb: Callback to install
    :param event: Event to install it for
    :return: The installed callback
    """
    previous = _callbacks.get(event)
    set_callback(cb, event)
    try:
        yield cb
    finally:
        if previous is None:
            remove_callback(event)
        else:
            _callbacks[event] = previous
