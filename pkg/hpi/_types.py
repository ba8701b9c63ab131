"""
    Internal module for type-hinting aliases. Ensures single common definitions.
"""

import typing

import numpy as np
import numpy.typing as npt

T = typing.TypeVar('T')

FloatArray = npt.NDArray[np.float64]
SpinArray = npt.NDArray[np.int8]
Point = typing.Tuple[int, int]
Pair = typing.Tuple[int, int]
JsonVal = typing.Union[str, int, float, bool, None, typing.Dict[str, 'JsonVal'], typing.List['JsonVal']]
JsonDict = typing.Dict[str, JsonVal]
Callback = typing.Callable[..., None]
