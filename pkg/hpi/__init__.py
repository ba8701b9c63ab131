
__title__ = "halfplane-interfaces"
__author__ = "hpi developers"
__license__ = "MIT"
__copyright__ = "Copyright 2026-present hpi developers"
__version__ = "0.1.0"

from . import exact_solution, ground_state, mc_engine, contour_analysis, snapshot, factories, callbacks, utils
from .errors import (HPIError, DomainError, ConfigurationError, NumericalError, ConsistencyError, StatisticsError,
                     ExtractionError, SnapshotError, EscapeRateError)
from .exact_solution import Couplings, TensionCurve, ProfilePoint, SaddleSolution
from .ground_state import StaircasePath, EndpointSet, CrossRatioRow
from .mc_engine import SimParams, SimulationResult, SpinLattice, FieldAccumulator
from .contour_analysis import InterfacePath, CigarSpec
from .runner import RunConfig, configure, get_config, load_config, run_chains
from .verify import verify, Verify, VerifyProfile, VerifyField, VerifyTrend
