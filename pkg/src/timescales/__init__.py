"""Multi-scale statistics of price returns: heavy-tailed fits, sign
intermittency, gap laws and Hurst exponents, with synthetic oracles."""

__version__ = "0.1.0"

from .errors import (
    DataError,
    DegenerateSeriesError,
    EmptySeriesError,
    FitError,
    InsufficientTailError,
    NumericError,
    OrderingError,
    ParameterError,
    ParseError,
    RangeError,
    StabilityError,
    TimescalesError,
    UndefinedMomentError,
)
from .ingest import ColumnSpec, PriceSeries, ReturnSeries, log_returns, normalize, parse_prices
from .dist import TailFit, fit_student_t, multi_scale_fit, stationary_density, tail_exponent
from .synth import SyntheticSpec, gen_fbm, gen_iid, gen_vol_cluster, simulate_sde
from .facmom import FacMomTable, facmom_scan, factorial_moment, intermittency_slope
from .gaps import gap_distribution, fit_gap_slope
from .hurst import HurstFit, fit_hurst, generalized_hurst_scan, hurst_systematics, structure_function
