"""PV output smoothing: sizing and dispatch by linear programming.

Co-optimizes battery power/energy rating, diesel backup capacity and
sub-MPP curtailment against grid revenue for a utility-scale PV plant.
"""

from .config import RunConfig, SyntheticWeatherSpec, load_preset, load_run_config
from .economics import (
    BatterySpec,
    DieselSpec,
    EconomicParams,
    PresentWorthFactors,
    compute_factors,
)
from .errors import (
    ConfigError,
    LpDefinitionError,
    MpsFormatError,
    PvSmoothError,
    SolveStatusError,
    WeatherFormatError,
)
from .formulation import (
    CaseFormulation,
    ConstraintConfig,
    DispatchSolution,
    build_case,
    extract_solution,
)
from .pvmodel import PowerSeries, PvPlantSpec, pv_power
from .validation import (
    CaseComparison,
    OracleResult,
    ValidationReport,
    brute_force_optimum,
    check_dispatch,
    compare_cases,
    oracle_gap_bound,
)
from .weather import WeatherSeries, filter_low_irradiance, load_weather, synth_weather

__version__ = "0.1.0"

__all__ = [
    "BatterySpec",
    "CaseComparison",
    "CaseFormulation",
    "ConfigError",
    "ConstraintConfig",
    "DieselSpec",
    "DispatchSolution",
    "EconomicParams",
    "LpDefinitionError",
    "MpsFormatError",
    "OracleResult",
    "PowerSeries",
    "PresentWorthFactors",
    "PvPlantSpec",
    "PvSmoothError",
    "RunConfig",
    "SolveStatusError",
    "SyntheticWeatherSpec",
    "ValidationReport",
    "WeatherFormatError",
    "WeatherSeries",
    "brute_force_optimum",
    "build_case",
    "check_dispatch",
    "compare_cases",
    "compute_factors",
    "extract_solution",
    "filter_low_irradiance",
    "load_preset",
    "load_run_config",
    "load_weather",
    "oracle_gap_bound",
    "pv_power",
    "synth_weather",
    "__version__",
]
