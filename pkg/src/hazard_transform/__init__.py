"""Transform cumulative-hazard estimates onto other time-to-event scales.

The package solves plugin recursions driven by step-function paths: given an
estimated driver (Nelson-Aalen, additive-regression, or deterministic time
grids) and a parameter system ``dX = F(X) dA``, it produces the state path,
its covariance path, and pointwise confidence bands, together with a
simulation laboratory for convergence and coverage studies.
"""

from .errors import (
    ConfigError,
    DataError,
    GuardViolation,
    HazardTransformError,
    NegativeVarianceError,
)
from .events import (
    EventDataset,
    EventRecord,
    at_risk,
    counting_path,
    parse_dataset,
    write_dataset,
)
from .hazards import (
    aalen_additive,
    estimate_driver,
    nelson_aalen,
    time_grid_driver,
)
from .paths import (
    DriverMeta,
    StepPath,
    merge_drivers,
    read_path,
    restrict_path,
    write_path,
)
from .plugin import (
    ConfidenceBand,
    PluginFit,
    confidence_band,
    fit_plugin,
    read_fit,
    solve_plugin,
    solve_variance,
    write_fit,
)
from .simlab import (
    ConstantHazard,
    HazardSpec,
    LinearHazard,
    Scenario,
    StudyResult,
    TableHazard,
    bootstrap_covariance,
    coverage_study,
    hazard_from_config,
    l2_convergence,
    l2_distance,
    oracle_parameter,
    simulate_dataset,
    sup_distance,
    wilson_interval,
    write_study,
)
from .systems import (
    ParameterSystem,
    SystemKind,
    driver_slots,
    eval_gradient,
    eval_integrand,
    make_system,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "HazardTransformError",
    "ConfigError",
    "DataError",
    "GuardViolation",
    "NegativeVarianceError",
    # paths
    "StepPath",
    "DriverMeta",
    "merge_drivers",
    "restrict_path",
    "read_path",
    "write_path",
    # events
    "EventRecord",
    "EventDataset",
    "at_risk",
    "counting_path",
    "parse_dataset",
    "write_dataset",
    # systems
    "SystemKind",
    "ParameterSystem",
    "make_system",
    "driver_slots",
    "eval_integrand",
    "eval_gradient",
    # hazards
    "nelson_aalen",
    "aalen_additive",
    "time_grid_driver",
    "estimate_driver",
    # plugin
    "solve_plugin",
    "solve_variance",
    "PluginFit",
    "fit_plugin",
    "ConfidenceBand",
    "confidence_band",
    "write_fit",
    "read_fit",
    # simlab
    "HazardSpec",
    "ConstantHazard",
    "LinearHazard",
    "TableHazard",
    "hazard_from_config",
    "Scenario",
    "simulate_dataset",
    "oracle_parameter",
    "sup_distance",
    "l2_distance",
    "StudyResult",
    "write_study",
    "l2_convergence",
    "coverage_study",
    "bootstrap_covariance",
    "wilson_interval",
]
