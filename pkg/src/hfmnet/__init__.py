"""In-situ U-value estimation from heat-flux-method measurements, plus
small sequence networks that predict heat flux from air temperatures.

The package covers the full workflow: synthesising or ingesting
measurement series, average-method U-values with a stability check,
training dense/LSTM/GRU predictors with exact hand-derived gradients, and
an experiment grid comparing predicted against measured U-values across
chronological train/validation splits.
"""

from .architectures import (
    CANONICAL_ARCHITECTURES,
    Normalizer,
    PredictedUValue,
    TrainingRun,
    build,
    load_run,
    predict,
    predicted_u_value,
    save_run,
    train,
)
from .config import TrainConfig
from .errors import DataError, HfmError, TrainingError
from .experiment import (
    ExtrapolationReport,
    GridCell,
    UValueReport,
    detect_extrapolation,
    export_plot_data,
    format_report_table,
    report_from_json,
    report_to_json,
    run_grid,
)
from .iso9869 import (
    MetricSet,
    StabilityReport,
    UValueEstimate,
    UValueTrace,
    average_u_value,
    metrics,
    relative_difference,
    running_u_trace,
    stability_check,
)
from .series import (
    MeasurementSeries,
    Sample,
    SplitSpec,
    parse_csv,
    split,
    write_csv,
)
from .synth import BoundaryScenario, WallSpec, load_scenario, load_wall, simulate, true_u

__version__ = "0.1.0"

__all__ = [
    "BoundaryScenario",
    "CANONICAL_ARCHITECTURES",
    "DataError",
    "ExtrapolationReport",
    "GridCell",
    "HfmError",
    "MeasurementSeries",
    "MetricSet",
    "Normalizer",
    "PredictedUValue",
    "Sample",
    "SplitSpec",
    "StabilityReport",
    "TrainConfig",
    "TrainingError",
    "TrainingRun",
    "UValueEstimate",
    "UValueReport",
    "UValueTrace",
    "WallSpec",
    "average_u_value",
    "build",
    "detect_extrapolation",
    "export_plot_data",
    "format_report_table",
    "load_run",
    "load_scenario",
    "load_wall",
    "metrics",
    "parse_csv",
    "predict",
    "predicted_u_value",
    "relative_difference",
    "report_from_json",
    "report_to_json",
    "run_grid",
    "running_u_trace",
    "save_run",
    "simulate",
    "split",
    "stability_check",
    "train",
    "true_u",
    "write_csv",
]
