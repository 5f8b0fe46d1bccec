"""Stationary-frame PR versus synchronous-frame PI inner loops for a droop-controlled inverter."""
from mgframes.engine import (ConfigError, Frame, NumericalDivergence, ScenarioConfig,
                             TimeSeries, run_pair, run_scenario)
from mgframes.metrics import RunMetrics, thd, tracking_metrics

__all__ = ["ConfigError", "Frame", "NumericalDivergence", "ScenarioConfig", "TimeSeries",
           "run_pair", "run_scenario", "RunMetrics", "thd", "tracking_metrics"]
__version__ = "0.1.0"
