"""Monte-Carlo comparison of IR and CIR on random dose-response scenarios."""
from .config import SimulationConfig, load_config, parse_config
from .designs import DesignSpec
from .runs import IntervalRecord, PointRecord, RunResult, run_fixed, run_k_in_a_row
from .scenarios import FAMILIES, ScenarioSpec, draw_scenario
from .summary import EnsembleSummary, SummaryTable, summarize
from .tables import TABLE_IDS, EnsembleCache, reproduce_table

__all__ = [
    "DesignSpec", "EnsembleCache", "EnsembleSummary", "FAMILIES", "IntervalRecord",
    "PointRecord", "RunResult", "ScenarioSpec", "SimulationConfig", "SummaryTable",
    "TABLE_IDS", "draw_scenario", "load_config", "parse_config", "reproduce_table",
    "run_fixed", "run_k_in_a_row", "summarize",
]
