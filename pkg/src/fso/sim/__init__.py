from .clock import SimClock
from .config import ConfigError, ScenarioConfig, load_config
from .metrics import Metrics, compare_runs
from .runner import paired_sweep, run_scenario, simulate
