from .config import ExperimentConfig, default_config, load_config
from .experiments import EXPERIMENTS
from .runner import run, write_table

__all__ = ["EXPERIMENTS", "ExperimentConfig", "default_config", "load_config", "run", "write_table"]
