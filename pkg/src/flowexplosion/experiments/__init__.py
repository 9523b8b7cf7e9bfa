"""Configuration-driven experiments with CSV output and a run manifest."""

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config, load_seeds, parse_config, serialize_config
from .plots import emit_plots
from .runner import RunManifest, default_config, run
