"""Experiment plumbing: configs, orchestration, comparisons and the CLI."""
from .compare import ComparisonResult, compare
from .config import ConfigError, ExperimentConfig, parse_file, parse_text, serialize
from .plots import emit_plot_script
from .sweep import rate_sweep
