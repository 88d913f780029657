"""Experiment configs, named bound checks, sweeps and the ``inexactfw`` CLI."""

from .config import ConfigInvalid, ExperimentConfig, load, loads, validate
from .runner import reduce, run, sweep
from .verify import verify_all
