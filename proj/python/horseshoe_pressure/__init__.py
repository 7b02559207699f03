"""Variable-return-time horseshoes and topological pressure."""

import json

from ._core import (
    ConfigError,
    Error,
    InfeasiblePeriod,
    OrbitEscaped,
    admissible_periods,
    bowen_root,
    log_counts,
    lyapunov,
    orbit,
    pressure_periodic,
    validate_constants,
    word_count_bounds,
)
from ._core import run_theorem_a as _run_theorem_a


def run_theorem_a(config):
    """Run the staged pipeline. `config` is a dict or JSON text; returns a dict."""
    text = config if isinstance(config, str) else json.dumps(config)
    return json.loads(_run_theorem_a(text))


__all__ = [
    "ConfigError",
    "Error",
    "InfeasiblePeriod",
    "OrbitEscaped",
    "admissible_periods",
    "bowen_root",
    "log_counts",
    "lyapunov",
    "orbit",
    "pressure_periodic",
    "run_theorem_a",
    "validate_constants",
    "word_count_bounds",
]
