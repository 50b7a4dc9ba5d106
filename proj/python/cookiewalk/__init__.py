"""Python surface of the cookiewalk toolkit.

Heavy operations run in the compiled core. Wrappers below accept either a
JSON config string or a dict with the same shape as the CLI config files,
and return parsed python objects.
"""

import json as _json

from ._core import (
    JumpDistribution,
    __version__,
    delta_of_config as _delta_of_config,
    diagonal_escape_reference,
)
from . import _core

__all__ = [
    "JumpDistribution",
    "__version__",
    "classify",
    "cross_validate",
    "delta_of_config",
    "diagonal_escape_reference",
    "drift_at_origin",
    "escape_curve",
    "solve_exit",
    "validate",
]


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def delta_of_config(config):
    """Exact per-site stored drift of the config's environment law."""
    return _delta_of_config(_text(config))


def validate(config):
    """Assumption report for the config's environment law, as a dict."""
    return _json.loads(_core.validate_json(_text(config)))


def solve_exit(config):
    """Exact exit analysis of the config's bounded-interval instance."""
    return _json.loads(_core.solve_exit_json(_text(config)))


def cross_validate(config, replicas=20000, seed=1, threads=1):
    """Monte Carlo agreement report against the exact solve, as a dict."""
    return _json.loads(
        _core.cross_validate_json(_text(config), replicas, seed, threads)
    )


def classify(config, threads=1):
    """Recurrence/transience diagnostics for the config's law, as a dict."""
    return _json.loads(_core.classify_json(_text(config), threads))


def escape_curve(config, horizon=10000, replicas=2000, seed=1, threads=1):
    """Escape-probability estimates over a doubling horizon ladder."""
    return _json.loads(
        _core.escape_curve_json(_text(config), horizon, replicas, seed, threads)
    )


def drift_at_origin(config, frontier_n=1000, lag=20, replicas=200, seed=1,
                    threads=1):
    """Lagged consumed-drift estimate at sites far behind the frontier."""
    return _json.loads(
        _core.drift_at_origin_json(
            _text(config), frontier_n, lag, replicas, seed, threads
        )
    )
