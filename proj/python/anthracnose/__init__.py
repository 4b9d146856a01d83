"""Simulation and optimal control of a seasonal inhibition model.

Configs are plain dicts of ``key -> value``; values may be numbers or strings
and are merged over :func:`default_config`.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from os import PathLike
from typing import Any

from . import _anthracnose as _core
from ._anthracnose import SolverError, ValidationError, __version__

__all__ = [
    "SolverError",
    "ValidationError",
    "alpha_profile",
    "brute_force",
    "default_config",
    "optimize_mixed",
    "optimize_pulse",
    "presets",
    "run",
    "run_cli",
    "simulate",
]


def _entries(config: Mapping[str, Any] | None) -> dict[str, str]:
    out = {}
    for key, value in (config or {}).items():
        out[key] = repr(float(value)) if isinstance(value, float) else str(value)
    return out


def default_config() -> dict[str, str]:
    return _core.default_config()


def presets() -> list[dict]:
    return _core.presets()


def simulate(config: Mapping[str, Any] | None = None, pulses: Sequence[float] | None = None) -> dict:
    """Forward run. ``pulses`` gives one uniform v_i per candidate time; otherwise ``pulse.v`` is used."""
    return _core.simulate(_entries(config), None if pulses is None else [float(v) for v in pulses])


def optimize_pulse(config: Mapping[str, Any] | None = None) -> dict:
    return _core.optimize_pulse(_entries(config))


def optimize_mixed(config: Mapping[str, Any] | None = None) -> dict:
    return _core.optimize_mixed(_entries(config))


def brute_force(config: Mapping[str, Any] | None = None, interior_samples: int = 0) -> dict:
    return _core.brute_force(_entries(config), interior_samples)


def alpha_profile(config: Mapping[str, Any] | None = None):
    """Returns ``(t, alpha)`` with ``alpha`` shaped (time points, grid points)."""
    return _core.alpha_profile(_entries(config))


def run(command: str, config: Mapping[str, Any] | None, out: str | PathLike) -> tuple[int, str]:
    """Runs one CLI subcommand into ``out``; returns ``(exit_code, log)``."""
    return _core.run(command, _entries(config), out)


def run_cli(args: Sequence[str]) -> int:
    return _core.run_cli([str(a) for a in args])
