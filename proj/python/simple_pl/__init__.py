"""Pseudo-label editing for self-training."""

from ._core import (
    ConfigError,
    DataError,
    NumericalError,
    RecordSet,
    SimpleError,
    compare,
    edit,
    load_records,
    run_strategy,
    synth,
    uncertainty,
    write_records,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericalError",
    "RecordSet",
    "SimpleError",
    "compare",
    "edit",
    "load_records",
    "run_strategy",
    "synth",
    "uncertainty",
    "write_records",
]
