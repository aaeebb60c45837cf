"""Qutrit quantum key distribution: exact geometry, information figures and simulation."""

from .infotheory import (
    PROTOCOLS,
    MetricsRow,
    SweepSeries,
    bob_correct_prob,
    bob_info,
    breakeven_x,
    eve_info_ire,
    metrics_table,
    mub_ire_metrics,
    passive_info,
    sweep,
)
from .protocol import EveStrategy, ProtocolSpec, run_session
from .statespace import build_mub4, build_table1, overlap_prob

__all__ = [
    "PROTOCOLS",
    "EveStrategy",
    "MetricsRow",
    "ProtocolSpec",
    "SweepSeries",
    "bob_correct_prob",
    "bob_info",
    "breakeven_x",
    "build_mub4",
    "build_table1",
    "eve_info_ire",
    "metrics_table",
    "mub_ire_metrics",
    "overlap_prob",
    "passive_info",
    "run_session",
    "sweep",
]
