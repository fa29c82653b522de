"""Outage probability of dual-hop multi-antenna AF relays with interference at the relay."""

from afrelay.analytic import (
    Method,
    OutageValue,
    PrecisionWarning,
    UnsupportedCaseError,
    coefficient_report,
    outage_exact,
    outage_high_snr,
    outage_lower_variable,
)
from afrelay.model import AsymptoticQuery, Scheme, SystemConfig, Topology

__all__ = [
    "AsymptoticQuery",
    "Method",
    "OutageValue",
    "PrecisionWarning",
    "Scheme",
    "SystemConfig",
    "Topology",
    "UnsupportedCaseError",
    "coefficient_report",
    "outage_exact",
    "outage_high_snr",
    "outage_lower_variable",
]
