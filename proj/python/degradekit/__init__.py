"""Cache-degradation side-channel toolkit: leakage metrics, the DH padding
oracle simulation, HNP lattice solving and the attack sweep."""

from ._core import (
    DegradekitError,
    aggregate_stats,
    attack,
    capabilities,
    detect_padding,
    dimension_heuristic,
    estimate_traces,
    group,
    load_traces,
    max_correlation,
    nicv,
    pad_probability,
    save_traces,
    signed_mod,
    solve_hnp,
    sweep_fixture,
    synthetic_instance,
)

__all__ = [
    "DegradekitError",
    "aggregate_stats",
    "attack",
    "capabilities",
    "detect_padding",
    "dimension_heuristic",
    "estimate_traces",
    "group",
    "load_traces",
    "max_correlation",
    "nicv",
    "pad_probability",
    "save_traces",
    "signed_mod",
    "solve_hnp",
    "sweep_fixture",
    "synthetic_instance",
]
