"""Entropy estimators, tower decompositions and column recoding for stationary processes."""

from ._core import (
    ErgolabError,
    ExperimentReport,
    JointModel,
    ProcessModel,
    Tower,
    TowerDecomposition,
    Verdict,
    codebooks_roundtrip,
    compute_M,
    estimate,
    freq,
    kakutani_decompose,
    load_model,
    lz78,
    minimal_feasible_n,
    parse_model,
    plugin,
    returntime,
    rohlin_tower,
    run_experiment,
    smb_trajectory,
)

__all__ = [
    "ErgolabError",
    "ExperimentReport",
    "JointModel",
    "ProcessModel",
    "Tower",
    "TowerDecomposition",
    "Verdict",
    "codebooks_roundtrip",
    "compute_M",
    "estimate",
    "freq",
    "kakutani_decompose",
    "load_model",
    "lz78",
    "minimal_feasible_n",
    "parse_model",
    "plugin",
    "returntime",
    "rohlin_tower",
    "run_experiment",
    "smb_trajectory",
]
