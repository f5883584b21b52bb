"""
Graph State Definition
Defines the state shared across all stages of the `run` pipeline graph.
"""

from typing import Any, Literal, TypedDict


class PipelineState(TypedDict, total=False):
    """
    State container for one pipeline run.

    Stages read what earlier stages produced and add their own results;
    every gate verdict is appended to ``gates``.
    """
    # Input configuration
    config: Any          # RunConfig
    workers: int         # Thread count for the numerical stages

    # Computed objects
    generator: Any       # CombGenerator
    comb: Any            # WeightedComb on the largest van Hove box
    gamma: Any           # Autocorrelation of that comb
    spectrum: Any        # DiffractionSpectrum with purity
    denominator: float   # (φ̃ ∗ φ ∗ γ)(0)
    dworkin: Any         # DworkinReport
    eigengroup: Any      # EigenGroupReport (pure point runs only)

    # Verdicts and outputs
    gates: list[dict]    # {"name", "value", "tolerance", "gate", "passed"}
    artifacts: dict[str, str]
    error: str

    # Flow control
    status: Literal["IN_PROGRESS", "PASSED", "FAILED", "ERROR"]
