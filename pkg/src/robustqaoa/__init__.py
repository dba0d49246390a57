"""Robust QAOA control optimization.

Benchmark spin systems, an adjoint-gradient QAOA simulator, and three
robust optimizers (trust-region sequential convex programming, batch
GRAPE and adversarial GRAPE) with an experiment harness around them.
"""

from .engine import evaluate_samples, fidelity, fidelity_gradient, propagate
from .errors import ConfigInvalid, NumericalError, RobustQaoaError
from .optimizers import (AGrapeConfig, GrapeConfig, ScpConfig, agrape_optimize, bgrape_optimize,
                         grape_optimize, scp_optimize)
from .spinmodel import SYSTEMS, build_instance
from .uncertainty import SampleSet, UncertaintyBox, sample_grid, sample_random, worst_and_average

__version__ = "0.1.0"

__all__ = [
    "AGrapeConfig", "ConfigInvalid", "GrapeConfig", "NumericalError", "RobustQaoaError", "SYSTEMS",
    "SampleSet", "ScpConfig", "UncertaintyBox", "agrape_optimize", "bgrape_optimize", "build_instance",
    "evaluate_samples", "fidelity", "fidelity_gradient", "grape_optimize", "propagate", "sample_grid",
    "sample_random", "scp_optimize", "worst_and_average",
]
