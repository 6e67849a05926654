"""SGD under the expected-smoothness model.

Finite-sum problems, arbitrary sampling and compressed gradient
estimators with closed-form second-moment constants, stepsize planners
and bound calculators, and tools to fit and check those constants on run
traces.
"""

from . import compression, estimation, ingest, kernels, model, optimizer, problems, sampling
from .model import EsConstants, RgConstants
from .optimizer import RunTrace, run_sgd

__version__ = "0.1.0"

__all__ = [
    "compression",
    "estimation",
    "ingest",
    "kernels",
    "model",
    "optimizer",
    "problems",
    "sampling",
    "EsConstants",
    "RgConstants",
    "RunTrace",
    "run_sgd",
]
