"""powermod: counter-based dynamic power modelling.

Builds dynamic-power models from hardware-counter traces: trace ingestion
with start/stop rate derivation, automated counter selection via forest
importances, rule-based noise filtering over similarity clusters, four
regression models (linear, tube regression, neural net, and a two-stage
composite), and a fold-rotation evaluation harness with percent-error CDFs.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND", "__version__"]
