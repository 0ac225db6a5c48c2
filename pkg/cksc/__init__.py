"""
cksc - Confident kernel sparse coding for multivariate time series

Learns a non-negative kernel dictionary whose atoms draw on one class at a
time, and classifies new series by the class that contributes most to
their sparse reconstruction.
- DTW-based Gaussian kernels (kernelcore)
- Cardinality-constrained non-negative QP pursuit (nqp)
- Alternating dictionary training (trainer) and recall (recall)
- Cross-validation, interpretability and sensitivity sweeps (metrics)
"""

__version__ = "0.1.0"

from cksc.errors import CkscError
from cksc.trainer import Hyperparams, LabelMatrix, TrainedModel, train

__all__ = ["CkscError", "Hyperparams", "LabelMatrix", "TrainedModel", "train", "__version__"]
