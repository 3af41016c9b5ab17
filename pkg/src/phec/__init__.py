"""phec: probabilistic hybrid ensemble classifier for intrusion detection.

Centralized (KNN + random forest, mean-aggregated) and simulated
federated (per-node MLPs, FedStacking or FedAvg) training, noise-tolerant
variants built on alpha-weighted surrogate losses, and a constrained
threshold search that maximizes TPR under a false-positive-rate cap.
"""

from .kernels import BACKEND as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]
