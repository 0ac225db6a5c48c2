"""Commands package for the cksc CLI."""
from . import evaluate, kernel, nqp_solve, predict, synthetic, train

__all__ = ["kernel", "train", "predict", "evaluate", "synthetic", "nqp_solve"]
