"""Fixed-point Grover adaptive search for QUBO problems."""
from fpgas._kernels import BACKEND as KERNEL_BACKEND
from fpgas.qubo import (
    QuboProblem,
    RewriteCoefficients,
    ValueDistribution,
    distribution,
    evaluate,
    graph_cut_problem,
    rewrite,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "QuboProblem",
    "RewriteCoefficients",
    "ValueDistribution",
    "distribution",
    "evaluate",
    "graph_cut_problem",
    "rewrite",
]
