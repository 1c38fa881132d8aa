"""Square-piece puzzle reconstruction: compatibility measures, a
genetic-algorithm solver, dataset generation, and evaluation tooling."""

from .core import (
    Arrangement,
    CompatibilityTensor,
    Edge,
    GroundTruth,
    Piece,
    PuzzleBundle,
    adjacent_pairs,
    opposite,
)
from .compat import MeasureKind, dissimilarity, full_tensor, oracle_tensor, strip_pair_score
from .postprocess import minmax_normalize, postprocess, symmetrize
from .cmx import read_cmx, write_cmx
from .solver import GaConfig, SolverReport, ablate, crossover, evolve, fitness
from .metrics import (
    EvalReport,
    evaluate,
    local_fitness_grid,
    neighbor_accuracy,
    score_map,
    top_i,
)

__all__ = [
    "Arrangement",
    "CompatibilityTensor",
    "Edge",
    "EvalReport",
    "GaConfig",
    "GroundTruth",
    "MeasureKind",
    "Piece",
    "PuzzleBundle",
    "SolverReport",
    "ablate",
    "adjacent_pairs",
    "crossover",
    "dissimilarity",
    "evaluate",
    "evolve",
    "fitness",
    "full_tensor",
    "local_fitness_grid",
    "minmax_normalize",
    "neighbor_accuracy",
    "opposite",
    "oracle_tensor",
    "postprocess",
    "read_cmx",
    "score_map",
    "strip_pair_score",
    "symmetrize",
    "top_i",
    "write_cmx",
]

__version__ = "0.1.0"
