"""Training pipeline for learned piece-pair compatibility models.

Trains compact CNN ensembles on image corpora and exports compatibility
score tensors in the CMX interchange format consumed by the `puzzleforge`
reconstruction engine. The two packages communicate only through external
artifacts: bundle directories, CMX files, and the CLI.
"""

__version__ = "0.1.0"
