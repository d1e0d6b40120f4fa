"""Multilinear PCA (GLRAM) for matrix-valued data, with PCA and (2D)^2PCA baselines."""

from .errors import NumericalError, ValidationError
from .linalg import (
    Covariance,
    MatrixDataset,
    center,
    kron,
    mat_of,
    partial_col_scatter,
    partial_row_scatter,
    population_partial_col_scatter,
    population_partial_row_scatter,
    projection_distance,
    sample_covariance,
    span_contained,
    vec_of,
)
from .eigen import SymEigResult, sym_eig
from .glram import (
    MpcaBasis,
    MpcaConfig,
    coordinates,
    explained_variance,
    glram_fit,
    objective,
    population_mpca,
    reconstruct,
    tensor_principal_components,
    total_variance,
)
from .baselines import (
    PcaBasis,
    TwoDPcaBasis,
    free_parameter_count,
    pca_fit,
    pca_reconstruct,
    population_twod2pca,
    twod2pca_fit,
)
from .simulator import ModelSpec, population_covariance, random_spec, sample

__version__ = "0.1.0"
