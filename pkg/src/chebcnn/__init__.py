"""chebcnn: spectral graph CNNs with Chebyshev polynomial filters."""

from .conv import ChebConvParams, cheb_conv, chebyshev_basis, init_cheb_params, spectral_filter_exact
from .data import Dataset, GraphBatch, load_tu_dataset, make_batch, prepare_dataset, stratified_folds
from .graphs import (Graph, Laplacian, ScaledLaplacian, build_graph, degrees,
                     normalized_laplacian, permute_graph, scale_laplacian)
from .models import Model, ModelSpec, build_model, load_checkpoint, save_checkpoint
from .tensor import Tensor, grad_check
from .train import TrainConfig, cross_entropy, evaluate, train_fold

__version__ = "0.1.0"

__all__ = [
    "ChebConvParams", "cheb_conv", "chebyshev_basis", "init_cheb_params",
    "spectral_filter_exact", "Dataset", "GraphBatch", "load_tu_dataset",
    "make_batch", "prepare_dataset", "stratified_folds", "Graph", "Laplacian",
    "ScaledLaplacian", "build_graph", "degrees", "normalized_laplacian",
    "permute_graph", "scale_laplacian", "Model", "ModelSpec", "build_model",
    "load_checkpoint", "save_checkpoint", "Tensor", "grad_check",
    "TrainConfig", "cross_entropy", "evaluate", "train_fold",
]
