"""Dynamic multiple-parameter joint time-vertex fractional Fourier transforms."""

from .data import gen_synthetic, read_graph_csv, read_signal_csv, write_graph_csv, write_signal_csv
from .errors import (
    ConfigError,
    DmpjfrftError,
    NumericalError,
    ShapeMismatch,
)
from .experiment import ExperimentConfig, compare_transforms, run_experiment
from .filtering import (
    Degradation,
    FilterModel,
    OptimizerConfig,
    degrade,
    gd_filter,
    gradients,
    reconstruct,
)
from .graph import Graph, GsoKind, build_gso, knn_graph, patchify, unpatchify
from .learnnet import TrainConfig, infer, split_dataset, train
from .metrics import evaluate, mse, psnr, snr, ssim
from .spectral import JointBases, SpectralBasis, dft_eigenbasis, dft_matrix, diagonalize
from .transforms import (
    JointOperator,
    OrderParams,
    dmpjfrft_apply,
    dmpjfrft_inverse,
    dmpjfrft_operator,
    jfrft_apply,
)

__all__ = [
    "gen_synthetic",
    "read_graph_csv",
    "read_signal_csv",
    "write_graph_csv",
    "write_signal_csv",
    "ConfigError",
    "DmpjfrftError",
    "NumericalError",
    "ShapeMismatch",
    "ExperimentConfig",
    "compare_transforms",
    "run_experiment",
    "Degradation",
    "FilterModel",
    "OptimizerConfig",
    "degrade",
    "gd_filter",
    "gradients",
    "reconstruct",
    "Graph",
    "GsoKind",
    "build_gso",
    "knn_graph",
    "patchify",
    "unpatchify",
    "TrainConfig",
    "infer",
    "split_dataset",
    "train",
    "evaluate",
    "mse",
    "psnr",
    "snr",
    "ssim",
    "JointBases",
    "SpectralBasis",
    "dft_eigenbasis",
    "dft_matrix",
    "diagonalize",
    "JointOperator",
    "OrderParams",
    "dmpjfrft_apply",
    "dmpjfrft_inverse",
    "dmpjfrft_operator",
    "jfrft_apply",
]
__version__ = "0.1.0"
