"""Few-bit quantized cascaded channel estimation for RIS-aided mmWave MIMO.

The estimator runs VAMP on the compressed angular representation of the
cascaded channel, with every product by the measurement operator and by the
eigenvectors of its Gram matrix evaluated through FFTs.
"""
from .angular_domain import (AngularDictionaries, CompressedAngularMatrix, CompressionMap,
                             build_compression_map, build_dictionary, compress,
                             reconstruct_cascaded)
from .baselines import LsSolution, ls_estimate
from .channel_model import (CascadedChannel, ChannelPair, PathParams, UpaGeometry, cascade,
                            spatial_frequencies, steering_vector, synthesize_channels)
from .config import ConfigError, SystemConfig, load_config
from .denoisers import GmPrior, gm_denoise, quantized_output_denoise
from .linear_operator import StructuredOperator, TrainingMatrix, build_training_matrix
from .quantizer import QuantizerSpec, bin_bounds, design_quantizer, quantize
from .vamp import SolverAbort, SolverConfig, VampResult, nmse, vamp_estimate

__version__ = "0.1.0"

__all__ = [
    "AngularDictionaries", "CascadedChannel", "ChannelPair", "CompressedAngularMatrix",
    "CompressionMap", "ConfigError", "GmPrior", "LsSolution", "PathParams", "QuantizerSpec",
    "SolverAbort", "SolverConfig", "StructuredOperator", "SystemConfig", "TrainingMatrix",
    "UpaGeometry", "VampResult", "bin_bounds", "build_compression_map", "build_dictionary",
    "build_training_matrix", "cascade", "compress", "design_quantizer", "gm_denoise",
    "load_config", "ls_estimate", "nmse", "quantize", "quantized_output_denoise",
    "reconstruct_cascaded", "spatial_frequencies", "steering_vector", "synthesize_channels",
    "vamp_estimate",
]
