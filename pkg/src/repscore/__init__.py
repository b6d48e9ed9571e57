"""Representation scoring for linear learners.

Measures, for a dataset under several invertible representations, the ridge
training loss, the information in the ridge weights, the resulting task
complexity score and the Gaussian coding length of the inputs.
"""
from .colorspace import PrecTransform, apply_prec, fit_prec, invert_prec, rgb_to_ycbcr, ycbcr_to_rgb
from .complexity import (
    ComplexityReport,
    EntropyEstimate,
    gaussian_entropy,
    info_in_weights,
    lemma2_check,
    rank_representations,
    tcs,
)
from .dataset import (
    ImageTensor,
    LabeledDataset,
    SyntheticSpec,
    load_dataset,
    load_image_dir,
    make_quadratic_task,
    make_synthetic_regression,
    make_texture_classification,
    save_dataset,
    split_dataset,
)
from .features import FeatureMatrix, tile_features, vectorize
from .pipeline import GridSpec, ThresholdRule, run_grid, write_grid
from .regression import RidgeConfig, WeightStats, batched_ridge_runs, ridge_fit
from .representations import REPRESENTATIONS, apply_representation, invert_representation
from .spectral import block_dct, block_idct, dct2, idct2
from .verify import verify_suite

__version__ = "0.1.0"
