"""Two-stream fusion-prior trainer.

Trains a convolutional network that merges an upsampled coarse hyperspectral
cube with a fine conventional image into a fine-grid prior cube, and exports
inferred priors as ``.hsc`` files for use as the regularization target of the
fusion toolkit.
"""

from .degrade import (DegradationSpec, bicubic_upsample, blur_circular,
                      decimate, srf_apply, synthesize_pair, upsample_matrix)
from .errors import (DataError, FormatError, ParameterError, ShapeError,
                     TsfnError)
from .hsc import read_hsc, write_hsc
from .infer import export_prior, infer_prior
from .network import (NetworkConfig, ResidualBlock, TwoStreamNet,
                      fold_batchnorm, l1_loss)
from .train import TrainConfig, load_checkpoint, load_corpus, train

__version__ = "0.1.0"

__all__ = [
    "DataError", "DegradationSpec", "FormatError", "NetworkConfig",
    "ParameterError", "ResidualBlock", "ShapeError", "TrainConfig",
    "TsfnError", "TwoStreamNet", "__version__", "bicubic_upsample",
    "blur_circular", "decimate", "export_prior", "fold_batchnorm",
    "infer_prior", "l1_loss", "load_checkpoint", "load_corpus", "read_hsc",
    "srf_apply", "synthesize_pair", "train", "upsample_matrix", "write_hsc",
]
