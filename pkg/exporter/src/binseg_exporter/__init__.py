"""Offline exporter of dense convolutional feature maps in the BTSR format."""

from .btsr import read_tensor, write_tensor
from .export import ImageDecodeError, export_features, extract, load_image_rgb
from .net import (
    FEATURE_DIM,
    OFFSET,
    RECEPTIVE_FIELD,
    STRIDE,
    FullyConvFeatures,
    ModelUnavailable,
    build_model,
    expected_grid,
)

__version__ = "0.1.0"
