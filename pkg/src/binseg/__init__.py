"""binseg: semantic segmentation by merging superpixels under binary hash codes.

A feature map (typically from a fully convolutional network) is compressed
cell-by-cell into short binary codes by PCA plus a learned orthogonal
rotation; low-level superpixels inherit codes from the cells they cover and
are merged when their codes agree in Hamming space. Graph-based and SLIC
baselines plus a best-match IoU harness round out the toolkit.
"""

from .binmap import BinaryMap, encode_feature_map, map_pixel_to_cell, superpixel_codes, visualize_binary_map
from .egs import EgsParams, egs_segment, gaussian_smooth
from .evaluate import EvalReport, best_match_iou, evaluate_dataset, iou, sweep_superpixels
from .itq import HashModel, encode, fit_itq, fit_pca, quantization_loss, read_model, solve_procrustes, train_hash, write_model
from .merge import MergePolicy, hamming, merge_superpixels
from .pipeline import PipelineConfig, segment_image, train_from_feature_maps
from .superpixel import SuperpixelSet, build_adjacency, enforce_connectivity, rgb_to_lab, slic
from .synth import SyntheticScene, make_scene, write_scene
from .tensor_io import read_image, read_label_map, read_tensor, relabel, write_image, write_label_map, write_tensor

__version__ = "0.1.0"
