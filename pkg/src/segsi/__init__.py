"""Exact selective inference for piecewise-linear DNN segmentation.

Computes non-asymptotic selective p-values for object/background
segmentation masks produced by networks built from affine operations and
piecewise-linear activations, by enumerating the network's linear regions
along a one-dimensional data line.
"""

from segsi.images import ImageVector, read_image, write_image
from segsi.activations import PiecewiseLinearActivation, relu, leaky_relu, approximate_activation
from segsi.network import (
    NetworkSpec,
    Dense,
    Conv2D,
    MaxPool2x2,
    UpsampleNearest2x,
    Activation,
    OutputSign,
    SegmentationMask,
    forward,
    forward_line,
    output_preactivation,
)
from segsi.weights_io import load_network, save_network
from segsi.hypothesis import (
    NoiseModel,
    LineParametrization,
    NoDetection,
    NO_DETECTION,
    build_test_direction,
    line_parametrization,
    estimate_variance,
)
from segsi.homotopy import (
    Region,
    RegionPath,
    TruncationRegion,
    next_breakpoint,
    compute_solution_path,
    truncation_region,
    oc_region,
)
from segsi.inference import (
    TestResult,
    naive_p,
    truncated_two_sided_p,
    selective_p_pipeline,
    permutation_test,
)

__all__ = [
    "ImageVector",
    "read_image",
    "write_image",
    "PiecewiseLinearActivation",
    "relu",
    "leaky_relu",
    "approximate_activation",
    "NetworkSpec",
    "Dense",
    "Conv2D",
    "MaxPool2x2",
    "UpsampleNearest2x",
    "Activation",
    "OutputSign",
    "SegmentationMask",
    "forward",
    "forward_line",
    "output_preactivation",
    "load_network",
    "save_network",
    "NoiseModel",
    "LineParametrization",
    "NoDetection",
    "NO_DETECTION",
    "build_test_direction",
    "line_parametrization",
    "estimate_variance",
    "Region",
    "RegionPath",
    "TruncationRegion",
    "next_breakpoint",
    "compute_solution_path",
    "truncation_region",
    "oc_region",
    "TestResult",
    "naive_p",
    "truncated_two_sided_p",
    "selective_p_pipeline",
    "permutation_test",
]
