"""Fuzzy view of k-means signal quantization and circular fuzzy iris segmentation."""

from .cfis import (
    FuzzyIrisBand,
    RadialProfiles,
    SegmentationResult,
    Segmenter,
    iris_band,
    limbic_boundary,
    radial_profiles,
    segment,
    vote_iris_rows,
)
from .config import CfisConfig, PupilOptions, QuantizeOptions, load_config
from .errors import FuzzquantError
from .indicators import (
    CombinedIndicators,
    TripletReport,
    boundary_indicator,
    cluster_memberships,
    combined_indicators,
    crisp_indicator,
    fuzzy_indicator,
    verify_triplet,
)
from .polar import PolarMap, PolarMapCache, build_polar_map, stretch_rows, trace_back, unwrap
from .pupil import PupilCircle, find_pupil, rle_components
from .quantizer import Quantization, Signal, kmeans_quantize, sse
from .raster_io import GrayImage, load_image, render_overlay, save_image
from .synth import SynthEyeSpec, generate_eye

__version__ = "0.1.0"
