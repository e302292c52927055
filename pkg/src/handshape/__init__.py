"""Hand-shape classification by multiscale template matching.

Pipeline: background subtraction and thresholding isolate the hand, the
largest 8-connected region gives the centroid and bounding box, multiscale
normalized cross-correlation against labeled templates picks the class, and
frame-to-frame centroid shifts flag motion.
"""
from .evaluation import ConfusionMatrix, MetricsReport, accumulate, accuracy, macro_f1, per_class_metrics
from .imagecore import BlurSpec, gaussian_blur, load_image, resize_bilinear, save_image, to_grayscale
from .matching import ClassLabel, MatchConfig, MatchResult, Template, best_match, classify, ncc_map
from .moments import BoundingBox, Centroid, bounding_box, centroid, moment00
from .segmentation import Contour, Region, abs_diff, fill_region, find_contours, largest_region, threshold_binary
from .tracking import FrameDecision, PipelineConfig, TrackerState, run_pipeline, update

__version__ = "0.1.0"
