"""Toolkit for localizing perceptual artifacts in inpainted images.

Provides binary-mask utilities, a trainable artifact segmenter, the
perceptual artifact ratio (PAR) quality metric, iterative refill of
detected artifact regions, evaluation harnesses, and an annotation
service with a matching CLI.
"""

from .masks import (
    Box,
    HolePlacementError,
    area,
    canonicalize_label,
    dilate,
    display_bbox,
    erode,
    intersect,
    load_mask,
    object_removal_mask,
    sample_background_hole,
    save_mask,
    square_kernel,
)
from .dataset import (
    Sample,
    SplitSpec,
    dataset_stats,
    list_sample_ids,
    load_sample,
    load_split,
    persist_sample,
    pseudo_labels,
    save_split,
    split_811,
    synth_generate,
)
from .evaluation import (
    CorrelationResult,
    SegScores,
    metric_correlation,
    par,
    par_vs_holesize,
    seg_scores,
    strong_preference,
)
from .inpaint import (
    ARTIFACT_COLOR,
    ArtifactColorSegmenter,
    ExternalCommandInpainter,
    InpaintBackendError,
    InpaintTimeoutError,
    Inpainter,
    OracleInpainter,
    ToyDiffusionInpainter,
    fill,
    oracle_fill,
    toy_diffusion_fill,
)
from .iterfill import (
    FillStep,
    IterFillTrace,
    iterative_fill,
    load_trace,
    onion_fill,
    par_curve,
    save_trace,
)
from .segmenter import (
    ArtifactSegNet,
    SegConfig,
    SegModel,
    load_model,
    poly_lr,
    pooled_val_iou,
    predict_artifacts,
    train,
)

__version__ = "0.1.0"
