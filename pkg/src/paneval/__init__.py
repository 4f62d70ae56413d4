"""paneval: OSPA-based evaluation for panoptic segmentation and tracking.

The set metrics (class-averaged OSPA over masks, trajectory OSPA over
tracks) handle multi-label annotations directly; the threshold baselines
(PQ, STQ, IDF1, fragmentation) run on flattened single-label views.
"""

__version__ = "0.1.0"

from .annotations import (
    FrameAnnotation,
    Segment,
    SequenceAnnotation,
    Track,
    build_tracks,
    class_masks,
    filter_subset,
    flatten_multilabel,
)
from .assignment import AssignmentResult, brute_force_assignment, solve_assignment
from .baselines import IdfResult, PqResult, StqResult, idf1_frag, pq, stq
from .errors import ValidationError, ValidationErrorGroup
from .io import (
    Manifest,
    load_manifest,
    load_sequence,
    save_manifest,
    save_sequence,
    validate_manifest,
)
from .ospa import OspaComponents, ospa_from_cost_matrix, ospa_set_distance
from .ospa_seg import (
    DatasetOspa,
    FrameOspa,
    ospa_ps,
    ospa_ps_by_scale,
    ospa_ps_dataset,
    scale_bucket,
)
from .ospa_track import ospa2_breakdowns, ospa2_pt, track_distance
from .rle import Mask, area, iou, iou_matrix, merge_masks, rect_mask, rle_decode, rle_encode
from .runner import EvalConfig, evaluate_ps, evaluate_pt
from .synth import PerturbParams, SplitMix64, SynthParams, generate, perturb, synth_taxonomy
from .taxonomy import ClassDef, Taxonomy, load_taxonomy

__all__ = [
    "__version__",
    "AssignmentResult",
    "ClassDef",
    "DatasetOspa",
    "EvalConfig",
    "FrameAnnotation",
    "FrameOspa",
    "IdfResult",
    "Manifest",
    "Mask",
    "OspaComponents",
    "PerturbParams",
    "PqResult",
    "Segment",
    "SequenceAnnotation",
    "SplitMix64",
    "StqResult",
    "SynthParams",
    "Taxonomy",
    "Track",
    "ValidationError",
    "ValidationErrorGroup",
    "area",
    "brute_force_assignment",
    "build_tracks",
    "class_masks",
    "evaluate_ps",
    "evaluate_pt",
    "filter_subset",
    "flatten_multilabel",
    "generate",
    "idf1_frag",
    "iou",
    "iou_matrix",
    "load_manifest",
    "load_sequence",
    "load_taxonomy",
    "merge_masks",
    "ospa2_breakdowns",
    "ospa2_pt",
    "ospa_from_cost_matrix",
    "ospa_ps",
    "ospa_ps_by_scale",
    "ospa_ps_dataset",
    "ospa_set_distance",
    "perturb",
    "pq",
    "rect_mask",
    "rle_decode",
    "rle_encode",
    "save_manifest",
    "save_sequence",
    "scale_bucket",
    "solve_assignment",
    "stq",
    "synth_taxonomy",
    "track_distance",
    "validate_manifest",
]
