"""Geometric post-processing and evaluation for scene graphs."""

from .errors import (
    CategoryConflict,
    CrossSceneMerge,
    DegenerateBox,
    EmptyGroundTruth,
    GeoSceneError,
    LayoutOverflow,
    MissingPredicate,
    OutOfRange,
    ProtocolViolation,
    SchemaError,
    UnknownPredicate,
)
from .geometry import (
    BucketMode,
    Direction,
    GeoParams,
    Proximity,
    RefBoxMode,
    centroid,
    classify_direction,
    classify_proximity,
    direction_angle,
    geometric_relations,
    l2_distance,
)
from .metrics import (
    EvalMode,
    EvalReport,
    Task,
    apply_constraint,
    evaluate_dataset,
    iou,
    match_triplets,
    mean_recall_at_k,
    per_predicate_report,
    recall_at_k,
)
from .model import (
    GEOMETRIC_EXTENSION,
    BoundingBox,
    ObjectInstance,
    Point,
    PredicateVocabulary,
    RelationCategory,
    SceneGraph,
    Triplet,
    TripletSource,
    categorize_predicate,
    extend_vocabulary,
)
from .refine import (
    RefineConfig,
    compute_geo_triplets,
    merge_triplets,
    refine_scene_graph,
)
from .synthgen import Layout, SynthSpec, generate_scene
from .vg_io import (
    default_vocabulary,
    export_dot,
    load_ground_truth,
    load_scene_dump,
    load_vocabulary,
    write_refined,
)

__version__ = "0.1.0"
