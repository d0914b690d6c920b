"""Signer clustering, leakage-free splits, and pose-based sign detection."""

from .clustering import (
    NOISE,
    DbscanParams,
    PointKind,
    PointLabeling,
    SweepRow,
    assign_videos,
    best_sweep_row,
    clustering_accuracy,
    dbscan,
    epsilon_sweep,
    sample_gallery,
)
from .detector import (
    FRAME,
    SEGMENT,
    DetectorConfig,
    DetectorModel,
    EvalResult,
    TrainConfig,
    evaluate,
    forward,
    init_model,
    load_checkpoint,
    loss_and_gradients,
    relative_decrease,
    save_checkpoint,
    train,
)
from .experiment import (
    ExperimentResult,
    ExperimentSummary,
    overlap_experiment,
    pose_features,
    run_overlap_experiments,
)
from .features import (
    FLOW_DIM,
    FlowSequence,
    LabeledFeatures,
    Segment,
    label_frames,
    landmark_flow,
    load_frame_features,
    load_segments,
    make_segments,
    normalize_pose,
    save_frame_features,
    save_segments,
)
from .io import (
    load_assignment,
    load_embeddings,
    load_gallery_selection,
    load_manifest,
    load_poses,
    load_split,
    save_assignment,
    save_embeddings,
    save_gallery_selection,
    save_manifest,
    save_poses,
    save_split,
)
from .partitioning import (
    OverlapReport,
    SplitRequest,
    TestSubdivision,
    VideoOverlapReport,
    audit_signer_overlap,
    audit_video_overlap,
    signer_disjoint_split,
    split_stats,
    split_test_by_overlap,
    video_disjoint_split,
)
from .synth import gallery_manifest, synth_embeddings, synth_pose_dataset
from .types import (
    EMBEDDING_DIM,
    EXCLUDE,
    GARBAGE,
    N_LANDMARKS,
    TRAIN_ONLY,
    ClusterAssignment,
    DatasetManifest,
    EmbeddingTable,
    PoseSequence,
    Provenance,
    Span,
    SplitDefinition,
    SynthConfig,
    VideoRecord,
    assignment_from_labels,
)

__version__ = "0.1.0"
