"""One-shot registration of LiDAR submaps against 2D building wall models."""

from .config import PipelineConfig, make_config, parse_config_file
from .descriptors import (
    CornerTriplet,
    DescriptorDB,
    TriangleDescriptor,
    TripletCorrespondence,
    build_db,
    build_triplets,
    deserialize_db,
    make_descriptor,
    query_correspondences,
    serialize_db,
)
from .errors import (
    DegenerateTriplet,
    EmptyGrid,
    EmptyModel,
    EmptyScene,
    EmptySubmap,
    NoCandidates,
    ParseError,
    ResolutionMismatch,
    Scan2PlanError,
)
from .geometry import (
    LineSegment2,
    Se2Pose,
    normalize_angle,
    pose_errors,
    registration_success,
    se2_apply,
    solve_se2,
    solve_se2_batch,
)
from .ingest import (
    ScanSequence,
    Submap,
    WallModel,
    accumulate_submap,
    load_pose,
    load_submap,
    load_wall_model,
    load_wall_models,
    save_pose,
    save_submap,
    save_wall_model,
    save_wall_models,
    voxel_downsample,
)
from .lines import (
    BevRaster,
    Corner,
    detect_segments,
    extract_corners,
    merge_refit,
    model_corners,
    rasterize_points,
    rasterize_segments,
)
from .pipeline import (
    FAILURE_CONFIDENCE,
    EvalSummary,
    FloorIndex,
    RegistrationReport,
    SceneOutcome,
    SubmapFeatures,
    build_floor_index,
    evaluate_scenes,
    extract_submap_features,
    pr_from_directories,
    register_directory,
    register_features,
    register_submap,
    write_eval_csv,
    write_pr_csv,
)
from .planes import PlanarPatch, classify_patches, merge_patches, segment_planes
from .synthetic import (
    FloorLayout,
    SyntheticScene,
    generate_floorplan,
    generate_layout,
    random_interior_pose,
    synthesize_submap,
)
from .verify import (
    ScoreField,
    ScoreResult,
    build_score_field,
    reliability_curve,
    score_candidate,
    select_best,
)
from .voting import Candidate, VoteGrid, cast_votes, hierarchical_vote, vanilla_vote

__version__ = "0.1.0"
