"""Incremental structure-from-motion: sparse geometry from 2D tracks."""

from .ba import BaConfig, BaReport, BundleProblem, bundle_adjust
from .dem import DemGrid, EmptyCloud, build_dem, read_esri_ascii, write_esri_ascii
from .geometry import (
    RansacConfig,
    decompose_essential,
    estimate_essential,
    sampson_distance,
    solve_pnp,
    triangulate,
)
from .io import load_intrinsics, load_tracks, save_intrinsics, save_tracks
from .model import (
    CameraIntrinsics,
    CameraPose,
    CheiralityAmbiguous,
    DegenerateConfiguration,
    DegenerateGeometry,
    FeatureTrack,
    InsufficientBaseline,
    NegativeDepth,
    NoValidSeedPair,
    PointAtInfinity,
    Reconstruction,
    ReconstructionCollapsed,
    SfmError,
    SingularNormalEquations,
    TooFewCorrespondences,
    TooFewPoints,
)
from .pipeline import SfmConfig, incremental_sfm
from .synth import SceneConfig, align_similarity, synthesize_scene

__all__ = [
    "BaConfig", "BaReport", "BundleProblem", "bundle_adjust",
    "DemGrid", "EmptyCloud", "build_dem", "read_esri_ascii", "write_esri_ascii",
    "RansacConfig", "decompose_essential", "estimate_essential",
    "sampson_distance", "solve_pnp", "triangulate",
    "load_intrinsics", "load_tracks", "save_intrinsics", "save_tracks",
    "CameraIntrinsics", "CameraPose", "CheiralityAmbiguous",
    "DegenerateConfiguration", "DegenerateGeometry", "FeatureTrack",
    "InsufficientBaseline", "NegativeDepth", "NoValidSeedPair",
    "PointAtInfinity", "Reconstruction", "ReconstructionCollapsed",
    "SfmError", "SingularNormalEquations", "TooFewCorrespondences",
    "TooFewPoints",
    "SfmConfig", "incremental_sfm",
    "SceneConfig", "align_similarity", "synthesize_scene",
]
