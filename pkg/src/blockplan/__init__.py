"""blockplan: turn a triangle mesh (or a text request) into a feasible
cube-component assembly plan and a robot toolpath.

The pipeline stages, in order:

1. frontend  - extract a physical-object phrase from free text
2. mesh_io   - parse, repair, and serialize STL / OBJ meshes
3. discretizer - fit a mesh to the workspace and voxelize it
4. feasibility - run buildability checks and rewrite failing designs
5. sequencer - order the cells so every placement rests on support
6. toolpath  - emit pick-and-place motion commands with timing
7. validator - replay a plan step by step and cross-check the report
"""
from __future__ import annotations

from .checks import CheckKind, CheckResult, CheckStatus
from .config import AssemblyConfig, Inventory
from .discretizer import (
    DEFAULT_CELL_SIZE,
    GridSpec,
    OccupancyGrid,
    Workspace,
    build_grid,
    component_count,
    fit_to_workspace,
    voxelize,
)
from .errors import (
    BlockplanError,
    CannotFit,
    ClientUnavailable,
    ConfigViolation,
    EmptyAfterModification,
    EmptyAssembly,
    EmptyMesh,
    MalformedFile,
    SchemaError,
    SequenceGridMismatch,
    UnsupportedFormat,
    Unsequenceable,
)
from .feasibility import (
    FeasibilityReport,
    check_component_count,
    check_overhang,
    check_vertical_stack,
    remove_overhangs,
    rescale_until_fits,
    run_feasibility,
    truncate_stacks,
)
from .frontend import (
    GuidedPrompt,
    LanguageModelClient,
    MeshGeneratorClient,
    MockMeshGenerator,
    ObjectRequest,
    Rejection,
    acquire_mesh,
    fallback_filter,
    filter_request,
)
from .mesh_io import (
    MeshFormat,
    RepairSummary,
    TriangleMesh,
    bounding_box,
    is_manifold,
    parse_mesh,
    repair_mesh,
    serialize_mesh,
)
from .sequencer import (
    AssemblySequence,
    check_sequence_connectivity,
    connectivity_sort,
    naive_sort,
)
from .toolpath import (
    Command,
    CommandOp,
    MotionParams,
    SpeedRatio,
    Toolpath,
    calibration_schedule,
    emit_toolpath,
    estimate_duration,
    parse_toolpath,
    plan_toolpath,
)
from .validator import (
    PlacementStep,
    SimulationReport,
    simulate_assembly,
    verify_report_consistency,
)

__version__ = "0.1.0"

__all__ = [
    "AssemblyConfig",
    "AssemblySequence",
    "BlockplanError",
    "CannotFit",
    "CheckKind",
    "CheckResult",
    "CheckStatus",
    "ClientUnavailable",
    "Command",
    "CommandOp",
    "ConfigViolation",
    "DEFAULT_CELL_SIZE",
    "EmptyAfterModification",
    "EmptyAssembly",
    "EmptyMesh",
    "FeasibilityReport",
    "GridSpec",
    "GuidedPrompt",
    "Inventory",
    "LanguageModelClient",
    "MalformedFile",
    "MeshFormat",
    "MeshGeneratorClient",
    "MockMeshGenerator",
    "MotionParams",
    "ObjectRequest",
    "OccupancyGrid",
    "PlacementStep",
    "Rejection",
    "RepairSummary",
    "SchemaError",
    "SequenceGridMismatch",
    "SimulationReport",
    "SpeedRatio",
    "Toolpath",
    "TriangleMesh",
    "UnsupportedFormat",
    "Unsequenceable",
    "Workspace",
    "acquire_mesh",
    "bounding_box",
    "build_grid",
    "calibration_schedule",
    "check_component_count",
    "check_overhang",
    "check_sequence_connectivity",
    "check_vertical_stack",
    "component_count",
    "connectivity_sort",
    "emit_toolpath",
    "estimate_duration",
    "fallback_filter",
    "filter_request",
    "fit_to_workspace",
    "is_manifold",
    "naive_sort",
    "parse_mesh",
    "parse_toolpath",
    "plan_toolpath",
    "remove_overhangs",
    "repair_mesh",
    "rescale_until_fits",
    "run_feasibility",
    "serialize_mesh",
    "simulate_assembly",
    "truncate_stacks",
    "verify_report_consistency",
    "voxelize",
    "__version__",
]
