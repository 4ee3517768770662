"""Assembly-level configuration shared by the planning stages."""
from __future__ import annotations

from dataclasses import dataclass, field

from .discretizer import DEFAULT_CELL_SIZE, Workspace

DEFAULT_INVENTORY = 40
DEFAULT_OVERHANG_LIMIT = 3  # unsupported same-layer steps from a supported cell
DEFAULT_STACK_LIMIT = 4  # tallest free-standing column kept
DEFAULT_CLEARANCE = 2.0  # cm between the travel plane and the tallest stack
DEFAULT_MOVEMENT_PLANE_Z = 65.0  # cm, above the 60 cm workspace plus clearance
DEFAULT_SOURCE = (-15.0, -15.0, 10.0)  # cm, pick-up point outside the build area


@dataclass(frozen=True)
class Inventory:
    """How many physical components the robot can draw from."""

    available_components: int = DEFAULT_INVENTORY

    def __post_init__(self) -> None:
        if self.available_components < 1:
            raise ValueError("inventory must hold at least one component")


@dataclass(frozen=True)
class AssemblyConfig:
    """Workspace geometry and robot parameters for one build.

    ``movement_plane_z`` must clear the workspace by ``clearance`` and
    ``source`` must sit outside the assembly footprint; both are enforced
    when a toolpath is planned, where the occupied cells are known.
    """

    workspace: Workspace = field(default_factory=Workspace)
    cell_size: float = DEFAULT_CELL_SIZE
    inventory: Inventory = field(default_factory=Inventory)
    source: tuple[float, float, float] = DEFAULT_SOURCE
    movement_plane_z: float = DEFAULT_MOVEMENT_PLANE_Z
    clearance: float = DEFAULT_CLEARANCE
    overhang_limit: int = DEFAULT_OVERHANG_LIMIT
    stack_limit: int = DEFAULT_STACK_LIMIT
    tool_offset_z: float = 0.0
    max_upscale: float | None = 1.0

    def __post_init__(self) -> None:
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if any(e < self.cell_size for e in self.workspace.extent):
            raise ValueError("workspace must fit at least one component per axis")
        if self.clearance < 0:
            raise ValueError("clearance must be >= 0")
        if self.overhang_limit < 0 or self.stack_limit < 1:
            raise ValueError("overhang_limit >= 0 and stack_limit >= 1 required")
