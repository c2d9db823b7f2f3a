"""Task/resource incidence structures and geometric families."""
from .core import ExtendResult, SetSystemInstance, disjoint_union, restrict, select_resources
from .extend import (
    DISK_GRID_POINTS,
    DISK_LAMBDA,
    LINE_LAMBDA,
    RECTANGLE_LAMBDA,
    TREE_LAMBDA,
    extend,
    extend_explicit,
    extend_fat,
    extend_line,
    extend_rectangles,
    extend_tree,
    q_points,
    steiner_subtree,
)
from .geometry import (
    FAMILIES,
    DiskFamily,
    LineFamily,
    PlaneArrangement,
    RectangleFamily,
    TreeFamily,
    materialize,
)

__all__ = [
    "ExtendResult",
    "SetSystemInstance",
    "disjoint_union",
    "restrict",
    "select_resources",
    "DISK_GRID_POINTS",
    "DISK_LAMBDA",
    "LINE_LAMBDA",
    "RECTANGLE_LAMBDA",
    "TREE_LAMBDA",
    "extend",
    "extend_explicit",
    "extend_fat",
    "extend_line",
    "extend_rectangles",
    "extend_tree",
    "q_points",
    "steiner_subtree",
    "FAMILIES",
    "DiskFamily",
    "LineFamily",
    "PlaneArrangement",
    "RectangleFamily",
    "TreeFamily",
    "materialize",
]
