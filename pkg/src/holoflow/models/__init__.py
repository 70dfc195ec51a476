"""Model geometries: periodic grids, left-invariant metrics, symmetric spaces."""
from .base import FrameGeometry, gram_schmidt_frames, lowdin
from .config import KINDS, build_model, trig_series, trig_series_2d
from .grid import (
    GridGeometry,
    PeriodicGrid,
    conformal_t2,
    flat_torus,
    from_metric_function,
    warped_t3,
)
from .lie import LieGeometry, berger_sphere, milnor_ricci, round_s3, su2_structure_constants
from .loops import (
    great_arc,
    holonomy_log,
    loop_holonomy,
    octant_triangle,
    path_holonomy,
    rectangle_loop,
    rotation_angle,
    stereographic_polygon,
)
from .symmetric import SymmetricGeometry, product, product_chart, round_sphere, s2xs2

__all__ = [
    "FrameGeometry",
    "GridGeometry",
    "KINDS",
    "LieGeometry",
    "PeriodicGrid",
    "SymmetricGeometry",
    "berger_sphere",
    "build_model",
    "conformal_t2",
    "flat_torus",
    "from_metric_function",
    "gram_schmidt_frames",
    "great_arc",
    "holonomy_log",
    "loop_holonomy",
    "lowdin",
    "milnor_ricci",
    "octant_triangle",
    "path_holonomy",
    "product",
    "product_chart",
    "rectangle_loop",
    "rotation_angle",
    "round_s3",
    "round_sphere",
    "s2xs2",
    "stereographic_polygon",
    "su2_structure_constants",
    "trig_series",
    "trig_series_2d",
    "warped_t3",
]
