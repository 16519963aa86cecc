"""Geometric and raster algorithms behind the labeling tools."""

from .booleans import (
    region_clip,
    region_subtract,
    region_union,
    repair_ring,
    ring_interior_point,
)
from .brush import BrushParams, brush_stroke_to_region
from .contours import trace_contours
from .flood import FloodParams, flood_mask, flood_region, gaussian_blur
from .images import image_size, load_rgb
from .primitives import (
    Point,
    Polygon,
    Region,
    bounding_box,
    point_in_region,
    point_segment_distance,
    polygon_area,
    signed_ring_area,
)
from .raster import Mask, new_mask, rasterize
from .rle import Rle, rle_decode, rle_encode
from .simplify import dedupe_consecutive, should_autoclose, simplify_stroke

__all__ = [
    "BrushParams",
    "FloodParams",
    "Mask",
    "Point",
    "Polygon",
    "Region",
    "Rle",
    "bounding_box",
    "brush_stroke_to_region",
    "dedupe_consecutive",
    "flood_mask",
    "flood_region",
    "gaussian_blur",
    "image_size",
    "load_rgb",
    "new_mask",
    "point_in_region",
    "point_segment_distance",
    "polygon_area",
    "rasterize",
    "region_clip",
    "region_subtract",
    "region_union",
    "repair_ring",
    "ring_interior_point",
    "rle_decode",
    "rle_encode",
    "should_autoclose",
    "signed_ring_area",
    "simplify_stroke",
    "trace_contours",
]
