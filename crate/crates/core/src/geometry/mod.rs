//! Nucleus shapes, field layouts, rasterization, and mask morphology.

pub mod bspline;
pub mod layout;
pub mod morph;
pub mod poly;
pub mod raster;
pub mod shape;

pub use bspline::smooth_boundary_bspline;
pub use layout::{
    generate_layout, min_boundary_clearance, sample_target_count, site_capacity, FieldLayout,
    LayoutParams, NucleusInstance, TissueClass, CLEARANCE,
};
pub use morph::{nearest_seed_transform, perturb_mask, PerturbedMask};
pub use poly::{regular_polygon, Point};
pub use raster::{polygon_pixels, rasterize_mask, InstanceMask};
pub use shape::{build_boundary, sample_nucleus_boundary, AREA_MAX, AREA_MIN, KNOT_SPACING};
