//! Nonparametric snake segmentation solved as a linear program.
//!
//! Pipeline: [`imagecore`] rasters and synthetic shapes, [`edgemap`] gradient
//! maps and point sampling, [`lpbuild`] model assembly, [`ipsolve`] the
//! affine-scaling solver, [`segment`] contour extraction and masks, and
//! [`evaluate`] Dice scoring.

pub mod edgemap;
pub mod evaluate;
pub mod imagecore;
pub mod ipsolve;
pub mod lp;
pub mod lpbuild;
pub mod segment;
