pub mod coreset_tree;
pub mod data;
pub mod error;
pub mod extent;
pub mod geometry;
pub mod index;
pub mod kcenter;
pub mod median;
pub mod persistent;
pub mod projection;
pub mod quadtree;
pub mod range_tree;
pub mod solvers;
pub mod validate;

pub use error::{Error, Result};
pub use geometry::{
    classify_box, classify_cell, AxisSet, CellId, Classification, FaceClass, LeafKey, Normalizer, Point,
    Rect, StandardLength, WeightedPoint, MAX_DIM, MAX_LEVEL,
};
pub use data::{GenSpec, Mixture};
pub use extent::ExtentAnswer;
pub use index::{BuildParams, BuildStats, Meter, RangeIndex};
pub use median::{ClusteringAnswer, Coreset, QueryOptions};
pub use solvers::{Objective, SolverTag};
