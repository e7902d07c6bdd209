//! Frank-Wolfe solvers over products of V-represented polytopes, a
//! polytope-intersection feasibility solver built on a pairwise-distance
//! objective, and a brute-force condition-number toolkit for pyramidal
//! widths and vertex-facet distances.

pub mod condnum;
pub mod experiment;
pub mod faces;
pub mod feasibility;
pub mod instance;
pub mod objective;
pub mod polytope;
pub mod simplex;
pub mod solvers;
pub mod verify;
pub mod vecops;

pub use faces::{enumerate_proper_faces, facets, is_face, product_faces, Face, FaceError};
pub use objective::{
    DenseQuadratic, IntersectionObjective, ObjectiveError, SmoothObjective, SquaredNorm,
};
pub use polytope::{affine_hull, AffineSubspace, PolytopeError, ProductPolytope, VPolytope};
pub use solvers::{
    exact_line_search_quadratic, fw_gap, run_afw, run_alm, run_cbc_fw, run_fw, short_step,
    write_trace_csv, ActiveIterate, AfwState, AlmOutput, CbcOutput, SolveOutput, SolverConfig,
    SolverError, StepRecord, StepRule, StepType,
};
